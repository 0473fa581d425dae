#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace tdf {

// The four fused evaluation signals, treated as numeric features in the
// fixed order (y1, c1, y2, c2).
struct EvalRecord {
    int y1;     // 0 | 1
    double c1;  // [0, 1]
    int y2;     // -1 | 0 | 1
    double c2;  // [0, 1]

    static constexpr int kFeatureCount = 4;
    static const std::array<const char*, 4> kFeatureNames;

    double feature(int index) const;
};

// Binary Gini impurity 1 - sum((n_i/n)^2), in [0, 0.5]. Throws
// TdfError{undefined_impurity} when both counts are zero.
double gini(std::int64_t count0, std::int64_t count1);

struct TreeParams {
    int max_depth = 6;
    int min_samples_leaf = 5;
};

struct PathStep {
    int feature;
    double threshold;
    bool went_left;  // true: feature <= threshold

    std::string to_string() const;
};

// The exact sequence of comparisons a record takes, plus the leaf verdict.
struct DecisionPath {
    std::vector<PathStep> steps;
    int verdict;

    std::string to_string() const;
};

// CART-style binary classifier fusing (y1, c1, y2, c2) into the final
// accept/reject verdict z.
class DecisionTree {
public:
    struct Node {
        bool is_leaf;
        // internal nodes
        int feature = -1;
        double threshold = 0.0;
        int left = -1;   // indices into nodes(); preorder layout
        int right = -1;
        // leaves
        int verdict = 1;
        std::array<std::int64_t, 2> class_counts{0, 0};
    };

    // Greedy recursive partitioning: candidate thresholds are midpoints
    // between consecutive distinct sorted feature values, the split with
    // minimal weighted child Gini wins, ties go to the lower feature index
    // then the lower threshold. Recursion stops on purity, max_depth, or
    // min_samples_leaf; leaf verdict is the majority class, ties accept.
    static DecisionTree train(const std::vector<EvalRecord>& records,
                              const std::vector<int>& labels, TreeParams params = {});

    int predict(const EvalRecord& record) const;
    DecisionPath explain(const EvalRecord& record) const;

    const std::vector<Node>& nodes() const { return nodes_; }
    TreeParams params() const { return params_; }
    int depth() const;

    // Snapshot: one JSON line per node, preorder; a loaded tree reproduces
    // bit-identical predictions.
    void save(std::ostream& out) const;
    static DecisionTree load(std::istream& in);

private:
    std::vector<Node> nodes_;
    TreeParams params_;
};

}  // namespace tdf
