#include "tdf/decision_tree.hpp"

#include <algorithm>
#include <istream>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "tdf/errors.hpp"

namespace tdf {

const std::array<const char*, 4> EvalRecord::kFeatureNames = {"y1", "c1", "y2", "c2"};

double EvalRecord::feature(int index) const {
    switch (index) {
        case 0: return static_cast<double>(y1);
        case 1: return c1;
        case 2: return static_cast<double>(y2);
        case 3: return c2;
        default:
            throw TdfError(ErrorKind::validation, "feature index out of range");
    }
}

double gini(std::int64_t count0, std::int64_t count1) {
    if (count0 < 0 || count1 < 0) {
        throw TdfError(ErrorKind::validation, "negative class count");
    }
    const std::int64_t total = count0 + count1;
    if (total == 0) {
        throw TdfError(ErrorKind::undefined_impurity, "impurity of an empty node is undefined");
    }
    const double p0 = static_cast<double>(count0) / static_cast<double>(total);
    const double p1 = static_cast<double>(count1) / static_cast<double>(total);
    return 1.0 - (p0 * p0 + p1 * p1);
}

std::string PathStep::to_string() const {
    std::string out = EvalRecord::kFeatureNames[feature];
    out += went_left ? " <= " : " > ";
    out += nlohmann::json(threshold).dump();
    return out;
}

std::string DecisionPath::to_string() const {
    std::string out;
    for (const auto& step : steps) {
        if (!out.empty()) out += " and ";
        out += step.to_string();
    }
    if (out.empty()) out = "(root)";
    out += " -> ";
    out += verdict == 1 ? "accept" : "reject";
    return out;
}

namespace {

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double weighted_gini = std::numeric_limits<double>::infinity();
};

// Candidate enumeration shared by training. Thresholds are midpoints between
// consecutive distinct values; children below min_samples_leaf are skipped.
SplitChoice best_split(const std::vector<EvalRecord>& records, const std::vector<int>& labels,
                       const std::vector<std::size_t>& subset, int min_samples_leaf) {
    SplitChoice best;
    const std::size_t n = subset.size();

    std::vector<std::pair<double, int>> column(n);
    for (int feature = 0; feature < EvalRecord::kFeatureCount; ++feature) {
        for (std::size_t i = 0; i < n; ++i) {
            column[i] = {records[subset[i]].feature(feature), labels[subset[i]]};
        }
        std::sort(column.begin(), column.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });

        std::int64_t left0 = 0, left1 = 0;
        std::int64_t total0 = 0, total1 = 0;
        for (const auto& [value, label] : column) {
            (label == 0 ? total0 : total1) += 1;
        }

        for (std::size_t i = 0; i + 1 < n; ++i) {
            (column[i].second == 0 ? left0 : left1) += 1;
            if (column[i].first == column[i + 1].first) continue;

            const std::int64_t left_count = left0 + left1;
            const std::int64_t right_count = static_cast<std::int64_t>(n) - left_count;
            if (left_count < min_samples_leaf || right_count < min_samples_leaf) continue;

            const double threshold = column[i].first + (column[i + 1].first - column[i].first) / 2.0;
            const double weighted =
                (static_cast<double>(left_count) * gini(left0, left1) +
                 static_cast<double>(right_count) * gini(total0 - left0, total1 - left1)) /
                static_cast<double>(n);

            const bool better =
                !best.found || weighted < best.weighted_gini ||
                (weighted == best.weighted_gini &&
                 (feature < best.feature ||
                  (feature == best.feature && threshold < best.threshold)));
            if (better) {
                best = SplitChoice{true, feature, threshold, weighted};
            }
        }
    }
    return best;
}

}  // namespace

DecisionTree DecisionTree::train(const std::vector<EvalRecord>& records,
                                 const std::vector<int>& labels, TreeParams params) {
    if (records.empty()) {
        throw TdfError(ErrorKind::size, "cannot train on an empty record set");
    }
    if (records.size() != labels.size()) {
        throw TdfError(ErrorKind::shape, "records and labels differ in length: " +
                                             std::to_string(records.size()) + " vs " +
                                             std::to_string(labels.size()));
    }
    if (records.size() < 2) {
        throw TdfError(ErrorKind::size, "need at least 2 records to train");
    }
    for (int label : labels) {
        if (label != 0 && label != 1) {
            throw TdfError(ErrorKind::validation, "labels must be 0 or 1");
        }
    }

    DecisionTree tree;
    tree.params_ = params;

    // Recursive preorder construction: a node's index precedes its children.
    auto build = [&](auto&& self, const std::vector<std::size_t>& subset, int depth) -> int {
        std::int64_t count0 = 0, count1 = 0;
        for (std::size_t i : subset) (labels[i] == 0 ? count0 : count1) += 1;

        const int node_index = static_cast<int>(tree.nodes_.size());
        tree.nodes_.emplace_back();

        auto make_leaf = [&] {
            Node& node = tree.nodes_[node_index];
            node.is_leaf = true;
            node.class_counts = {count0, count1};
            node.verdict = count1 >= count0 ? 1 : 0;  // tie accepts
        };

        if (count0 == 0 || count1 == 0 || depth >= params.max_depth) {
            make_leaf();
            return node_index;
        }
        const SplitChoice split = best_split(records, labels, subset, params.min_samples_leaf);
        if (!split.found) {
            make_leaf();
            return node_index;
        }

        std::vector<std::size_t> left_subset, right_subset;
        for (std::size_t i : subset) {
            if (records[i].feature(split.feature) <= split.threshold) {
                left_subset.push_back(i);
            } else {
                right_subset.push_back(i);
            }
        }

        tree.nodes_[node_index].is_leaf = false;
        tree.nodes_[node_index].feature = split.feature;
        tree.nodes_[node_index].threshold = split.threshold;
        const int left = self(self, left_subset, depth + 1);
        tree.nodes_[node_index].left = left;
        const int right = self(self, right_subset, depth + 1);
        tree.nodes_[node_index].right = right;
        return node_index;
    };

    std::vector<std::size_t> all(records.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    build(build, all, 0);
    return tree;
}

int DecisionTree::predict(const EvalRecord& record) const {
    if (nodes_.empty()) {
        throw TdfError(ErrorKind::validation, "tree is not trained");
    }
    int index = 0;
    while (!nodes_[index].is_leaf) {
        const Node& node = nodes_[index];
        index = record.feature(node.feature) <= node.threshold ? node.left : node.right;
    }
    return nodes_[index].verdict;
}

DecisionPath DecisionTree::explain(const EvalRecord& record) const {
    if (nodes_.empty()) {
        throw TdfError(ErrorKind::validation, "tree is not trained");
    }
    DecisionPath path;
    int index = 0;
    while (!nodes_[index].is_leaf) {
        const Node& node = nodes_[index];
        const bool left = record.feature(node.feature) <= node.threshold;
        path.steps.push_back(PathStep{node.feature, node.threshold, left});
        index = left ? node.left : node.right;
    }
    path.verdict = nodes_[index].verdict;
    return path;
}

int DecisionTree::depth() const {
    // Depth of the deepest leaf; the preorder layout lets us scan iteratively.
    if (nodes_.empty()) return 0;
    int max_depth = 0;
    auto walk = [&](auto&& self, int index, int depth) -> void {
        if (nodes_[index].is_leaf) {
            max_depth = std::max(max_depth, depth);
            return;
        }
        self(self, nodes_[index].left, depth + 1);
        self(self, nodes_[index].right, depth + 1);
    };
    walk(walk, 0, 0);
    return max_depth;
}

void DecisionTree::save(std::ostream& out) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Node& node = nodes_[i];
        nlohmann::ordered_json line;
        line["id"] = i;
        if (node.is_leaf) {
            line["kind"] = "leaf";
            line["verdict"] = node.verdict;
            line["counts"] = node.class_counts;
        } else {
            line["kind"] = "split";
            line["feature"] = node.feature;
            line["threshold"] = node.threshold;
            line["left"] = node.left;
            line["right"] = node.right;
        }
        out << line.dump() << '\n';
    }
}

DecisionTree DecisionTree::load(std::istream& in) {
    DecisionTree tree;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json parsed;
        try {
            parsed = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw TdfError(ErrorKind::parse, std::string("bad tree node: ") + e.what(), line_no);
        }
        Node node;
        const std::string kind = parsed.at("kind").get<std::string>();
        if (kind == "leaf") {
            node.is_leaf = true;
            node.verdict = parsed.at("verdict").get<int>();
            node.class_counts = parsed.at("counts").get<std::array<std::int64_t, 2>>();
        } else if (kind == "split") {
            node.is_leaf = false;
            node.feature = parsed.at("feature").get<int>();
            node.threshold = parsed.at("threshold").get<double>();
            node.left = parsed.at("left").get<int>();
            node.right = parsed.at("right").get<int>();
        } else {
            throw TdfError(ErrorKind::parse, "unknown node kind '" + kind + "'", line_no);
        }
        if (parsed.at("id").get<std::size_t>() != tree.nodes_.size()) {
            throw TdfError(ErrorKind::parse, "node ids must be sequential preorder", line_no);
        }
        tree.nodes_.push_back(node);
    }
    if (tree.nodes_.empty()) {
        throw TdfError(ErrorKind::parse, "empty tree snapshot", 1);
    }
    return tree;
}

}  // namespace tdf
