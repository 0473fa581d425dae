#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tdf/decision_tree.hpp"
#include "tdf/evaluators.hpp"
#include "tdf/knowledge.hpp"
#include "tdf/vector_index.hpp"

namespace tdf {

enum class FilterMode { basic, self_nli, fake };

const char* to_string(FilterMode mode);
FilterMode filter_mode_from_string(const std::string& name);

struct IndexParams {
    IndexMode mode = IndexMode::flat;
    IvfParams ivf;
};

struct FilterConfig {
    FilterMode mode = FilterMode::self_nli;
    double threshold = 0.85;
    int max_iterations = 5;
    int parallelism = 8;
    std::uint64_t seed = 0;
    TreeParams tree;
    IndexParams index;
};

enum class Verdict { accepted, rejected, deferred_final };

const char* to_string(Verdict verdict);

struct ItemOutcome {
    std::string id;
    Verdict verdict;
    int iteration = 0;
    std::optional<EvalRecord> eval;
    std::optional<std::string> matched_id;  // fake mode: the distractor id
    std::optional<double> similarity;
    std::optional<DecisionPath> path;
};

struct IterationTally {
    int iteration = 0;
    std::int64_t processed = 0;
    std::int64_t matched = 0;
    std::int64_t accepted = 0;
    std::int64_t rejected = 0;
    std::int64_t deferred = 0;
};

// Every input item lands in outcomes exactly once, in input order;
// accepted + rejected + deferred_final always sums to the input size.
struct FilterReport {
    FilterConfig config;
    std::vector<IterationTally> iterations;
    std::vector<std::size_t> kb_size_by_iteration;
    std::vector<ItemOutcome> outcomes;
};

// The evaluator bundle a run talks to.
struct EvaluatorSet {
    ConfidenceClient* confidence = nullptr;
    NliClient* nli = nullptr;
    PromptTemplate prompt = default_prompt_template();
    int retries = 2;
};

// Embeds and inserts every trusted item; final count equals the input size.
void initialize_kb(TrustedIndex& index, const std::vector<KnowledgeItem>& trusted_items,
                   Embedder& embedder);

// Feature generation for tree training: per item, the confidence verdict plus
// the contradiction verdict against the best trusted match ((y2, c2) = (-1, 0)
// when nothing clears the threshold), paired with the gold flag.
std::pair<std::vector<EvalRecord>, std::vector<int>> build_training_features(
    const std::vector<KnowledgeItem>& train_items, const TrustedIndex& kb,
    const EvaluatorSet& evaluators, const FilterConfig& config, Embedder& embedder);

// Single confidence-only pass: verdict = y1, no knowledge base, no tree.
FilterReport run_basic(const std::vector<KnowledgeItem>& items, const EvaluatorSet& evaluators,
                       const FilterConfig& config);

// The iterative filtering loop for self_nli and fake modes. Accepted items
// are inserted into the knowledge base immediately (self_nli), so they are
// matchable by later items of the same round; unmatched items defer to the
// next round and become deferred_final when rounds run out.
FilterReport run_filter(const std::vector<KnowledgeItem>& items, TrustedIndex& kb,
                        const DecisionTree& tree, const EvaluatorSet& evaluators,
                        const FilterConfig& config, Embedder& embedder,
                        const std::vector<KnowledgeItem>* distractor_pool = nullptr);

// Ablation matching: a uniform seeded draw from the distractor pool, keyed by
// (seed, item id); always "matches", no threshold test.
TrustedEntry fake_match(const KnowledgeItem& item, const std::vector<KnowledgeItem>& pool,
                        std::uint64_t seed, Embedder& embedder);

}  // namespace tdf
