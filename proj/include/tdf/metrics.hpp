#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tdf/pipeline.hpp"

namespace tdf {

struct ConfusionMatrix {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    std::int64_t tn = 0;

    std::int64_t total() const { return tp + fp + fn + tn; }
};

// Confusion counts over scored (accepted/rejected) outcomes; deferred items
// are excluded and surfaced as a separate count.
struct ScoredConfusion {
    ConfusionMatrix cm;
    std::int64_t deferred = 0;
};

// Prediction 1 <=> accepted, against gold flags. Throws consistency on
// outcomes referencing unknown ids and validation on scored items without a
// gold flag.
ScoredConfusion confusion(const std::vector<ItemOutcome>& outcomes,
                          const std::vector<KnowledgeItem>& items);

// Zero-denominator metrics come back 0.0 with the degenerate flag set, so
// comparison tables never see NaNs.
struct MetricsResult {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool precision_degenerate = false;
    bool recall_degenerate = false;
    bool f1_degenerate = false;
};

MetricsResult metrics(const ConfusionMatrix& cm);

struct ComparisonRow {
    std::string mode;
    MetricsResult metrics;
    std::int64_t deferred = 0;
    // Deltas against the basic row; absent when no basic run is present or
    // for the basic row itself.
    std::optional<double> delta_accuracy;
    std::optional<double> delta_precision;
    std::optional<double> delta_recall;
    std::optional<double> delta_f1;
};

// One row per report, ordered basic, fake, self_nli. All reports must cover
// the identical item id set (consistency error otherwise).
std::vector<ComparisonRow> compare_modes(const std::vector<const FilterReport*>& reports,
                                         const std::vector<KnowledgeItem>& items);

std::string render_comparison_text(const std::vector<ComparisonRow>& rows,
                                   const std::string& dataset_label = "-",
                                   const std::string& model_label = "-");

}  // namespace tdf
