#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "tdf/metrics.hpp"
#include "tdf/pipeline.hpp"

namespace tdf {

// Run manifest: config echo, per-iteration tallies, kb sizes, and one outcome
// record per item (id, verdict, iteration, y1, c1, y2, c2, matched_id,
// similarity) in stable field order.
nlohmann::ordered_json manifest_json(const FilterReport& report);
std::string manifest_text(const FilterReport& report);
FilterReport manifest_from_json(const nlohmann::json& doc);
FilterReport load_manifest_file(const std::string& path);

nlohmann::ordered_json metrics_json(const MetricsResult& m, std::int64_t deferred);
nlohmann::ordered_json comparison_json(const std::vector<ComparisonRow>& rows,
                                       const std::string& dataset_label = "-",
                                       const std::string& model_label = "-");

void write_text_file(const std::string& path, const std::string& content);

}  // namespace tdf
