#pragma once

#include <map>
#include <string>

#include "tdf/pipeline.hpp"

namespace tdf {

// Flat key=value config document ('#' starts a comment, blank lines ignored).
// Keys mirror the run configuration: mode, threshold, max_iterations,
// parallelism, seed, index, nlist, nprobe, tree_max_depth,
// tree_min_samples_leaf. Unknown keys are a config error.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> load_config_file(const std::string& path);

// Applies config-file values onto defaults. CLI flags and TDF_* environment
// variables are layered on top by the CLI itself.
void apply_config_values(FilterConfig& config, const std::map<std::string, std::string>& values);

}  // namespace tdf
