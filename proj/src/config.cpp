#include "tdf/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "tdf/errors.hpp"

namespace tdf {

namespace {

std::string trim(const std::string& s) {
    auto begin = s.begin();
    auto end = s.end();
    while (begin != end && std::isspace(static_cast<unsigned char>(*begin))) ++begin;
    while (end != begin && std::isspace(static_cast<unsigned char>(*(end - 1)))) --end;
    return std::string(begin, end);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    std::istringstream in(value);
    T parsed{};
    in >> parsed;
    if (in.fail() || !in.eof()) {
        throw TdfError(ErrorKind::config, "bad value for '" + key + "': '" + value + "'");
    }
    return parsed;
}

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> values;
    std::istringstream in(text);
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw TdfError(ErrorKind::config, "expected key=value", line_no);
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty()) {
            throw TdfError(ErrorKind::config, "empty key", line_no);
        }
        values[key] = value;
    }
    return values;
}

std::map<std::string, std::string> load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw TdfError(ErrorKind::config, "cannot open config file '" + path + "'");
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

void apply_config_values(FilterConfig& config, const std::map<std::string, std::string>& values) {
    for (const auto& [key, value] : values) {
        if (key == "mode") {
            config.mode = filter_mode_from_string(value);
        } else if (key == "threshold") {
            config.threshold = parse_number<double>(key, value);
        } else if (key == "max_iterations") {
            config.max_iterations = parse_number<int>(key, value);
        } else if (key == "parallelism") {
            config.parallelism = parse_number<int>(key, value);
        } else if (key == "seed") {
            config.seed = parse_number<std::uint64_t>(key, value);
        } else if (key == "index") {
            if (value == "flat") {
                config.index.mode = IndexMode::flat;
            } else if (value == "ivf") {
                config.index.mode = IndexMode::ivf;
            } else {
                throw TdfError(ErrorKind::config, "index must be flat or ivf, got '" + value + "'");
            }
        } else if (key == "nlist") {
            config.index.ivf.nlist = parse_number<std::size_t>(key, value);
        } else if (key == "nprobe") {
            config.index.ivf.nprobe = parse_number<std::size_t>(key, value);
        } else if (key == "tree_max_depth") {
            config.tree.max_depth = parse_number<int>(key, value);
        } else if (key == "tree_min_samples_leaf") {
            config.tree.min_samples_leaf = parse_number<int>(key, value);
        } else {
            throw TdfError(ErrorKind::config, "unknown config key '" + key + "'");
        }
    }
}

}  // namespace tdf
