#include "tdf/knowledge.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "tdf/errors.hpp"
#include "tdf/rng.hpp"

namespace tdf {

namespace {

bool is_blank(const std::string& line) {
    return std::all_of(line.begin(), line.end(),
                       [](unsigned char c) { return std::isspace(c) != 0; });
}

bool trimmed_empty(const std::string& text) {
    return std::all_of(text.begin(), text.end(),
                       [](unsigned char c) { return std::isspace(c) != 0; });
}

KnowledgeItem parse_record(const std::string& line, std::size_t ordinal) {
    const long line_no = static_cast<long>(ordinal) + 1;
    nlohmann::json record;
    try {
        record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw TdfError(ErrorKind::parse, std::string("malformed record: ") + e.what(), line_no);
    }
    if (!record.is_object()) {
        throw TdfError(ErrorKind::parse, "record is not an object", line_no);
    }
    if (!record.contains("knowledge") || !record["knowledge"].is_string()) {
        throw TdfError(ErrorKind::parse, "missing string field 'knowledge'", line_no);
    }

    KnowledgeItem item;
    item.text = record["knowledge"].get<std::string>();
    if (trimmed_empty(item.text)) {
        throw TdfError(ErrorKind::validation, "empty knowledge", line_no);
    }

    if (record.contains("flag") && !record["flag"].is_null()) {
        if (!record["flag"].is_number_integer()) {
            throw TdfError(ErrorKind::validation, "flag outside {0,1}", line_no);
        }
        const long long flag = record["flag"].get<long long>();
        if (flag != 0 && flag != 1) {
            throw TdfError(ErrorKind::validation, "flag outside {0,1}", line_no);
        }
        item.gold_flag = static_cast<int>(flag);
    }

    if (record.contains("id") && !record["id"].is_null()) {
        if (!record["id"].is_string()) {
            throw TdfError(ErrorKind::parse, "id must be a string", line_no);
        }
        item.id = record["id"].get<std::string>();
    } else {
        item.id = std::to_string(ordinal);
    }
    return item;
}

}  // namespace

std::vector<KnowledgeItem> parse_dataset(const std::vector<std::string>& lines) {
    std::vector<KnowledgeItem> items;
    std::unordered_set<std::string> seen_ids;
    for (std::size_t ordinal = 0; ordinal < lines.size(); ++ordinal) {
        if (is_blank(lines[ordinal])) continue;
        KnowledgeItem item = parse_record(lines[ordinal], ordinal);
        if (!seen_ids.insert(item.id).second) {
            throw TdfError(ErrorKind::validation, "duplicate id '" + item.id + "'",
                           static_cast<long>(ordinal) + 1);
        }
        items.push_back(std::move(item));
    }
    return items;
}

std::vector<KnowledgeItem> parse_dataset_text(const std::string& text) {
    std::vector<std::string> lines;
    std::string line;
    std::istringstream in(text);
    while (std::getline(in, line)) lines.push_back(line);
    return parse_dataset(lines);
}

std::vector<KnowledgeItem> load_dataset_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw TdfError(ErrorKind::config, "cannot open dataset file '" + path + "'");
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return parse_dataset(lines);
}

std::string serialize_item(const KnowledgeItem& item) {
    nlohmann::ordered_json record;
    record["id"] = item.id;
    record["knowledge"] = item.text;
    if (item.gold_flag) record["flag"] = *item.gold_flag;
    return record.dump();
}

std::string serialize_dataset(const std::vector<KnowledgeItem>& items) {
    std::string out;
    for (const auto& item : items) {
        out += serialize_item(item);
        out += '\n';
    }
    return out;
}

void write_dataset_file(const std::string& path, const std::vector<KnowledgeItem>& items) {
    std::ofstream out(path);
    if (!out) {
        throw TdfError(ErrorKind::config, "cannot write dataset file '" + path + "'");
    }
    out << serialize_dataset(items);
}

DatasetSplit split_dataset(const std::vector<KnowledgeItem>& items, std::uint64_t seed) {
    if (items.size() < 20) {
        throw TdfError(ErrorKind::size,
                       "split needs at least 20 items, got " + std::to_string(items.size()));
    }
    std::vector<KnowledgeItem> shuffled = items;
    rng::Stream stream(rng::derive_seed(seed, "split"));
    rng::shuffle(shuffled, stream);

    const std::size_t part = items.size() / 20;  // floor(0.05 * N)
    DatasetSplit split;
    split.seed = seed;
    split.train.assign(shuffled.begin(), shuffled.begin() + part);
    split.valid.assign(shuffled.begin() + part, shuffled.begin() + 2 * part);
    split.test.assign(shuffled.begin() + 2 * part, shuffled.end());
    return split;
}

}  // namespace tdf
