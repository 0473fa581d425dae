#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tdf {

// One candidate knowledge statement. gold_flag carries the ground-truth label
// when the dataset has one: 0 = incorrect knowledge, 1 = correct knowledge.
struct KnowledgeItem {
    std::string id;
    std::string text;
    std::optional<int> gold_flag;

    bool operator==(const KnowledgeItem&) const = default;
};

struct DatasetSplit {
    std::vector<KnowledgeItem> train;  // 5%
    std::vector<KnowledgeItem> valid;  // 5%
    std::vector<KnowledgeItem> test;   // 90%
    std::uint64_t seed = 0;
};

// Parses the line-oriented dataset format: one JSON record per line with
// fields `knowledge` (string), optional `flag` (0|1) and optional `id`.
// Blank lines are skipped. Records without an id get the 0-based line
// ordinal. Throws TdfError{parse|validation} carrying the 1-based line.
std::vector<KnowledgeItem> parse_dataset(const std::vector<std::string>& lines);

// Convenience wrappers over the same record format.
std::vector<KnowledgeItem> parse_dataset_text(const std::string& text);
std::vector<KnowledgeItem> load_dataset_file(const std::string& path);

std::string serialize_item(const KnowledgeItem& item);
std::string serialize_dataset(const std::vector<KnowledgeItem>& items);
void write_dataset_file(const std::string& path, const std::vector<KnowledgeItem>& items);

// Seeded 5/5/90 split: shuffle with a deterministic permutation, take
// floor(0.05*N) for train, the next floor(0.05*N) for valid, rest for test.
// Requires at least 20 items so every part is non-empty.
DatasetSplit split_dataset(const std::vector<KnowledgeItem>& items, std::uint64_t seed);

}  // namespace tdf
