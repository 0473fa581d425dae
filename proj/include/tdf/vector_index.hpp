#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "tdf/embedding.hpp"
#include "tdf/knowledge.hpp"

namespace tdf {

// An accepted statement resident in the knowledge base.
struct TrustedEntry {
    KnowledgeItem item;
    Embedding vector;
};

struct Matched {
    TrustedEntry entry;
    double similarity;  // in [-1, 1]
};

// Matched only when top-1 similarity clears the configured threshold.
struct MatchResult {
    std::optional<Matched> matched;

    bool is_matched() const { return matched.has_value(); }
};

enum class IndexMode { flat, ivf };

struct IvfParams {
    std::size_t nlist = 0;   // 0 = auto: round(sqrt(count)) clamped to [1, 256]
    std::size_t nprobe = 8;  // clamped to [1, effective nlist]
};

// Spherical k-means over unit vectors: cosine assignment, normalized-mean
// update, empty clusters re-seeded from the farthest point of the largest
// cluster. Deterministic for fixed (vectors, nlist, seed).
std::vector<Embedding> build_kmeans(const std::vector<Embedding>& vectors, std::size_t nlist,
                                    std::uint64_t seed, std::size_t max_iters = 25);

// The trusted knowledge base: exact flat scan or an IVF_FLAT inverted file.
// Reads are concurrent; insert takes the write lock, so a completed insert is
// visible to every search that starts afterwards.
class TrustedIndex {
public:
    TrustedIndex(std::size_t dim, IndexMode mode, IvfParams params = {},
                 std::uint64_t seed = 0);

    // Movable so load() can hand one back; the mutex is not carried over and
    // the source must not be in concurrent use.
    TrustedIndex(TrustedIndex&& other) noexcept;
    TrustedIndex& operator=(TrustedIndex&& other) noexcept;
    TrustedIndex(const TrustedIndex&) = delete;
    TrustedIndex& operator=(const TrustedIndex&) = delete;

    // Routes the entry to its bucket (IVF) or appends (flat). IVF centroids
    // are rebuilt whenever the entry count has doubled since the last build.
    // Throws on dimension mismatch, non-unit vectors, and duplicate ids.
    void insert(TrustedEntry entry);

    // Most similar entry, ties broken by smallest entry id; nullopt when empty.
    std::optional<Matched> search_top1(const Embedding& query) const;

    std::size_t size() const;
    std::size_t dim() const { return dim_; }
    IndexMode mode() const { return mode_; }

    std::size_t centroid_count() const;
    std::vector<Embedding> centroids() const;
    std::size_t effective_nprobe() const;
    void set_nprobe(std::size_t nprobe);

    // Bucket index an entry id is routed to; nullopt for flat mode/unknown id.
    std::optional<std::size_t> bucket_of(const std::string& id) const;

    // Snapshot: one header line {dim, count, mode, nlist, nprobe}, then one
    // record per entry {id, text, vector}, in insertion order.
    void save(std::ostream& out) const;
    static TrustedIndex load(std::istream& in, std::uint64_t seed = 0);

private:
    void insert_locked(TrustedEntry entry);
    void rebuild_locked();
    std::optional<Matched> scan_rows(const float* rows, std::size_t count,
                                     const std::vector<std::size_t>& entry_indices,
                                     const Embedding& query,
                                     std::optional<Matched> best) const;
    std::size_t route_to_bucket(const Embedding& vector) const;

    struct Bucket {
        std::vector<float> matrix;                // bucket_size x dim, row-major
        std::vector<std::size_t> entry_indices;   // into entries_
    };

    std::size_t dim_;
    IndexMode mode_;
    IvfParams params_;
    std::uint64_t seed_;

    std::vector<TrustedEntry> entries_;
    std::unordered_map<std::string, std::size_t> by_id_;

    std::vector<float> flat_matrix_;  // flat mode: size() x dim, row-major

    std::vector<Embedding> centroids_;
    std::vector<float> centroid_matrix_;
    std::vector<Bucket> buckets_;
    std::size_t count_at_build_ = 0;
    std::size_t build_round_ = 0;

    mutable std::shared_mutex mutex_;
};

// Embeds the item and retrieves the most similar trusted statement; Matched
// iff similarity >= threshold. Empty knowledge base is always Unmatched.
MatchResult match_trusted(const TrustedIndex& index, const KnowledgeItem& item,
                          double threshold, Embedder& embedder);

}  // namespace tdf
