#include "tdf/vector_index.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <mutex>
#include <ostream>

#include <json.hpp>

#include "tdf/errors.hpp"
#include "tdf/rng.hpp"
#include "tdf/simd/kernels.hpp"

namespace tdf {

namespace {

constexpr std::size_t kMaxAutoNlist = 256;

std::size_t auto_nlist(std::size_t count) {
    const auto root = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(count))));
    return std::clamp<std::size_t>(root, 1, kMaxAutoNlist);
}

void check_unit_norm(const Embedding& v) {
    double norm_sq = 0.0;
    for (float x : v.values) norm_sq += static_cast<double>(x) * static_cast<double>(x);
    if (std::abs(std::sqrt(norm_sq) - 1.0) > 1e-6) {
        throw TdfError(ErrorKind::validation, "vector is not unit-normalized");
    }
}

// Argmax centroid by cosine, ties to the lowest index.
std::size_t nearest_centroid(const float* centroid_matrix, std::size_t nlist, std::size_t dim,
                             const Embedding& v, std::vector<float>& scratch) {
    scratch.resize(nlist);
    simd::active().dot_batch(v.values.data(), centroid_matrix, nlist, dim, scratch.data());
    std::size_t best = 0;
    for (std::size_t c = 1; c < nlist; ++c) {
        if (scratch[c] > scratch[best]) best = c;
    }
    return best;
}

}  // namespace

std::vector<Embedding> build_kmeans(const std::vector<Embedding>& vectors, std::size_t nlist,
                                    std::uint64_t seed, std::size_t max_iters) {
    if (nlist < 1) {
        throw TdfError(ErrorKind::validation, "nlist must be at least 1");
    }
    if (vectors.size() < nlist) {
        throw TdfError(ErrorKind::size, "need at least nlist=" + std::to_string(nlist) +
                                            " vectors, got " + std::to_string(vectors.size()));
    }
    const std::size_t dim = vectors.front().dim();
    const std::size_t n = vectors.size();

    // Seeded init: sample nlist distinct input vectors.
    rng::Stream stream(rng::derive_seed(seed, "kmeans"));
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = 0; i < nlist; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(stream.next_below(n - i));
        std::swap(order[i], order[j]);
    }
    std::vector<Embedding> centroids;
    centroids.reserve(nlist);
    for (std::size_t c = 0; c < nlist; ++c) centroids.push_back(vectors[order[c]]);

    std::vector<std::size_t> assignment(n, 0);
    std::vector<float> centroid_matrix(nlist * dim);
    std::vector<float> scratch;

    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        for (std::size_t c = 0; c < nlist; ++c) {
            std::copy(centroids[c].values.begin(), centroids[c].values.end(),
                      centroid_matrix.begin() + c * dim);
        }

        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t best = nearest_centroid(centroid_matrix.data(), nlist, dim,
                                                      vectors[i], scratch);
            if (best != assignment[i]) {
                assignment[i] = best;
                changed = true;
            }
        }
        if (!changed && iter > 0) break;

        // Update step: normalized mean direction per cluster.
        std::vector<std::vector<double>> sums(nlist, std::vector<double>(dim, 0.0));
        std::vector<std::size_t> sizes(nlist, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = assignment[i];
            ++sizes[c];
            for (std::size_t d = 0; d < dim; ++d) {
                sums[c][d] += vectors[i].values[d];
            }
        }
        for (std::size_t c = 0; c < nlist; ++c) {
            if (sizes[c] == 0) {
                // Re-seed from the farthest point of the largest cluster.
                std::size_t largest = 0;
                for (std::size_t k = 1; k < nlist; ++k) {
                    if (sizes[k] > sizes[largest]) largest = k;
                }
                std::size_t farthest = n;  // sentinel
                double worst = 2.0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (assignment[i] != largest) continue;
                    const double sim = cosine_similarity(vectors[i], centroids[largest]);
                    if (sim < worst) {
                        worst = sim;
                        farthest = i;
                    }
                }
                if (farthest < n) {
                    centroids[c] = vectors[farthest];
                    assignment[farthest] = c;
                    --sizes[largest];
                    ++sizes[c];
                    for (std::size_t d = 0; d < dim; ++d) {
                        sums[largest][d] -= vectors[farthest].values[d];
                    }
                }
                continue;
            }
            double norm_sq = 0.0;
            for (double v : sums[c]) norm_sq += v * v;
            if (norm_sq < 1e-24) continue;  // antipodal cancellation: keep previous centroid
            const double inv = 1.0 / std::sqrt(norm_sq);
            for (std::size_t d = 0; d < dim; ++d) {
                centroids[c].values[d] = static_cast<float>(sums[c][d] * inv);
            }
        }
    }
    return centroids;
}

TrustedIndex::TrustedIndex(std::size_t dim, IndexMode mode, IvfParams params, std::uint64_t seed)
    : dim_(dim), mode_(mode), params_(params), seed_(seed) {
    if (dim_ == 0) {
        throw TdfError(ErrorKind::validation, "index dimension must be positive");
    }
}

TrustedIndex::TrustedIndex(TrustedIndex&& other) noexcept
    : dim_(other.dim_),
      mode_(other.mode_),
      params_(other.params_),
      seed_(other.seed_),
      entries_(std::move(other.entries_)),
      by_id_(std::move(other.by_id_)),
      flat_matrix_(std::move(other.flat_matrix_)),
      centroids_(std::move(other.centroids_)),
      centroid_matrix_(std::move(other.centroid_matrix_)),
      buckets_(std::move(other.buckets_)),
      count_at_build_(other.count_at_build_),
      build_round_(other.build_round_) {}

TrustedIndex& TrustedIndex::operator=(TrustedIndex&& other) noexcept {
    if (this != &other) {
        dim_ = other.dim_;
        mode_ = other.mode_;
        params_ = other.params_;
        seed_ = other.seed_;
        entries_ = std::move(other.entries_);
        by_id_ = std::move(other.by_id_);
        flat_matrix_ = std::move(other.flat_matrix_);
        centroids_ = std::move(other.centroids_);
        centroid_matrix_ = std::move(other.centroid_matrix_);
        buckets_ = std::move(other.buckets_);
        count_at_build_ = other.count_at_build_;
        build_round_ = other.build_round_;
    }
    return *this;
}

std::size_t TrustedIndex::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

std::size_t TrustedIndex::centroid_count() const {
    std::shared_lock lock(mutex_);
    return centroids_.size();
}

std::vector<Embedding> TrustedIndex::centroids() const {
    std::shared_lock lock(mutex_);
    return centroids_;
}

std::size_t TrustedIndex::effective_nprobe() const {
    std::shared_lock lock(mutex_);
    if (centroids_.empty()) return 0;
    return std::clamp<std::size_t>(params_.nprobe, 1, centroids_.size());
}

void TrustedIndex::set_nprobe(std::size_t nprobe) {
    std::unique_lock lock(mutex_);
    params_.nprobe = nprobe;
}

std::optional<std::size_t> TrustedIndex::bucket_of(const std::string& id) const {
    std::shared_lock lock(mutex_);
    if (mode_ != IndexMode::ivf) return std::nullopt;
    auto it = by_id_.find(id);
    if (it == by_id_.end()) return std::nullopt;
    for (std::size_t b = 0; b < buckets_.size(); ++b) {
        const auto& idx = buckets_[b].entry_indices;
        if (std::find(idx.begin(), idx.end(), it->second) != idx.end()) return b;
    }
    return std::nullopt;
}

void TrustedIndex::insert(TrustedEntry entry) {
    std::unique_lock lock(mutex_);
    insert_locked(std::move(entry));
}

void TrustedIndex::insert_locked(TrustedEntry entry) {
    if (entry.vector.dim() != dim_) {
        throw TdfError(ErrorKind::shape, "entry dimension " + std::to_string(entry.vector.dim()) +
                                             " does not match index dimension " +
                                             std::to_string(dim_));
    }
    check_unit_norm(entry.vector);
    if (by_id_.count(entry.item.id) != 0) {
        throw TdfError(ErrorKind::duplicate_entry, "duplicate entry id '" + entry.item.id + "'");
    }

    const std::size_t index = entries_.size();
    by_id_.emplace(entry.item.id, index);
    entries_.push_back(std::move(entry));
    const Embedding& vec = entries_.back().vector;

    if (mode_ == IndexMode::flat) {
        flat_matrix_.insert(flat_matrix_.end(), vec.values.begin(), vec.values.end());
        return;
    }

    if (centroids_.empty() || entries_.size() >= 2 * count_at_build_) {
        rebuild_locked();
        return;
    }
    const std::size_t bucket = route_to_bucket(vec);
    buckets_[bucket].entry_indices.push_back(index);
    buckets_[bucket].matrix.insert(buckets_[bucket].matrix.end(), vec.values.begin(),
                                   vec.values.end());
}

std::size_t TrustedIndex::route_to_bucket(const Embedding& vector) const {
    std::vector<float> scratch;
    return nearest_centroid(centroid_matrix_.data(), centroids_.size(), dim_, vector, scratch);
}

void TrustedIndex::rebuild_locked() {
    const std::size_t count = entries_.size();
    const std::size_t requested = params_.nlist == 0 ? auto_nlist(count) : params_.nlist;
    const std::size_t nlist = std::min(requested, count);

    std::vector<Embedding> vectors;
    vectors.reserve(count);
    for (const auto& e : entries_) vectors.push_back(e.vector);

    centroids_ = build_kmeans(vectors, nlist, rng::mix(seed_, build_round_));
    ++build_round_;
    count_at_build_ = count;

    centroid_matrix_.assign(nlist * dim_, 0.0f);
    for (std::size_t c = 0; c < nlist; ++c) {
        std::copy(centroids_[c].values.begin(), centroids_[c].values.end(),
                  centroid_matrix_.begin() + c * dim_);
    }

    buckets_.assign(nlist, {});
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t bucket = route_to_bucket(entries_[i].vector);
        buckets_[bucket].entry_indices.push_back(i);
        buckets_[bucket].matrix.insert(buckets_[bucket].matrix.end(),
                                       entries_[i].vector.values.begin(),
                                       entries_[i].vector.values.end());
    }
}

std::optional<Matched> TrustedIndex::scan_rows(const float* rows, std::size_t count,
                                               const std::vector<std::size_t>& entry_indices,
                                               const Embedding& query,
                                               std::optional<Matched> best) const {
    if (count == 0) return best;
    std::vector<float> scores(count);
    simd::active().dot_batch(query.values.data(), rows, count, dim_, scores.data());
    for (std::size_t r = 0; r < count; ++r) {
        const double sim = std::clamp(static_cast<double>(scores[r]), -1.0, 1.0);
        const TrustedEntry& entry = entries_[entry_indices[r]];
        if (!best || sim > best->similarity ||
            (sim == best->similarity && entry.item.id < best->entry.item.id)) {
            best = Matched{entry, sim};
        }
    }
    return best;
}

std::optional<Matched> TrustedIndex::search_top1(const Embedding& query) const {
    std::shared_lock lock(mutex_);
    if (query.dim() != dim_) {
        throw TdfError(ErrorKind::shape, "query dimension " + std::to_string(query.dim()) +
                                             " does not match index dimension " +
                                             std::to_string(dim_));
    }
    if (entries_.empty()) return std::nullopt;

    if (mode_ == IndexMode::flat) {
        std::vector<std::size_t> all(entries_.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        return scan_rows(flat_matrix_.data(), entries_.size(), all, query, std::nullopt);
    }

    // IVF: rank centroids by similarity, scan the nprobe nearest buckets.
    const std::size_t nlist = centroids_.size();
    std::vector<float> centroid_scores(nlist);
    simd::active().dot_batch(query.values.data(), centroid_matrix_.data(), nlist, dim_,
                             centroid_scores.data());
    std::vector<std::size_t> probe_order(nlist);
    for (std::size_t c = 0; c < nlist; ++c) probe_order[c] = c;
    std::stable_sort(probe_order.begin(), probe_order.end(), [&](std::size_t a, std::size_t b) {
        return centroid_scores[a] > centroid_scores[b];
    });

    const std::size_t nprobe = std::clamp<std::size_t>(params_.nprobe, 1, nlist);
    std::optional<Matched> best;
    for (std::size_t p = 0; p < nprobe; ++p) {
        const Bucket& bucket = buckets_[probe_order[p]];
        best = scan_rows(bucket.matrix.data(), bucket.entry_indices.size(), bucket.entry_indices,
                         query, std::move(best));
    }
    return best;
}

void TrustedIndex::save(std::ostream& out) const {
    std::shared_lock lock(mutex_);
    nlohmann::ordered_json header;
    header["dim"] = dim_;
    header["count"] = entries_.size();
    header["mode"] = mode_ == IndexMode::flat ? "flat" : "ivf";
    header["nlist"] = params_.nlist;
    header["nprobe"] = params_.nprobe;
    out << header.dump() << '\n';
    for (const auto& entry : entries_) {
        nlohmann::ordered_json record;
        record["id"] = entry.item.id;
        record["text"] = entry.item.text;
        record["vector"] = entry.vector.values;
        out << record.dump() << '\n';
    }
}

TrustedIndex TrustedIndex::load(std::istream& in, std::uint64_t seed) {
    std::string line;
    if (!std::getline(in, line)) {
        throw TdfError(ErrorKind::parse, "empty index snapshot", 1);
    }
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw TdfError(ErrorKind::parse, std::string("bad snapshot header: ") + e.what(), 1);
    }
    const std::size_t dim = header.at("dim").get<std::size_t>();
    const std::size_t count = header.at("count").get<std::size_t>();
    const std::string mode_name = header.at("mode").get<std::string>();
    IvfParams params{header.at("nlist").get<std::size_t>(), header.at("nprobe").get<std::size_t>()};
    const IndexMode mode = mode_name == "ivf" ? IndexMode::ivf : IndexMode::flat;

    // The index is local until returned, so inserts need no locking here.
    TrustedIndex index(dim, mode, params, seed);
    for (std::size_t i = 0; i < count; ++i) {
        if (!std::getline(in, line)) {
            throw TdfError(ErrorKind::parse, "snapshot truncated", static_cast<long>(i) + 2);
        }
        nlohmann::json record;
        try {
            record = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw TdfError(ErrorKind::parse, std::string("bad snapshot record: ") + e.what(),
                           static_cast<long>(i) + 2);
        }
        TrustedEntry entry;
        entry.item.id = record.at("id").get<std::string>();
        entry.item.text = record.at("text").get<std::string>();
        entry.vector.values = record.at("vector").get<std::vector<float>>();
        index.insert_locked(std::move(entry));
    }
    return index;
}

MatchResult match_trusted(const TrustedIndex& index, const KnowledgeItem& item, double threshold,
                          Embedder& embedder) {
    if (threshold < 0.0 || threshold > 1.0) {
        throw TdfError(ErrorKind::validation, "threshold must lie in [0, 1]");
    }
    const Embedding query = embedder.embed(item.text);
    auto top = index.search_top1(query);
    if (!top || top->similarity < threshold) return MatchResult{};
    return MatchResult{std::move(top)};
}

}  // namespace tdf
