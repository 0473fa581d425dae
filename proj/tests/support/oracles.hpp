#pragma once

// Independent oracles used to freeze expected values. Everything here is
// deliberately written against the plain definitions (linear scans, exhaustive
// enumeration) and must stay decoupled from the library implementation paths
// it checks.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "tdf/decision_tree.hpp"
#include "tdf/embedding.hpp"
#include "tdf/rng.hpp"

namespace oracle {

// Plain scalar dot product (reference for the SIMD kernels).
inline float dot_ref(const float* a, const float* b, std::size_t n) {
    float acc = 0.0f;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

// Brute-force top-1 by cosine over unit vectors, ties to the smallest id.
struct BruteHit {
    std::size_t index;
    double similarity;
};

inline std::optional<BruteHit> brute_force_top1(const std::vector<tdf::Embedding>& vectors,
                                                const std::vector<std::string>& ids,
                                                const tdf::Embedding& query) {
    std::optional<BruteHit> best;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        double sim = 0.0;
        for (std::size_t d = 0; d < query.dim(); ++d) {
            sim += static_cast<double>(vectors[i].values[d]) *
                   static_cast<double>(query.values[d]);
        }
        sim = std::clamp(sim, -1.0, 1.0);
        if (!best || sim > best->similarity ||
            (sim == best->similarity && ids[i] < ids[best->index])) {
            best = BruteHit{i, sim};
        }
    }
    return best;
}

// Random unit vectors, seeded.
inline std::vector<tdf::Embedding> random_unit_vectors(std::size_t count, std::size_t dim,
                                                       std::uint64_t seed) {
    tdf::rng::Stream stream(seed);
    std::vector<tdf::Embedding> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::vector<float> v(dim);
        for (float& x : v) x = static_cast<float>(stream.next_normal());
        out.push_back(tdf::normalize(std::move(v)));
    }
    return out;
}

// Points drawn around k random unit centers with Gaussian jitter, normalized.
struct ClusteredInstance {
    std::vector<tdf::Embedding> centers;
    std::vector<tdf::Embedding> points;
};

inline ClusteredInstance gaussian_clusters(std::size_t point_count, std::size_t cluster_count,
                                           std::size_t dim, double sigma, std::uint64_t seed) {
    ClusteredInstance instance;
    instance.centers = random_unit_vectors(cluster_count, dim, tdf::rng::mix(seed, 0xC3));
    tdf::rng::Stream stream(tdf::rng::mix(seed, 0x9E));
    instance.points.reserve(point_count);
    for (std::size_t i = 0; i < point_count; ++i) {
        const auto& center = instance.centers[stream.next_below(cluster_count)].values;
        std::vector<float> v(dim);
        for (std::size_t d = 0; d < dim; ++d) {
            v[d] = center[d] + static_cast<float>(sigma * stream.next_normal());
        }
        instance.points.push_back(tdf::normalize(std::move(v)));
    }
    return instance;
}

// Independent Gini recomputation for split verification.
inline double gini_ref(std::int64_t c0, std::int64_t c1) {
    const double n = static_cast<double>(c0 + c1);
    const double p0 = static_cast<double>(c0) / n;
    const double p1 = static_cast<double>(c1) / n;
    return 1.0 - p0 * p0 - p1 * p1;
}

// Exhaustive candidate-split search over a subset: every midpoint between
// consecutive distinct values of every feature, honoring min_samples_leaf.
// Returns the minimal weighted child Gini (infinity when nothing splits).
inline double best_weighted_gini_ref(const std::vector<tdf::EvalRecord>& records,
                                     const std::vector<int>& labels,
                                     const std::vector<std::size_t>& subset,
                                     int min_samples_leaf) {
    double best = std::numeric_limits<double>::infinity();
    const auto n = static_cast<std::int64_t>(subset.size());
    for (int feature = 0; feature < tdf::EvalRecord::kFeatureCount; ++feature) {
        std::vector<double> values;
        values.reserve(subset.size());
        for (std::size_t i : subset) values.push_back(records[i].feature(feature));
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        for (std::size_t v = 0; v + 1 < values.size(); ++v) {
            const double threshold = values[v] + (values[v + 1] - values[v]) / 2.0;
            std::int64_t l0 = 0, l1 = 0, r0 = 0, r1 = 0;
            for (std::size_t i : subset) {
                const bool left = records[i].feature(feature) <= threshold;
                if (left) (labels[i] == 0 ? l0 : l1) += 1;
                else (labels[i] == 0 ? r0 : r1) += 1;
            }
            const std::int64_t nl = l0 + l1, nr = r0 + r1;
            if (nl < min_samples_leaf || nr < min_samples_leaf) continue;
            const double weighted = (static_cast<double>(nl) * gini_ref(l0, l1) +
                                     static_cast<double>(nr) * gini_ref(r0, r1)) /
                                    static_cast<double>(n);
            best = std::min(best, weighted);
        }
    }
    return best;
}

// Replays a decision path against a record by applying each recorded
// comparison; returns false if any step disagrees with the record.
inline bool replay_path(const tdf::DecisionPath& path, const tdf::EvalRecord& record) {
    for (const auto& step : path.steps) {
        const bool left = record.feature(step.feature) <= step.threshold;
        if (left != step.went_left) return false;
    }
    return true;
}

}  // namespace oracle
