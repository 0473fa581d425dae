#include "tdf/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "tdf/errors.hpp"
#include "tdf/rng.hpp"
#include "tdf/simd/kernels.hpp"

namespace tdf {

Embedding normalize(std::vector<float> raw) {
    double norm_sq = 0.0;
    for (float v : raw) norm_sq += static_cast<double>(v) * static_cast<double>(v);
    if (norm_sq < 1e-24) {
        throw TdfError(ErrorKind::degenerate_embedding, "zero vector cannot be normalized");
    }
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (float& v : raw) v = static_cast<float>(v * inv);
    return Embedding{std::move(raw)};
}

double cosine_similarity(const Embedding& a, const Embedding& b) {
    if (a.dim() != b.dim()) {
        throw TdfError(ErrorKind::shape, "dimension mismatch: " + std::to_string(a.dim()) +
                                             " vs " + std::to_string(b.dim()));
    }
    const double sim = simd::active().dot(a.values.data(), b.values.data(), a.dim());
    return std::clamp(sim, -1.0, 1.0);
}

HashingEmbedder::HashingEmbedder(std::uint64_t seed, std::size_t dim)
    : seed_(seed), dim_(dim) {}

Embedding HashingEmbedder::embed(const std::string& text) {
    std::vector<float> acc(dim_, 0.0f);

    std::string token;
    auto flush_token = [&] {
        if (token.empty()) return;
        // Each token contributes a unit direction drawn from its own stream.
        rng::Stream stream(rng::mix(seed_, rng::fnv1a(token)));
        std::vector<double> dir(dim_);
        double norm_sq = 0.0;
        for (double& v : dir) {
            v = stream.next_normal();
            norm_sq += v * v;
        }
        const double inv = norm_sq > 0.0 ? 1.0 / std::sqrt(norm_sq) : 0.0;
        for (std::size_t i = 0; i < dim_; ++i) {
            acc[i] += static_cast<float>(dir[i] * inv);
        }
        token.clear();
    };

    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            token.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush_token();
        }
    }
    flush_token();

    return normalize(std::move(acc));
}

}  // namespace tdf
