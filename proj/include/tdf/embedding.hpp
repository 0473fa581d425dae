#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tdf {

// Unit-norm dense vector; with every stored vector normalized, cosine
// similarity reduces to a dot product.
struct Embedding {
    std::vector<float> values;

    std::size_t dim() const { return values.size(); }

    bool operator==(const Embedding&) const = default;
};

// L2-normalizes in double precision. Throws TdfError{degenerate_embedding}
// when the input is (numerically) the zero vector.
Embedding normalize(std::vector<float> raw);

// Dot product of unit vectors, clamped to [-1, 1] against rounding overshoot.
// Throws TdfError{shape} on dimension mismatch.
double cosine_similarity(const Embedding& a, const Embedding& b);

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::size_t dim() const = 0;
    // Returns a unit-normalized vector of dim() entries.
    virtual Embedding embed(const std::string& text) = 0;
};

// Deterministic offline embedder: each lowercased token hashes to a seeded
// pseudo-random direction, the token multiset sum is normalized. Texts that
// share most of their tokens land close in cosine space, which is all the
// pipeline needs at desk scale.
class HashingEmbedder final : public Embedder {
public:
    explicit HashingEmbedder(std::uint64_t seed, std::size_t dim = 64);

    std::size_t dim() const override { return dim_; }
    Embedding embed(const std::string& text) override;

private:
    std::uint64_t seed_;
    std::size_t dim_;
};

}  // namespace tdf
