#include <doctest.h>

#include <cmath>
#include <vector>

#include "tdf/rng.hpp"
#include "tdf/simd/kernels.hpp"

#include "support/oracles.hpp"

using namespace tdf;

namespace {

std::vector<float> random_values(std::size_t n, std::uint64_t seed) {
    rng::Stream stream(seed);
    std::vector<float> v(n);
    for (float& x : v) x = static_cast<float>(stream.next_unit() * 2.0 - 1.0);
    return v;
}

}  // namespace

TEST_CASE("scalar kernels match the reference loop exactly") {
    const auto& k = simd::scalar_kernels();
    for (std::size_t n : {0, 1, 3, 8, 17, 64, 200}) {
        const auto a = random_values(n, rng::mix(11, n));
        const auto b = random_values(n, rng::mix(23, n));
        CHECK(k.dot(a.data(), b.data(), n) == oracle::dot_ref(a.data(), b.data(), n));
    }
}

TEST_CASE("every available kernel variant agrees with scalar within rounding") {
    // Sizes straddle all remainder paths of the vector widths.
    for (const simd::Kernels* k : simd::available_kernels()) {
        for (std::size_t n : {1, 2, 4, 7, 8, 9, 15, 16, 17, 31, 32, 33, 63, 64, 65, 100, 257}) {
            const auto a = random_values(n, rng::mix(311, n));
            const auto b = random_values(n, rng::mix(977, n));
            const double expected = oracle::dot_ref(a.data(), b.data(), n);
            const double got = k->dot(a.data(), b.data(), n);
            CHECK(std::abs(got - expected) <= 1e-5 * std::max(1.0, std::abs(expected)));
        }
    }
}

TEST_CASE("dot_batch equals per-row dot on every variant") {
    const std::size_t dim = 64;
    const std::size_t rows = 37;
    const auto matrix = random_values(rows * dim, 5150);
    const auto query = random_values(dim, 867);
    for (const simd::Kernels* k : simd::available_kernels()) {
        std::vector<float> out(rows);
        k->dot_batch(query.data(), matrix.data(), rows, dim, out.data());
        for (std::size_t r = 0; r < rows; ++r) {
            CHECK(out[r] == k->dot(query.data(), matrix.data() + r * dim, dim));
        }
    }
}

TEST_CASE("kernel lookup and the active selection") {
    CHECK(simd::kernels_for("scalar") == &simd::scalar_kernels());
    CHECK(simd::kernels_for("nonsense") == nullptr);
    const auto available = simd::available_kernels();
    CHECK(available.size() >= 1);
    bool active_listed = false;
    for (const simd::Kernels* k : available) {
        if (k == &simd::active()) active_listed = true;
    }
    CHECK(active_listed);
}
