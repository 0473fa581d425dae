#include "tdf/simd/kernels.hpp"

#include <cstdlib>

namespace tdf::simd {

namespace scalar {

float dot(const float* a, const float* b, std::size_t n) {
    float acc = 0.0f;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void dot_batch(const float* query, const float* rows, std::size_t row_count,
               std::size_t dim, float* out) {
    for (std::size_t r = 0; r < row_count; ++r) {
        out[r] = dot(query, rows + r * dim, dim);
    }
}

}  // namespace scalar

namespace avx2 {
bool supported();
float dot(const float* a, const float* b, std::size_t n);
void dot_batch(const float* query, const float* rows, std::size_t row_count,
               std::size_t dim, float* out);
}  // namespace avx2

namespace neon {
bool supported();
float dot(const float* a, const float* b, std::size_t n);
void dot_batch(const float* query, const float* rows, std::size_t row_count,
               std::size_t dim, float* out);
}  // namespace neon

const Kernels& scalar_kernels() {
    static const Kernels k{scalar::dot, scalar::dot_batch, Isa::scalar, "scalar"};
    return k;
}

namespace {

const Kernels* avx2_kernels() {
    if (!avx2::supported()) return nullptr;
    static const Kernels k{avx2::dot, avx2::dot_batch, Isa::avx2, "avx2"};
    return &k;
}

const Kernels* neon_kernels() {
    if (!neon::supported()) return nullptr;
    static const Kernels k{neon::dot, neon::dot_batch, Isa::neon, "neon"};
    return &k;
}

const Kernels& select_active() {
    if (const char* forced = std::getenv("TDF_SIMD")) {
        if (const Kernels* k = kernels_for(forced)) return *k;
        return scalar_kernels();
    }
    if (const Kernels* k = avx2_kernels()) return *k;
    if (const Kernels* k = neon_kernels()) return *k;
    return scalar_kernels();
}

}  // namespace

std::vector<const Kernels*> available_kernels() {
    std::vector<const Kernels*> out{&scalar_kernels()};
    if (const Kernels* k = avx2_kernels()) out.push_back(k);
    if (const Kernels* k = neon_kernels()) out.push_back(k);
    return out;
}

const Kernels* kernels_for(std::string_view name) {
    if (name == "scalar") return &scalar_kernels();
    if (name == "avx2") return avx2_kernels();
    if (name == "neon") return neon_kernels();
    return nullptr;
}

const Kernels& active() {
    static const Kernels& chosen = select_active();
    return chosen;
}

}  // namespace tdf::simd
