#include "tdf/simd/kernels.hpp"

#if defined(TDF_BUILD_AVX2)
#include <immintrin.h>
#endif

namespace tdf::simd::avx2 {

#if defined(TDF_BUILD_AVX2)

bool supported() {
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

namespace {

inline float hsum256(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 shuf = _mm_movehdup_ps(lo);
    __m128 sums = _mm_add_ps(lo, shuf);
    shuf = _mm_movehl_ps(shuf, sums);
    sums = _mm_add_ss(sums, shuf);
    return _mm_cvtss_f32(sums);
}

}  // namespace

float dot(const float* a, const float* b, std::size_t n) {
    __m256 acc0 = _mm256_setzero_ps();
    __m256 acc1 = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
        acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i + 8), _mm256_loadu_ps(b + i + 8), acc1);
    }
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
    }
    float acc = hsum256(_mm256_add_ps(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void dot_batch(const float* query, const float* rows, std::size_t row_count,
               std::size_t dim, float* out) {
    for (std::size_t r = 0; r < row_count; ++r) {
        out[r] = dot(query, rows + r * dim, dim);
    }
}

#else  // !TDF_BUILD_AVX2

bool supported() { return false; }

float dot(const float*, const float*, std::size_t) { return 0.0f; }

void dot_batch(const float*, const float*, std::size_t, std::size_t, float*) {}

#endif

}  // namespace tdf::simd::avx2
