#include "tdf/simd/kernels.hpp"

#if defined(__aarch64__) || defined(__ARM_NEON)
#define TDF_BUILD_NEON 1
#include <arm_neon.h>
#endif

namespace tdf::simd::neon {

#if defined(TDF_BUILD_NEON)

bool supported() { return true; }  // NEON is baseline on aarch64

float dot(const float* a, const float* b, std::size_t n) {
    float32x4_t acc0 = vdupq_n_f32(0.0f);
    float32x4_t acc1 = vdupq_n_f32(0.0f);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = vfmaq_f32(acc0, vld1q_f32(a + i), vld1q_f32(b + i));
        acc1 = vfmaq_f32(acc1, vld1q_f32(a + i + 4), vld1q_f32(b + i + 4));
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f32(acc0, vld1q_f32(a + i), vld1q_f32(b + i));
    }
    float acc = vaddvq_f32(vaddq_f32(acc0, acc1));
    for (; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void dot_batch(const float* query, const float* rows, std::size_t row_count,
               std::size_t dim, float* out) {
    for (std::size_t r = 0; r < row_count; ++r) {
        out[r] = dot(query, rows + r * dim, dim);
    }
}

#else  // !TDF_BUILD_NEON

bool supported() { return false; }

float dot(const float*, const float*, std::size_t) { return 0.0f; }

void dot_batch(const float*, const float*, std::size_t, std::size_t, float*) {}

#endif

}  // namespace tdf::simd::neon
