#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace tdf::simd {

enum class Isa { scalar, avx2, neon };

// Data-parallel inner loops for the vector index: a single dot product and a
// query-against-rows batch scan. Each field is one kernel; variants must agree
// with the scalar reference within accumulation-order rounding.
struct Kernels {
    float (*dot)(const float* a, const float* b, std::size_t n);
    void (*dot_batch)(const float* query, const float* rows, std::size_t row_count,
                      std::size_t dim, float* out);
    Isa isa;
    const char* name;
};

const Kernels& scalar_kernels();

// Kernel sets compiled in and supported by this CPU (scalar always included).
std::vector<const Kernels*> available_kernels();

// Lookup by name ("scalar", "avx2", "neon"); nullptr if absent or unsupported.
const Kernels* kernels_for(std::string_view name);

// The selected kernel set. Picks the widest supported ISA once at first use;
// the TDF_SIMD environment variable forces a specific one.
const Kernels& active();

}  // namespace tdf::simd
