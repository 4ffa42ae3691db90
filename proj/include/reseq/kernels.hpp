#pragma once

// Data-parallel inner loops shared by the distance metrics and the feature
// normalizer. Every entry point has a scalar reference implementation; SIMD
// variants (AVX2+FMA on x86-64, NEON on AArch64) are selected once at runtime.
//
// Contract shared by all variants:
//   - reductions (sum_sq_diff, dot) accumulate in double; variants may differ
//     in summation order, so results agree to rounding, not bit-for-bit
//   - element-wise kernels (accumulate_squares, scale_by) are bit-identical
//     across variants: each lane does the same double ops as the scalar loop

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace reseq::kernels {

struct KernelTable {
    const char* name;
    // sum_i (a[i] - b[i])^2
    double (*sum_sq_diff)(const float* a, const float* b, std::size_t n);
    // sum_i a[i] * b[i]
    double (*dot)(const float* a, const float* b, std::size_t n);
    // acc[i] += double(x[i])^2
    void (*accumulate_squares)(double* acc, const float* x, std::size_t n);
    // x[i] = float(double(x[i]) * factor[i])
    void (*scale_by)(float* x, const double* factor, std::size_t n);
};

const KernelTable& scalar_table();

// Null when the variant was not compiled in or the CPU lacks the extension.
const KernelTable* avx2_table();
const KernelTable* neon_table();

// Every variant usable on this machine, scalar first.
std::vector<const KernelTable*> available_tables();

// The table used by the engine. Chosen on first call: RESEQ_KERNELS=scalar|avx2|neon
// forces a variant (falls back to scalar when unavailable), otherwise the widest
// supported variant wins.
const KernelTable& active();

// Test hook: replace the active table. Pass nullptr to restore auto-selection.
void set_active(const KernelTable* table);

inline double sum_sq_diff(std::span<const float> a, std::span<const float> b) {
    return active().sum_sq_diff(a.data(), b.data(), a.size());
}

inline double dot(std::span<const float> a, std::span<const float> b) {
    return active().dot(a.data(), b.data(), a.size());
}

}  // namespace reseq::kernels
