#include "reseq/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)
#define RESEQ_HAVE_AVX2_KERNELS 1
#include <immintrin.h>
#endif

namespace reseq::kernels {

#if RESEQ_HAVE_AVX2_KERNELS
namespace {

// Functions carry their own target attribute so the translation unit can be
// built without -mavx2; nothing here runs unless the CPU check passed.
#define RESEQ_AVX2 __attribute__((target("avx2,fma")))

RESEQ_AVX2 inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

RESEQ_AVX2 double sum_sq_diff_avx2(const float* a, const float* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 va = _mm256_loadu_ps(a + i);
        const __m256 vb = _mm256_loadu_ps(b + i);
        const __m256d d0 = _mm256_sub_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(va)),
                                         _mm256_cvtps_pd(_mm256_castps256_ps128(vb)));
        const __m256d d1 = _mm256_sub_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(va, 1)),
                                         _mm256_cvtps_pd(_mm256_extractf128_ps(vb, 1)));
        acc0 = _mm256_fmadd_pd(d0, d0, acc0);
        acc1 = _mm256_fmadd_pd(d1, d1, acc1);
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += d * d;
    }
    return acc;
}

RESEQ_AVX2 double dot_avx2(const float* a, const float* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 va = _mm256_loadu_ps(a + i);
        const __m256 vb = _mm256_loadu_ps(b + i);
        acc0 = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(va)),
                               _mm256_cvtps_pd(_mm256_castps256_ps128(vb)), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(va, 1)),
                               _mm256_cvtps_pd(_mm256_extractf128_ps(vb, 1)), acc1);
    }
    double acc = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return acc;
}

// float*float is exact in double, so the fused and unfused forms agree with
// the scalar loop bit-for-bit.
RESEQ_AVX2 void accumulate_squares_avx2(double* acc, const float* x, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_cvtps_pd(_mm_loadu_ps(x + i));
        _mm256_storeu_pd(acc + i, _mm256_fmadd_pd(v, v, _mm256_loadu_pd(acc + i)));
    }
    for (; i < n; ++i) {
        const double v = x[i];
        acc[i] += v * v;
    }
}

RESEQ_AVX2 void scale_by_avx2(float* x, const double* factor, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_mul_pd(_mm256_cvtps_pd(_mm_loadu_ps(x + i)), _mm256_loadu_pd(factor + i));
        _mm_storeu_ps(x + i, _mm256_cvtpd_ps(v));
    }
    for (; i < n; ++i) {
        x[i] = static_cast<float>(static_cast<double>(x[i]) * factor[i]);
    }
}

#undef RESEQ_AVX2

}  // namespace

const KernelTable* avx2_table() {
    static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    static const KernelTable table{
        "avx2", sum_sq_diff_avx2, dot_avx2, accumulate_squares_avx2, scale_by_avx2,
    };
    return supported ? &table : nullptr;
}

#else

const KernelTable* avx2_table() { return nullptr; }

#endif

}  // namespace reseq::kernels
