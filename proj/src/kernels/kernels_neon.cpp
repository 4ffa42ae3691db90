#include "reseq/kernels.hpp"

#if defined(__aarch64__)
#define RESEQ_HAVE_NEON_KERNELS 1
#include <arm_neon.h>
#endif

namespace reseq::kernels {

#if RESEQ_HAVE_NEON_KERNELS
namespace {

// AArch64 always has Advanced SIMD with float64x2 lanes.

double sum_sq_diff_neon(const float* a, const float* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const float32x4_t va = vld1q_f32(a + i);
        const float32x4_t vb = vld1q_f32(b + i);
        const float64x2_t d0 = vsubq_f64(vcvt_f64_f32(vget_low_f32(va)), vcvt_f64_f32(vget_low_f32(vb)));
        const float64x2_t d1 = vsubq_f64(vcvt_high_f64_f32(va), vcvt_high_f64_f32(vb));
        acc0 = vfmaq_f64(acc0, d0, d0);
        acc1 = vfmaq_f64(acc1, d1, d1);
    }
    double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += d * d;
    }
    return acc;
}

double dot_neon(const float* a, const float* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const float32x4_t va = vld1q_f32(a + i);
        const float32x4_t vb = vld1q_f32(b + i);
        acc0 = vfmaq_f64(acc0, vcvt_f64_f32(vget_low_f32(va)), vcvt_f64_f32(vget_low_f32(vb)));
        acc1 = vfmaq_f64(acc1, vcvt_high_f64_f32(va), vcvt_high_f64_f32(vb));
    }
    double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) {
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return acc;
}

void accumulate_squares_neon(double* acc, const float* x, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t v = vcvt_f64_f32(vld1_f32(x + i));
        vst1q_f64(acc + i, vfmaq_f64(vld1q_f64(acc + i), v, v));
    }
    for (; i < n; ++i) {
        const double v = x[i];
        acc[i] += v * v;
    }
}

void scale_by_neon(float* x, const double* factor, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t v = vmulq_f64(vcvt_f64_f32(vld1_f32(x + i)), vld1q_f64(factor + i));
        vst1_f32(x + i, vcvt_f32_f64(v));
    }
    for (; i < n; ++i) {
        x[i] = static_cast<float>(static_cast<double>(x[i]) * factor[i]);
    }
}

}  // namespace

const KernelTable* neon_table() {
    static const KernelTable table{
        "neon", sum_sq_diff_neon, dot_neon, accumulate_squares_neon, scale_by_neon,
    };
    return &table;
}

#else

const KernelTable* neon_table() { return nullptr; }

#endif

}  // namespace reseq::kernels
