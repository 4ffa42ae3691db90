#include "reseq/kernels.hpp"

namespace reseq::kernels {
namespace {

double sum_sq_diff_scalar(const float* a, const float* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += d * d;
    }
    return acc;
}

double dot_scalar(const float* a, const float* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return acc;
}

void accumulate_squares_scalar(double* acc, const float* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double v = x[i];
        acc[i] += v * v;
    }
}

void scale_by_scalar(float* x, const double* factor, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = static_cast<float>(static_cast<double>(x[i]) * factor[i]);
    }
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table{
        "scalar", sum_sq_diff_scalar, dot_scalar, accumulate_squares_scalar, scale_by_scalar,
    };
    return table;
}

}  // namespace reseq::kernels
