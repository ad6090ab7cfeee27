#include <cmath>

#include "mpr/simd/kernels.hpp"

namespace mpr::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void adagrad_scalar(double* theta, const double* grad, double* acc, std::size_t n, double lr,
                    double eps) {
    for (std::size_t i = 0; i < n; ++i) {
        const double g = grad[i];
        acc[i] = acc[i] + g * g;
        theta[i] = theta[i] - (lr * g) / (std::sqrt(acc[i]) + eps);
    }
}

}  // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable table{"scalar", &dot_scalar, &axpy_scalar, &adagrad_scalar};
    return table;
}

}  // namespace mpr::simd
