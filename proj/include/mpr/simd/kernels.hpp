#pragma once

// Inner-loop arithmetic used by scoring, gradients and the optimizer.
//
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2 variant. The variant is picked once at first use from CPUID; setting
// MPR_SIMD=scalar in the environment forces the reference path.
//
// dot() in the AVX2 path sums in four lanes, so it differs from the scalar
// result by rounding only. axpy() and adagrad_update() perform the same
// per-element operations in both paths and are bit-identical.

#include <cstddef>
#include <span>

namespace mpr::simd {

struct KernelTable {
    const char* name;
    double (*dot)(const double* a, const double* b, std::size_t n);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // acc += g^2; theta -= lr * g / (sqrt(acc) + eps)
    void (*adagrad)(double* theta, const double* grad, double* acc, std::size_t n, double lr,
                    double eps);
};

const KernelTable& scalar_kernels();

// nullptr when the binary was built without AVX2 support or the CPU lacks it.
const KernelTable* avx2_kernels();

const KernelTable& active_kernels();

inline double dot(std::span<const double> a, std::span<const double> b) {
    return active_kernels().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    active_kernels().axpy(alpha, x.data(), y.data(), x.size());
}

inline void adagrad_update(std::span<double> theta, std::span<const double> grad,
                           std::span<double> acc, double lr, double eps) {
    active_kernels().adagrad(theta.data(), grad.data(), acc.data(), theta.size(), lr, eps);
}

}  // namespace mpr::simd
