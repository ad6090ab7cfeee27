// Built with -mavx2 -mfma -ffp-contract=off; only reached after a CPUID check.

#include <immintrin.h>

#include <cmath>

#include "mpr/simd/kernels.hpp"

namespace mpr::simd::detail {

namespace {

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    if (i + 4 <= n) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        i += 4;
    }
    acc0 = _mm256_add_pd(acc0, acc1);
    const __m128d lo = _mm256_castpd256_pd128(acc0);
    const __m128d hi = _mm256_extractf128_pd(acc0, 1);
    __m128d s = _mm_add_pd(lo, hi);
    s = _mm_add_sd(s, _mm_unpackhi_pd(s, s));
    double sum = _mm_cvtsd_f64(s);
    for (; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

// Separate multiply and add (no FMA) keeps results identical to the scalar path.
void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), prod));
    }
    for (; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void adagrad_avx2(double* theta, const double* grad, double* acc, std::size_t n, double lr,
                  double eps) {
    const __m256d vlr = _mm256_set1_pd(lr);
    const __m256d veps = _mm256_set1_pd(eps);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d g = _mm256_loadu_pd(grad + i);
        const __m256d a = _mm256_add_pd(_mm256_loadu_pd(acc + i), _mm256_mul_pd(g, g));
        _mm256_storeu_pd(acc + i, a);
        const __m256d step =
            _mm256_div_pd(_mm256_mul_pd(vlr, g), _mm256_add_pd(_mm256_sqrt_pd(a), veps));
        _mm256_storeu_pd(theta + i, _mm256_sub_pd(_mm256_loadu_pd(theta + i), step));
    }
    for (; i < n; ++i) {
        const double g = grad[i];
        acc[i] = acc[i] + g * g;
        theta[i] = theta[i] - (lr * g) / (std::sqrt(acc[i]) + eps);
    }
}

}  // namespace

const KernelTable& avx2_table() {
    static const KernelTable table{"avx2", &dot_avx2, &axpy_avx2, &adagrad_avx2};
    return table;
}

}  // namespace mpr::simd::detail
