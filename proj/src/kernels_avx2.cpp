#if defined(TASEG_HAVE_AVX2)

#include <immintrin.h>

#include "kernels_backends.hpp"

// AVX2/FMA variants, 4 doubles per lane. Remainders fall back to scalar
// tails. Only reached after __builtin_cpu_supports("avx2") succeeds.

namespace taseg::kernels::avx2 {

void axpy(double* dst, const double* src, double a, std::size_t n) {
    const __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256d d0 = _mm256_loadu_pd(dst + i);
        __m256d d1 = _mm256_loadu_pd(dst + i + 4);
        d0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(src + i), d0);
        d1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(src + i + 4), d1);
        _mm256_storeu_pd(dst + i, d0);
        _mm256_storeu_pd(dst + i + 4, d1);
    }
    for (; i + 4 <= n; i += 4) {
        __m256d d = _mm256_loadu_pd(dst + i);
        d = _mm256_fmadd_pd(av, _mm256_loadu_pd(src + i), d);
        _mm256_storeu_pd(dst + i, d);
    }
    for (; i < n; ++i) dst[i] += a * src[i];
}

static inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d shuf = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    }
    double total = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) total += a[i] * b[i];
    return total;
}

double sum(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double total = hsum(acc);
    for (; i < n; ++i) total += x[i];
    return total;
}

void relu(double* dst, const double* x, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(dst + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
    for (; i < n; ++i) dst[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(double* dst, const double* g, const double* pre, std::size_t n) {
    const __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(pre + i), zero, _CMP_GT_OQ);
        _mm256_storeu_pd(dst + i, _mm256_and_pd(mask, _mm256_loadu_pd(g + i)));
    }
    for (; i < n; ++i) dst[i] = pre[i] > 0.0 ? g[i] : 0.0;
}

} // namespace taseg::kernels::avx2

#endif // TASEG_HAVE_AVX2
