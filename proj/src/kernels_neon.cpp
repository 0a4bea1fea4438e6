#if defined(TASEG_HAVE_NEON)

#include <arm_neon.h>

#include "kernels_backends.hpp"

// NEON variants, 2 doubles per lane (aarch64 baseline).

namespace taseg::kernels::neon {

void axpy(double* dst, const double* src, double a, std::size_t n) {
    const float64x2_t av = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t d = vld1q_f64(dst + i);
        d = vfmaq_f64(d, av, vld1q_f64(src + i));
        vst1q_f64(dst + i, d);
    }
    for (; i < n; ++i) dst[i] += a * src[i];
}

double dot(const double* a, const double* b, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2)
        acc = vfmaq_f64(acc, vld1q_f64(a + i), vld1q_f64(b + i));
    double total = vaddvq_f64(acc);
    for (; i < n; ++i) total += a[i] * b[i];
    return total;
}

double sum(const double* x, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(x + i));
    double total = vaddvq_f64(acc);
    for (; i < n; ++i) total += x[i];
    return total;
}

void relu(double* dst, const double* x, std::size_t n) {
    const float64x2_t zero = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2)
        vst1q_f64(dst + i, vmaxq_f64(vld1q_f64(x + i), zero));
    for (; i < n; ++i) dst[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(double* dst, const double* g, const double* pre, std::size_t n) {
    const float64x2_t zero = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        uint64x2_t mask = vcgtq_f64(vld1q_f64(pre + i), zero);
        float64x2_t gv = vld1q_f64(g + i);
        vst1q_f64(dst + i,
                  vreinterpretq_f64_u64(vandq_u64(mask, vreinterpretq_u64_f64(gv))));
    }
    for (; i < n; ++i) dst[i] = pre[i] > 0.0 ? g[i] : 0.0;
}

} // namespace taseg::kernels::neon

#endif // TASEG_HAVE_NEON
