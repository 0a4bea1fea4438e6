#include "taseg/kernels.hpp"

#include <cstdlib>
#include <cstring>

#include "taseg/errors.hpp"
#include "kernels_backends.hpp"

namespace taseg::kernels {

namespace scalar {

void axpy(double* dst, const double* src, double a, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] += a * src[i];
}

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sum(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

void relu(double* dst, const double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(double* dst, const double* g, const double* pre, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dst[i] = pre[i] > 0.0 ? g[i] : 0.0;
}

} // namespace scalar

namespace {

struct DispatchTable {
    void (*axpy)(double*, const double*, double, std::size_t);
    double (*dot)(const double*, const double*, std::size_t);
    double (*sum)(const double*, std::size_t);
    void (*relu)(double*, const double*, std::size_t);
    void (*relu_backward)(double*, const double*, const double*, std::size_t);
};

constexpr DispatchTable kScalarTable = {
    scalar::axpy, scalar::dot, scalar::sum, scalar::relu, scalar::relu_backward};

bool cpu_supports(Backend b) {
    switch (b) {
    case Backend::scalar:
        return true;
    case Backend::avx2:
#if defined(TASEG_HAVE_AVX2)
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
        return false;
#endif
    case Backend::neon:
#if defined(TASEG_HAVE_NEON)
        return true; // baseline on aarch64
#else
        return false;
#endif
    }
    return false;
}

DispatchTable table_for(Backend b) {
    switch (b) {
#if defined(TASEG_HAVE_AVX2)
    case Backend::avx2:
        return {avx2::axpy, avx2::dot, avx2::sum, avx2::relu, avx2::relu_backward};
#endif
#if defined(TASEG_HAVE_NEON)
    case Backend::neon:
        return {neon::axpy, neon::dot, neon::sum, neon::relu, neon::relu_backward};
#endif
    default:
        return kScalarTable;
    }
}

Backend g_active = Backend::scalar;
DispatchTable g_table = kScalarTable;
bool g_initialized = false;

void ensure_init() {
    if (g_initialized) return;
    g_active = best_backend();
    g_table = table_for(g_active);
    g_initialized = true;
}

} // namespace

const char* backend_name(Backend b) {
    switch (b) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
    case Backend::neon: return "neon";
    }
    return "?";
}

Backend best_backend() {
    const char* env = std::getenv("TASEG_BACKEND");
    if (env && std::strcmp(env, "scalar") == 0) return Backend::scalar;
    if (cpu_supports(Backend::avx2)) return Backend::avx2;
    if (cpu_supports(Backend::neon)) return Backend::neon;
    return Backend::scalar;
}

Backend active_backend() {
    ensure_init();
    return g_active;
}

void set_backend(Backend b) {
    if (!cpu_supports(b))
        throw ConfigError(std::string("kernel backend not supported on this CPU: ") +
                          backend_name(b));
    g_active = b;
    g_table = table_for(b);
    g_initialized = true;
}

void axpy(double* dst, const double* src, double a, std::size_t n) {
    ensure_init();
    g_table.axpy(dst, src, a, n);
}

double dot(const double* a, const double* b, std::size_t n) {
    ensure_init();
    return g_table.dot(a, b, n);
}

double sum(const double* x, std::size_t n) {
    ensure_init();
    return g_table.sum(x, n);
}

void relu(double* dst, const double* x, std::size_t n) {
    ensure_init();
    g_table.relu(dst, x, n);
}

void relu_backward(double* dst, const double* g, const double* pre, std::size_t n) {
    ensure_init();
    g_table.relu_backward(dst, g, pre, n);
}

} // namespace taseg::kernels
