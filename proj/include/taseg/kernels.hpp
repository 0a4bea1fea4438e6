#pragma once

#include <cstddef>

// Data-parallel inner loops shared by the scorer forward/backward passes.
// Every kernel has a scalar reference implementation plus SIMD variants
// selected at runtime from CPU capabilities; the variants are
// equivalence-tested against the scalar path.

namespace taseg::kernels {

enum class Backend { scalar, avx2, neon };

const char* backend_name(Backend b);

// Best backend supported by the running CPU. Honors TASEG_BACKEND=scalar
// in the environment as a global override.
Backend best_backend();

Backend active_backend();

// Switches the dispatch table. Throws taseg::ConfigError if the requested
// backend is not supported on this CPU. Not thread-safe; intended for
// startup and tests.
void set_backend(Backend b);

// dst[i] += a * src[i]
void axpy(double* dst, const double* src, double a, std::size_t n);

// sum_i a[i] * b[i]
double dot(const double* a, const double* b, std::size_t n);

// sum_i x[i]
double sum(const double* x, std::size_t n);

// dst[i] = max(x[i], 0)
void relu(double* dst, const double* x, std::size_t n);

// dst[i] = pre[i] > 0 ? g[i] : 0
void relu_backward(double* dst, const double* g, const double* pre, std::size_t n);

// Reference implementations, always available regardless of dispatch state.
namespace scalar {
void axpy(double* dst, const double* src, double a, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
void relu(double* dst, const double* x, std::size_t n);
void relu_backward(double* dst, const double* g, const double* pre, std::size_t n);
} // namespace scalar

} // namespace taseg::kernels
