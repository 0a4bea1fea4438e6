#pragma once

#include <cstddef>

// Internal declarations of the per-backend kernel entry points. Each set
// lives in its own translation unit compiled with the matching ISA flags
// and is only dereferenced after a runtime capability check.

namespace taseg::kernels {

#if defined(TASEG_HAVE_AVX2)
namespace avx2 {
void axpy(double* dst, const double* src, double a, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
void relu(double* dst, const double* x, std::size_t n);
void relu_backward(double* dst, const double* g, const double* pre, std::size_t n);
} // namespace avx2
#endif

#if defined(TASEG_HAVE_NEON)
namespace neon {
void axpy(double* dst, const double* src, double a, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
double sum(const double* x, std::size_t n);
void relu(double* dst, const double* x, std::size_t n);
void relu_backward(double* dst, const double* g, const double* pre, std::size_t n);
} // namespace neon
#endif

} // namespace taseg::kernels
