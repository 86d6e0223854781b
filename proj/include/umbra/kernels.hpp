#pragma once

// Runtime-dispatched arithmetic kernels. Every hot inner loop of the tensor
// engine funnels through these entry points; a scalar reference implementation
// is always available and SIMD variants (AVX2 on x86-64, NEON on aarch64) are
// selected at startup when the CPU supports them. The SIMD variants are
// equivalence-tested against the scalar reference.

#include <cstddef>

namespace umbra::kernels {

enum class Backend { scalar, avx2, neon };

const char* name(Backend b);
bool supported(Backend b);
Backend best_supported();
Backend active();
// Returns false (and leaves the active backend unchanged) if unsupported.
bool set_backend(Backend b);

double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);  // y += alpha*x
void add(const double* a, const double* b, double* out, std::size_t n);
void sub(const double* a, const double* b, double* out, std::size_t n);
void mul(const double* a, const double* b, double* out, std::size_t n);
void scale(const double* x, double alpha, double* out, std::size_t n);
double sum(const double* x, std::size_t n);
double max_value(const double* x, std::size_t n);  // n >= 1

// Fused decoupled-weight-decay moment update over one parameter block.
// inv_bc1/inv_bc2 are the 1/(1-beta^t) bias corrections for the step.
void adamw_update(double* p, double* m, double* v, const double* g, std::size_t n,
                  double lr, double beta1, double beta2, double eps,
                  double weight_decay, double inv_bc1, double inv_bc2);

// Scalar reference implementations (fixed semantics, used by equivalence tests).
namespace ref {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void add(const double* a, const double* b, double* out, std::size_t n);
void sub(const double* a, const double* b, double* out, std::size_t n);
void mul(const double* a, const double* b, double* out, std::size_t n);
void scale(const double* x, double alpha, double* out, std::size_t n);
double sum(const double* x, std::size_t n);
double max_value(const double* x, std::size_t n);
void adamw_update(double* p, double* m, double* v, const double* g, std::size_t n,
                  double lr, double beta1, double beta2, double eps,
                  double weight_decay, double inv_bc1, double inv_bc2);
}  // namespace ref

}  // namespace umbra::kernels
