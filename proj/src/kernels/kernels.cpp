#include "umbra/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <string>

namespace umbra::kernels {

namespace ref {

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void add(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void mul(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void scale(const double* x, double alpha, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = alpha * x[i];
}

double sum(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

double max_value(const double* x, std::size_t n) {
  double m = x[0];
  for (std::size_t i = 1; i < n; ++i) m = x[i] > m ? x[i] : m;
  return m;
}

void adamw_update(double* p, double* m, double* v, const double* g, std::size_t n,
                  double lr, double beta1, double beta2, double eps,
                  double weight_decay, double inv_bc1, double inv_bc2) {
  const double one_m_b1 = 1.0 - beta1;
  const double one_m_b2 = 1.0 - beta2;
  const double decay = lr * weight_decay;
  for (std::size_t i = 0; i < n; ++i) {
    const double gi = g[i];
    m[i] = beta1 * m[i] + one_m_b1 * gi;
    v[i] = beta2 * v[i] + one_m_b2 * (gi * gi);
    const double mhat = m[i] * inv_bc1;
    const double vhat = v[i] * inv_bc2;
    const double upd = mhat / (std::sqrt(vhat) + eps);
    p[i] = (p[i] - lr * upd) - decay * p[i];
  }
}

}  // namespace ref

#if defined(__x86_64__) || defined(_M_X64)
#define UMBRA_X86 1
#else
#define UMBRA_X86 0
#endif

#if defined(__aarch64__)
#define UMBRA_ARM64 1
#else
#define UMBRA_ARM64 0
#endif

#if UMBRA_X86
namespace avx2 {
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
}  // namespace avx2
#endif

#if UMBRA_ARM64
namespace neon {
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
}  // namespace neon
#endif

namespace {

struct Table {
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*add)(const double*, const double*, double*, std::size_t);
  void (*sub)(const double*, const double*, double*, std::size_t);
  void (*mul)(const double*, const double*, double*, std::size_t);
  void (*scale)(const double*, double, double*, std::size_t);
  double (*sum)(const double*, std::size_t);
  double (*max_value)(const double*, std::size_t);
  void (*adamw)(double*, double*, double*, const double*, std::size_t, double, double,
                double, double, double, double, double);
};

constexpr Table kScalarTable = {ref::dot, ref::axpy, ref::add,       ref::sub,
                                ref::mul, ref::scale, ref::sum,      ref::max_value,
                                ref::adamw_update};

#if UMBRA_X86
constexpr Table kAvx2Table = {avx2::dot, avx2::axpy, avx2::add,       avx2::sub,
                              avx2::mul, avx2::scale, avx2::sum,      avx2::max_value,
                              avx2::adamw_update};
#endif

#if UMBRA_ARM64
constexpr Table kNeonTable = {neon::dot, neon::axpy, neon::add,       neon::sub,
                              neon::mul, neon::scale, neon::sum,      neon::max_value,
                              neon::adamw_update};
#endif

Table g_table = kScalarTable;
Backend g_active = Backend::scalar;
bool g_initialized = false;

void init_once() {
  if (g_initialized) return;
  g_initialized = true;
  if (const char* env = std::getenv("UMBRA_KERNEL_BACKEND")) {
    const std::string want(env);
    for (Backend b : {Backend::scalar, Backend::avx2, Backend::neon}) {
      if (want == name(b) && set_backend(b)) return;
    }
  }
  set_backend(best_supported());
}

}  // namespace

const char* name(Backend b) {
  switch (b) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
    case Backend::neon: return "neon";
  }
  return "?";
}

bool supported(Backend b) {
  switch (b) {
    case Backend::scalar:
      return true;
    case Backend::avx2:
#if UMBRA_X86
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Backend::neon:
#if UMBRA_ARM64
      return true;
#else
      return false;
#endif
  }
  return false;
}

Backend best_supported() {
  if (supported(Backend::avx2)) return Backend::avx2;
  if (supported(Backend::neon)) return Backend::neon;
  return Backend::scalar;
}

Backend active() {
  init_once();
  return g_active;
}

bool set_backend(Backend b) {
  if (!supported(b)) return false;
  g_initialized = true;
  g_active = b;
  switch (b) {
    case Backend::scalar: g_table = kScalarTable; break;
#if UMBRA_X86
    case Backend::avx2: g_table = kAvx2Table; break;
#endif
#if UMBRA_ARM64
    case Backend::neon: g_table = kNeonTable; break;
#endif
    default: return false;
  }
  return true;
}

double dot(const double* a, const double* b, std::size_t n) {
  init_once();
  return g_table.dot(a, b, n);
}
void axpy(double alpha, const double* x, double* y, std::size_t n) {
  init_once();
  g_table.axpy(alpha, x, y, n);
}
void add(const double* a, const double* b, double* out, std::size_t n) {
  init_once();
  g_table.add(a, b, out, n);
}
void sub(const double* a, const double* b, double* out, std::size_t n) {
  init_once();
  g_table.sub(a, b, out, n);
}
void mul(const double* a, const double* b, double* out, std::size_t n) {
  init_once();
  g_table.mul(a, b, out, n);
}
void scale(const double* x, double alpha, double* out, std::size_t n) {
  init_once();
  g_table.scale(x, alpha, out, n);
}
double sum(const double* x, std::size_t n) {
  init_once();
  return g_table.sum(x, n);
}
double max_value(const double* x, std::size_t n) {
  init_once();
  return g_table.max_value(x, n);
}
void adamw_update(double* p, double* m, double* v, const double* g, std::size_t n,
                  double lr, double beta1, double beta2, double eps,
                  double weight_decay, double inv_bc1, double inv_bc2) {
  init_once();
  g_table.adamw(p, m, v, g, n, lr, beta1, beta2, eps, weight_decay, inv_bc1, inv_bc2);
}

}  // namespace umbra::kernels
