// AVX2/FMA variants of the arithmetic kernels. This translation unit is the
// only one compiled with -mavx2 -mfma; it must not be entered on CPUs without
// AVX2 (the dispatcher checks cpuid first).

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>
#include <cstddef>

namespace umbra::kernels::avx2 {

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
  __m256d acc = _mm256_add_pd(acc0, acc1);
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double r = lanes[0] + lanes[1] + lanes[2] + lanes[3];
  for (; i < n; ++i) r += a[i] * b[i];
  return r;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vy = _mm256_loadu_pd(y + i);
    vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
    _mm256_storeu_pd(y + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void add(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void scale(const double* x, double alpha, double* out, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(out + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
  for (; i < n; ++i) out[i] = alpha * x[i];
}

double sum(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc);
  double r = lanes[0] + lanes[1] + lanes[2] + lanes[3];
  for (; i < n; ++i) r += x[i];
  return r;
}

double max_value(const double* x, std::size_t n) {
  std::size_t i = 0;
  double m = x[0];
  if (n >= 4) {
    __m256d vm = _mm256_loadu_pd(x);
    for (i = 4; i + 4 <= n; i += 4) vm = _mm256_max_pd(vm, _mm256_loadu_pd(x + i));
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, vm);
    m = lanes[0];
    for (int k = 1; k < 4; ++k) m = lanes[k] > m ? lanes[k] : m;
  } else {
    i = 1;
  }
  for (; i < n; ++i) m = x[i] > m ? x[i] : m;
  return m;
}

// Mirrors the scalar reference operation-for-operation (mul+add, sqrt, div),
// so scalar and AVX2 produce bit-identical parameter trajectories.
void adamw_update(double* p, double* m, double* v, const double* g, std::size_t n,
                  double lr, double beta1, double beta2, double eps,
                  double weight_decay, double inv_bc1, double inv_bc2) {
  const __m256d vb1 = _mm256_set1_pd(beta1);
  const __m256d vb2 = _mm256_set1_pd(beta2);
  const __m256d vomb1 = _mm256_set1_pd(1.0 - beta1);
  const __m256d vomb2 = _mm256_set1_pd(1.0 - beta2);
  const __m256d vlr = _mm256_set1_pd(lr);
  const __m256d vdecay = _mm256_set1_pd(lr * weight_decay);
  const __m256d veps = _mm256_set1_pd(eps);
  const __m256d vibc1 = _mm256_set1_pd(inv_bc1);
  const __m256d vibc2 = _mm256_set1_pd(inv_bc2);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vg = _mm256_loadu_pd(g + i);
    __m256d vm = _mm256_loadu_pd(m + i);
    __m256d vv = _mm256_loadu_pd(v + i);
    vm = _mm256_add_pd(_mm256_mul_pd(vb1, vm), _mm256_mul_pd(vomb1, vg));
    vv = _mm256_add_pd(_mm256_mul_pd(vb2, vv), _mm256_mul_pd(vomb2, _mm256_mul_pd(vg, vg)));
    _mm256_storeu_pd(m + i, vm);
    _mm256_storeu_pd(v + i, vv);
    const __m256d mhat = _mm256_mul_pd(vm, vibc1);
    const __m256d vhat = _mm256_mul_pd(vv, vibc2);
    const __m256d upd = _mm256_div_pd(mhat, _mm256_add_pd(_mm256_sqrt_pd(vhat), veps));
    __m256d vp = _mm256_loadu_pd(p + i);
    vp = _mm256_sub_pd(_mm256_sub_pd(vp, _mm256_mul_pd(vlr, upd)), _mm256_mul_pd(vdecay, vp));
    _mm256_storeu_pd(p + i, vp);
  }
  const double one_m_b1 = 1.0 - beta1;
  const double one_m_b2 = 1.0 - beta2;
  const double decay = lr * weight_decay;
  for (; i < n; ++i) {
    const double gi = g[i];
    m[i] = beta1 * m[i] + one_m_b1 * gi;
    v[i] = beta2 * v[i] + one_m_b2 * (gi * gi);
    const double mhat = m[i] * inv_bc1;
    const double vhat = v[i] * inv_bc2;
    const double upd = mhat / (std::sqrt(vhat) + eps);
    p[i] = (p[i] - lr * upd) - decay * p[i];
  }
}

}  // namespace umbra::kernels::avx2

#endif  // x86_64
