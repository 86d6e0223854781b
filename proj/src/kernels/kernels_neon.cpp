// NEON variants for aarch64. Same contract as the AVX2 file: the adamw update
// mirrors the scalar reference operation order exactly.

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>
#include <cstddef>

namespace umbra::kernels::neon {

double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  for (; i + 2 <= n; i += 2) acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
  double r = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) r += a[i] * b[i];
  return r;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t vy = vld1q_f64(y + i);
    vy = vfmaq_f64(vy, va, vld1q_f64(x + i));
    vst1q_f64(y + i, vy);
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void add(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vaddq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul(const double* a, const double* b, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  for (; i < n; ++i) out[i] = a[i] * b[i];
}

void scale(const double* x, double alpha, double* out, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmulq_f64(va, vld1q_f64(x + i)));
  for (; i < n; ++i) out[i] = alpha * x[i];
}

double sum(const double* x, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vld1q_f64(x + i));
  double r = vaddvq_f64(acc);
  for (; i < n; ++i) r += x[i];
  return r;
}

double max_value(const double* x, std::size_t n) {
  std::size_t i = 0;
  double m = x[0];
  if (n >= 2) {
    float64x2_t vm = vld1q_f64(x);
    for (i = 2; i + 2 <= n; i += 2) vm = vmaxq_f64(vm, vld1q_f64(x + i));
    m = vmaxvq_f64(vm);
  } else {
    i = 1;
  }
  for (; i < n; ++i) m = x[i] > m ? x[i] : m;
  return m;
}

void adamw_update(double* p, double* m, double* v, const double* g, std::size_t n,
                  double lr, double beta1, double beta2, double eps,
                  double weight_decay, double inv_bc1, double inv_bc2) {
  const float64x2_t vb1 = vdupq_n_f64(beta1);
  const float64x2_t vb2 = vdupq_n_f64(beta2);
  const float64x2_t vomb1 = vdupq_n_f64(1.0 - beta1);
  const float64x2_t vomb2 = vdupq_n_f64(1.0 - beta2);
  const float64x2_t vlr = vdupq_n_f64(lr);
  const float64x2_t vdecay = vdupq_n_f64(lr * weight_decay);
  const float64x2_t veps = vdupq_n_f64(eps);
  const float64x2_t vibc1 = vdupq_n_f64(inv_bc1);
  const float64x2_t vibc2 = vdupq_n_f64(inv_bc2);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t vg = vld1q_f64(g + i);
    float64x2_t vm = vld1q_f64(m + i);
    float64x2_t vv = vld1q_f64(v + i);
    vm = vaddq_f64(vmulq_f64(vb1, vm), vmulq_f64(vomb1, vg));
    vv = vaddq_f64(vmulq_f64(vb2, vv), vmulq_f64(vomb2, vmulq_f64(vg, vg)));
    vst1q_f64(m + i, vm);
    vst1q_f64(v + i, vv);
    const float64x2_t mhat = vmulq_f64(vm, vibc1);
    const float64x2_t vhat = vmulq_f64(vv, vibc2);
    const float64x2_t upd = vdivq_f64(mhat, vaddq_f64(vsqrtq_f64(vhat), veps));
    float64x2_t vp = vld1q_f64(p + i);
    vp = vsubq_f64(vsubq_f64(vp, vmulq_f64(vlr, upd)), vmulq_f64(vdecay, vp));
    vst1q_f64(p + i, vp);
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

}  // namespace umbra::kernels::neon

#endif  // aarch64
