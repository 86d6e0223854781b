#pragma once

// Independent scalar-loop oracles used by the unit and acceptance tests.
// These deliberately avoid the library's tensor/kernel code paths.

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace umbra::test {

// ---- tiny row-major matrix helpers ----
struct Mat {
  int rows = 0, cols = 0;
  std::vector<double> v;
  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}
  double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
};

inline Mat matmul_oracle(const Mat& a, const Mat& b) {
  Mat out(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < b.cols; ++j) {
      double acc = 0.0;
      for (int k = 0; k < a.cols; ++k) acc += a.at(i, k) * b.at(k, j);
      out.at(i, j) = acc;
    }
  return out;
}

inline Mat linear_oracle(const Mat& x, const Mat& w, const std::vector<double>& bias) {
  Mat out = matmul_oracle(x, w);
  if (!bias.empty())
    for (int i = 0; i < out.rows; ++i)
      for (int j = 0; j < out.cols; ++j) out.at(i, j) += bias[static_cast<std::size_t>(j)];
  return out;
}

inline Mat softmax_rows_oracle(const Mat& x) {
  Mat out(x.rows, x.cols);
  for (int i = 0; i < x.rows; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < x.cols; ++j) mx = std::max(mx, x.at(i, j));
    double s = 0.0;
    for (int j = 0; j < x.cols; ++j) {
      out.at(i, j) = std::exp(x.at(i, j) - mx);
      s += out.at(i, j);
    }
    for (int j = 0; j < x.cols; ++j) out.at(i, j) /= s;
  }
  return out;
}

// Multi-head attention oracle: weights given as [in][out] matrices plus biases.
struct AttnWeightsOracle {
  Mat wq, wk, wv, wo;
  std::vector<double> bq, bk, bv, bo;
  int n_heads = 1;
};

inline Mat gelu_oracle(const Mat& x) {
  Mat out(x.rows, x.cols);
  for (std::size_t i = 0; i < x.v.size(); ++i)
    out.v[i] = 0.5 * x.v[i] * (1.0 + std::erf(x.v[i] / std::sqrt(2.0)));
  return out;
}

inline Mat attention_oracle(const Mat& query, const Mat& kv, const AttnWeightsOracle& w) {
  const int c = w.wq.cols;
  const int d = c / w.n_heads;
  Mat q = linear_oracle(query, w.wq, w.bq);
  Mat k = linear_oracle(kv, w.wk, w.bk);
  Mat v = linear_oracle(kv, w.wv, w.bv);
  Mat heads(query.rows, c);
  for (int h = 0; h < w.n_heads; ++h) {
    Mat scores(query.rows, kv.rows);
    for (int i = 0; i < query.rows; ++i)
      for (int j = 0; j < kv.rows; ++j) {
        double acc = 0.0;
        for (int e = 0; e < d; ++e) acc += q.at(i, h * d + e) * k.at(j, h * d + e);
        scores.at(i, j) = acc / std::sqrt(static_cast<double>(d));
      }
    Mat probs = softmax_rows_oracle(scores);
    for (int i = 0; i < query.rows; ++i)
      for (int e = 0; e < d; ++e) {
        double acc = 0.0;
        for (int j = 0; j < kv.rows; ++j) acc += probs.at(i, j) * v.at(j, h * d + e);
        heads.at(i, h * d + e) = acc;
      }
  }
  return linear_oracle(heads, w.wo, w.bo);
}

// ---- binary mask metric oracles (plain pixel loops) ----
struct MaskOracleCounts {
  long long tp = 0, tn = 0, fp = 0, fn = 0;
};

inline MaskOracleCounts confusion_oracle(const std::vector<std::uint8_t>& pred,
                                          const std::vector<std::uint8_t>& gt) {
  MaskOracleCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] && gt[i]) ++c.tp;
    else if (pred[i] && !gt[i]) ++c.fp;
    else if (!pred[i] && gt[i]) ++c.fn;
    else ++c.tn;
  }
  return c;
}

inline double mae_oracle(const std::vector<double>& pred, const std::vector<std::uint8_t>& gt) {
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    acc += std::abs(pred[i] - static_cast<double>(gt[i]));
  return acc / static_cast<double>(pred.size());
}

inline double f_beta_oracle(const std::vector<std::uint8_t>& pred,
                            const std::vector<std::uint8_t>& gt, double beta_sq) {
  const MaskOracleCounts c = confusion_oracle(pred, gt);
  const double p = (c.tp + c.fp) > 0 ? static_cast<double>(c.tp) / (c.tp + c.fp) : 0.0;
  const double r = (c.tp + c.fn) > 0 ? static_cast<double>(c.tp) / (c.tp + c.fn) : 0.0;
  const double denom = beta_sq * p + r;
  if (denom == 0.0) return 0.0;
  return (1.0 + beta_sq) * p * r / denom;
}

inline double iou_oracle(const std::vector<std::uint8_t>& pred,
                         const std::vector<std::uint8_t>& gt) {
  long long inter = 0, uni = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    inter += (pred[i] && gt[i]) ? 1 : 0;
    uni += (pred[i] || gt[i]) ? 1 : 0;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

struct BerOracle {
  bool s_defined = false, n_defined = false;
  double s_ber = 0.0, n_ber = 0.0, ber = 0.0;
};

inline BerOracle ber_oracle(const std::vector<std::uint8_t>& pred,
                            const std::vector<std::uint8_t>& gt) {
  const MaskOracleCounts c = confusion_oracle(pred, gt);
  BerOracle o;
  if (c.tp + c.fn > 0) {
    o.s_defined = true;
    o.s_ber = 100.0 * (1.0 - static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn));
  }
  if (c.tn + c.fp > 0) {
    o.n_defined = true;
    o.n_ber = 100.0 * (1.0 - static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp));
  }
  if (o.s_defined && o.n_defined) o.ber = (o.s_ber + o.n_ber) / 2.0;
  return o;
}

// Exact nearest-zero search. Pixels outside the grid count as background,
// matching the zero-padded border convention used for erosion.
inline std::vector<double> brute_force_edt(const std::vector<std::uint8_t>& mask, int h, int w) {
  std::vector<double> out(static_cast<std::size_t>(h) * w, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!mask[static_cast<std::size_t>(y) * w + x]) continue;
      long long best = std::numeric_limits<long long>::max();
      for (int yy = 0; yy < h; ++yy)
        for (int xx = 0; xx < w; ++xx) {
          if (mask[static_cast<std::size_t>(yy) * w + xx]) continue;
          const long long dy = yy - y, dx = xx - x;
          best = std::min(best, dy * dy + dx * dx);
        }
      const long long border = std::min(std::min(y + 1, x + 1), std::min(h - y, w - x));
      best = std::min(best, border * border);
      out[static_cast<std::size_t>(y) * w + x] = std::sqrt(static_cast<double>(best));
    }
  return out;
}

}  // namespace umbra::test
