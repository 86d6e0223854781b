#include "umbra/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace umbra {

namespace {
void check_dims(int ph, int pw, int gh, int gw, const char* who) {
  if (ph != gh || pw != gw)
    throw std::invalid_argument(std::string(who) + ": dimension mismatch " + std::to_string(ph) +
                                "x" + std::to_string(pw) + " vs " + std::to_string(gh) + "x" +
                                std::to_string(gw));
}
}  // namespace

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt) {
  check_dims(pred.h, pred.w, gt.h, gt.w, "confusion");
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.v.size(); ++i) {
    const bool p = pred.v[i] != 0;
    const bool g = gt.v[i] != 0;
    if (p && g) ++c.tp;
    else if (p && !g) ++c.fp;
    else if (!p && g) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double mae(const SoftMask& pred, const BinaryMask& gt) {
  check_dims(pred.h, pred.w, gt.h, gt.w, "mae");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.v.size(); ++i)
    acc += std::abs(pred.v[i] - static_cast<double>(gt.v[i]));
  return acc / static_cast<double>(pred.v.size());
}

double f_beta(const BinaryMask& pred, const BinaryMask& gt, double beta_sq) {
  if (beta_sq <= 0.0) throw std::invalid_argument("f_beta: beta_sq must be positive");
  const ConfusionCounts c = confusion(pred, gt);
  const double precision =
      c.tp + c.fp > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  const double recall =
      c.tp + c.fn > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  const double denom = beta_sq * precision + recall;
  if (denom == 0.0) return 0.0;
  return (1.0 + beta_sq) * precision * recall / denom;
}

double iou(const BinaryMask& pred, const BinaryMask& gt) {
  const ConfusionCounts c = confusion(pred, gt);
  const std::int64_t uni = c.tp + c.fp + c.fn;
  if (uni == 0) return 1.0;
  return static_cast<double>(c.tp) / static_cast<double>(uni);
}

BerTriple ber_family(const ConfusionCounts& c) {
  BerTriple t;
  if (c.tp + c.fn > 0)
    t.s_ber = 100.0 * (1.0 - static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn));
  if (c.tn + c.fp > 0)
    t.n_ber = 100.0 * (1.0 - static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp));
  if (t.s_ber && t.n_ber) t.ber = (*t.s_ber + *t.n_ber) / 2.0;
  return t;
}

BinaryMask binarize(const SoftMask& prob, double threshold) {
  BinaryMask b(prob.h, prob.w);
  for (std::size_t i = 0; i < prob.v.size(); ++i) b.v[i] = prob.v[i] >= threshold ? 1 : 0;
  return b;
}

FrameMetrics frame_metrics(const SoftMask& prob, const BinaryMask& gt, double threshold,
                           double beta_sq) {
  check_dims(prob.h, prob.w, gt.h, gt.w, "frame_metrics");
  const BinaryMask pred = binarize(prob, threshold);
  const ConfusionCounts c = confusion(pred, gt);
  FrameMetrics m;
  m.mae = mae(prob, gt);
  m.iou = iou(pred, gt);
  // F is undefined (excluded) only when prediction and ground truth are both empty.
  if (c.tp + c.fp + c.fn > 0) m.f_beta = f_beta(pred, gt, beta_sq);
  const BerTriple b = ber_family(c);
  m.ber = b.ber;
  m.s_ber = b.s_ber;
  m.n_ber = b.n_ber;
  return m;
}

MetricReport aggregate(const std::vector<FrameMetrics>& frames) {
  if (frames.empty()) throw std::invalid_argument("aggregate: empty frame list");
  MetricReport r;
  r.per_frame = frames;
  r.frame_count = static_cast<int>(frames.size());
  auto mean_of = [&](std::optional<double> FrameMetrics::*field) {
    double acc = 0.0;
    int n = 0;
    for (const auto& f : frames)
      if (f.*field) {
        acc += *(f.*field);
        ++n;
      }
    return n > 0 ? acc / n : std::nan("");
  };
  r.mae = mean_of(&FrameMetrics::mae);
  r.f_beta = mean_of(&FrameMetrics::f_beta);
  r.iou = mean_of(&FrameMetrics::iou);
  r.ber = mean_of(&FrameMetrics::ber);
  r.s_ber = mean_of(&FrameMetrics::s_ber);
  r.n_ber = mean_of(&FrameMetrics::n_ber);
  return r;
}

}  // namespace umbra
