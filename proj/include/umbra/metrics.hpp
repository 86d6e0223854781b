#pragma once

// The six evaluation metrics (MAE, F-beta, IoU, BER, S-BER, N-BER) plus the
// confusion-count primitives and per-frame aggregation.

#include <cstdint>
#include <optional>
#include <vector>

#include "umbra/maskops.hpp"

namespace umbra {

struct ConfusionCounts {
  std::int64_t tp = 0, tn = 0, fp = 0, fn = 0;
  std::int64_t total() const { return tp + tn + fp + fn; }
};

// A metric is absent on frames where its class is missing (e.g. S-BER on a
// frame with no shadow pixels); absent values are excluded from aggregation.
struct FrameMetrics {
  std::optional<double> mae, f_beta, iou, ber, s_ber, n_ber;
};

struct MetricReport {
  double mae = 0, f_beta = 0, iou = 0, ber = 0, s_ber = 0, n_ber = 0;
  std::vector<FrameMetrics> per_frame;
  int frame_count = 0;
};

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt);

// mean |pred - gt|; pred values must be in [0,1]
double mae(const SoftMask& pred, const BinaryMask& gt);

// (1+b2)PR / (b2 P + R); 0 when the denominator vanishes
double f_beta(const BinaryMask& pred, const BinaryMask& gt, double beta_sq = 0.3);

// |pred AND gt| / |pred OR gt|; 1 when both masks are empty
double iou(const BinaryMask& pred, const BinaryMask& gt);

struct BerTriple {
  std::optional<double> ber, s_ber, n_ber;
};

// s_ber = 100 (1 - tp/(tp+fn)); n_ber = 100 (1 - tn/(tn+fp)); ber = mean of
// the two. Each component is absent when its class is missing from the frame.
BerTriple ber_family(const ConfusionCounts& c);

// All six metrics for one frame: the probability map is binarized at
// `threshold` for F-beta/IoU/BER, and used as-is for MAE.
FrameMetrics frame_metrics(const SoftMask& prob, const BinaryMask& gt, double threshold = 0.5,
                           double beta_sq = 0.3);

BinaryMask binarize(const SoftMask& prob, double threshold = 0.5);

// Unweighted mean per metric over frames where the metric is present.
// Throws on an empty list.
MetricReport aggregate(const std::vector<FrameMetrics>& frames);

}  // namespace umbra
