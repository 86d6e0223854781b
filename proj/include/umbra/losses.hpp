#pragma once

// Penumbra-aware semantic loss, edge loss, mask loss, and their weighted
// combination. The tensor variants are differentiable end to end; total_loss
// on plain doubles is the bookkeeping form used for logging and tests.

#include <vector>

#include "umbra/tensor.hpp"

namespace umbra {

struct LossWeights {
  double lambda_sem = 1.0;
  double lambda_edge = 0.5;
  double lambda_mask = 1.0;
};

struct LossBreakdown {
  double sem = 0.0, edge = 0.0, mask = 0.0, total = 0.0;
};

// 1 - (2 sum(p t) + eps) / (sum p + sum t + eps)
Tensor dice_loss(const Tensor& probs, const Tensor& target, double eps = 1.0);

// Sum over stages of per-stage mean squared error.
Tensor sem_loss(const std::vector<Tensor>& aux_masks, const std::vector<Tensor>& targets);

// bce_with_logits(logits, gt) + dice(sigmoid(logits), gt)
Tensor edge_loss(const Tensor& edge_logits, const Tensor& edge_gt);
Tensor mask_loss(const Tensor& mask_logits, const Tensor& mask_gt);

LossBreakdown total_loss(double sem, double edge, double mask, const LossWeights& w);

// Weighted sum of the enabled terms; a disabled term contributes exactly
// nothing to the value or the gradients (it is never added into the graph).
Tensor combine_losses(const Tensor& sem, const Tensor& edge, const Tensor& mask,
                      const LossWeights& w, bool sem_enabled, bool edge_enabled,
                      bool mask_enabled);

}  // namespace umbra
