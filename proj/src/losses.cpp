#include "umbra/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace umbra {

Tensor dice_loss(const Tensor& probs, const Tensor& target, double eps) {
  if (probs.shape() != target.shape())
    throw std::invalid_argument("dice_loss: shape mismatch " + shape_str(probs.shape()) +
                                " vs " + shape_str(target.shape()));
  if (eps <= 0.0) throw std::invalid_argument("dice_loss: eps must be positive");
  Tensor inter = add_scalar(scale(sum_all(mul(probs, target)), 2.0), eps);
  Tensor denom = add_scalar(add(sum_all(probs), sum_all(target)), eps);
  return add_scalar(scale(div(inter, denom), -1.0), 1.0);
}

Tensor sem_loss(const std::vector<Tensor>& aux_masks, const std::vector<Tensor>& targets) {
  if (aux_masks.size() != targets.size() || aux_masks.empty())
    throw std::invalid_argument("sem_loss: stage list mismatch");
  Tensor acc;
  for (std::size_t i = 0; i < aux_masks.size(); ++i) {
    if (aux_masks[i].shape() != targets[i].shape())
      throw std::invalid_argument("sem_loss: stage " + std::to_string(i) + " shape mismatch");
    Tensor l = mse_mean(aux_masks[i], targets[i]);
    acc = i == 0 ? l : add(acc, l);
  }
  return acc;
}

Tensor edge_loss(const Tensor& edge_logits, const Tensor& edge_gt) {
  return add(bce_with_logits_mean(edge_logits, edge_gt),
             dice_loss(sigmoid(edge_logits), edge_gt));
}

Tensor mask_loss(const Tensor& mask_logits, const Tensor& mask_gt) {
  return add(bce_with_logits_mean(mask_logits, mask_gt),
             dice_loss(sigmoid(mask_logits), mask_gt));
}

LossBreakdown total_loss(double sem, double edge, double mask, const LossWeights& w) {
  if (!std::isfinite(sem) || !std::isfinite(edge) || !std::isfinite(mask))
    throw std::invalid_argument("total_loss: non-finite loss term");
  LossBreakdown b;
  b.sem = sem;
  b.edge = edge;
  b.mask = mask;
  b.total = w.lambda_sem * sem + w.lambda_edge * edge + w.lambda_mask * mask;
  return b;
}

Tensor combine_losses(const Tensor& sem, const Tensor& edge, const Tensor& mask,
                      const LossWeights& w, bool sem_enabled, bool edge_enabled,
                      bool mask_enabled) {
  Tensor acc;
  auto add_term = [&acc](const Tensor& t, double lambda) {
    Tensor s = scale(t, lambda);
    acc = acc.defined() ? add(acc, s) : s;
  };
  if (sem_enabled && sem.defined()) add_term(sem, w.lambda_sem);
  if (edge_enabled && edge.defined()) add_term(edge, w.lambda_edge);
  if (mask_enabled && mask.defined()) add_term(mask, w.lambda_mask);
  if (!acc.defined()) throw std::invalid_argument("combine_losses: every loss disabled");
  return acc;
}

}  // namespace umbra
