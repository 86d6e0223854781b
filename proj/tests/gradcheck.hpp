#pragma once

// Central-difference gradient checking against the autodiff engine.
// The forward callback must rebuild the graph from the given leaves on every
// call; leaves are perturbed in place.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "umbra/rng.hpp"
#include "umbra/tensor.hpp"

namespace umbra::test {

struct GradCheckResult {
  double max_rel_err = 0.0;
  int checked = 0;
};

inline double grad_rel_err(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

// max_per_leaf < 0 checks every element; otherwise a seeded sample.
inline GradCheckResult grad_check(const std::function<Tensor()>& forward,
                                  std::vector<Tensor> leaves, double step = 1e-5,
                                  int max_per_leaf = -1, std::uint64_t seed = 0) {
  for (auto& l : leaves) l.zero_grad();
  Tensor loss = forward();
  backward(loss);

  std::vector<std::vector<double>> analytic;
  for (auto& l : leaves)
    analytic.push_back(l.has_grad() ? l.grad() : std::vector<double>(l.values().size(), 0.0));

  Rng rng(seed ^ 0x5eedf00dull);
  GradCheckResult res;
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    auto& vals = leaves[li].values();
    std::vector<std::size_t> idx(vals.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    if (max_per_leaf >= 0 && idx.size() > static_cast<std::size_t>(max_per_leaf)) {
      for (std::size_t i = idx.size() - 1; i > 0; --i)
        std::swap(idx[i], idx[rng.u64() % (i + 1)]);
      idx.resize(static_cast<std::size_t>(max_per_leaf));
    }
    for (std::size_t i : idx) {
      const double keep = vals[i];
      vals[i] = keep + step;
      const double f_plus = forward().item();
      vals[i] = keep - step;
      const double f_minus = forward().item();
      vals[i] = keep;
      const double numeric = (f_plus - f_minus) / (2.0 * step);
      res.max_rel_err = std::max(res.max_rel_err, grad_rel_err(analytic[li][i], numeric));
      ++res.checked;
    }
  }
  return res;
}

}  // namespace umbra::test
