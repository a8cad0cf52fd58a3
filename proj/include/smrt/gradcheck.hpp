#pragma once

// Central-finite-difference gradient verification. The loss function must be
// deterministic (dropout off) since it is re-evaluated per perturbation.

#include <cmath>
#include <functional>
#include <random>

#include "smrt/tensor.hpp"

namespace smrt {

struct GradCheckOptions {
  double eps_fd = 1e-5;
  // Coordinates sampled per parameter; <=0 checks every coordinate.
  int max_coords_per_param = 0;
  std::uint64_t seed = 0;
  // Coordinates whose analytic and numeric gradients are both below this are
  // counted as exact: for a structurally dead coordinate (e.g. a bias that
  // cancels inside softmax) the central difference is pure roundoff noise.
  double zero_tol = 1e-7;
};

// Returns max over checked coordinates of
// |analytic - central| / max(|analytic|, |central|, 1e-8).
inline double grad_check(const std::function<Tensor()>& loss_fn, std::vector<Tensor> params,
                         GradCheckOptions opt = {}) {
  for (Tensor& p : params) p.zero_grad();
  Tensor loss = loss_fn();
  if (!std::isfinite(loss.item()))
    throw std::runtime_error("grad_check: loss is not finite");
  backward(loss);

  std::mt19937_64 rng(opt.seed);
  double worst = 0.0;
  for (Tensor& p : params) {
    const size_t n = p.values().size();
    std::vector<size_t> coords;
    if (opt.max_coords_per_param > 0 && n > static_cast<size_t>(opt.max_coords_per_param)) {
      std::uniform_int_distribution<size_t> pick(0, n - 1);
      for (int i = 0; i < opt.max_coords_per_param; ++i) coords.push_back(pick(rng));
    } else {
      coords.resize(n);
      for (size_t i = 0; i < n; ++i) coords[i] = i;
    }
    for (size_t c : coords) {
      const double saved = p.values()[c];
      p.values()[c] = saved + opt.eps_fd;
      const double up = loss_fn().item();
      p.values()[c] = saved - opt.eps_fd;
      const double down = loss_fn().item();
      p.values()[c] = saved;
      const double numeric = (up - down) / (2.0 * opt.eps_fd);
      const double analytic = p.grad()[c];
      if (std::fabs(analytic) < opt.zero_tol && std::fabs(numeric) < opt.zero_tol) continue;
      const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
      worst = std::max(worst, std::fabs(analytic - numeric) / denom);
    }
  }
  return worst;
}

}  // namespace smrt
