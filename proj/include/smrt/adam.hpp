#pragma once

// Adam with bias correction, decoupled weight decay, and an inverse-sqrt
// learning-rate schedule with linear warmup.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "smrt/tensor.hpp"

namespace smrt {

struct NamedParam {
  std::string name;
  Tensor value;
};

struct AdamConfig {
  double peak_lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-8;
  double weight_decay = 1e-4;
  double clip_norm = 0.0;  // 0 disables clipping
  int warmup_updates = 4000;
  double warmup_init_lr = 1e-7;
  double min_lr = 1e-9;
};

class AdamOptimizer {
 public:
  explicit AdamOptimizer(AdamConfig cfg = {}) : cfg_(cfg) {}

  const AdamConfig& config() const { return cfg_; }
  std::int64_t step_count() const { return step_; }

  // Linear warmup from warmup_init_lr to peak over warmup_updates, then
  // peak * sqrt(warmup/t), floored at min_lr.
  double lr_at(std::int64_t t) const {
    double lr;
    if (t <= cfg_.warmup_updates) {
      lr = cfg_.warmup_init_lr +
           (cfg_.peak_lr - cfg_.warmup_init_lr) * static_cast<double>(t) / cfg_.warmup_updates;
    } else {
      lr = cfg_.peak_lr * std::sqrt(static_cast<double>(cfg_.warmup_updates) / t);
    }
    return std::max(lr, cfg_.min_lr);
  }

  void step(std::vector<NamedParam>& params) {
    if (m_.empty()) {
      m_.resize(params.size());
      v_.resize(params.size());
      for (size_t i = 0; i < params.size(); ++i) {
        m_[i].assign(params[i].value.values().size(), 0.0);
        v_[i].assign(params[i].value.values().size(), 0.0);
      }
    }
    if (m_.size() != params.size())
      throw std::invalid_argument("adam: parameter count changed between steps");

    ++step_;
    const double lr = lr_at(step_);

    double clip_scale = 1.0;
    if (cfg_.clip_norm > 0.0) {
      double sq = 0.0;
      for (auto& p : params)
        if (p.value.grad_allocated())
          for (double g : p.value.grad()) sq += g * g;
      const double norm = std::sqrt(sq);
      if (norm > cfg_.clip_norm) clip_scale = cfg_.clip_norm / norm;
    }

    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (size_t i = 0; i < params.size(); ++i) {
      auto& vals = params[i].value.values();
      const auto& grads = params[i].value.grad();
      for (size_t j = 0; j < vals.size(); ++j) {
        const double g = grads[j] * clip_scale;
        if (!std::isfinite(g))
          throw std::runtime_error("adam: non-finite gradient in parameter '" + params[i].name +
                                   "' at index " + std::to_string(j));
        m_[i][j] = cfg_.beta1 * m_[i][j] + (1.0 - cfg_.beta1) * g;
        v_[i][j] = cfg_.beta2 * v_[i][j] + (1.0 - cfg_.beta2) * g * g;
        const double mhat = m_[i][j] / bc1;
        const double vhat = v_[i][j] / bc2;
        vals[j] -= lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * vals[j]);
      }
    }
  }

 private:
  AdamConfig cfg_;
  std::int64_t step_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace smrt
