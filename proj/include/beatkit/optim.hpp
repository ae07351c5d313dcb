#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "beatkit/tensor.hpp"

namespace beatkit::ad {

struct AdamWConfig {
  double lr_max = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

// Decoupled-weight-decay Adam with bias correction. Parameters are updated
// in place; entries flagged fixed in the mask are never touched.
class AdamW {
 public:
  explicit AdamW(AdamWConfig cfg = {}) : cfg_(cfg) {}

  const AdamWConfig& config() const { return cfg_; }
  long long step_count() const { return step_; }

  // mask: optional per-entry trainability flags (same length as param data,
  // nonzero = trainable). Empty mask means fully trainable.
  void step(std::vector<Tensor*> params, const std::vector<Tensor>& grads, double lr,
            const std::vector<std::vector<char>>& masks = {}) {
    if (params.size() != grads.size()) throw std::invalid_argument("adamw: param/grad count");
    for (const Tensor& g : grads)
      if (!g.all_finite()) throw std::runtime_error("adamw: non-finite gradient, step aborted");
    if (m_.empty()) {
      for (Tensor* p : params) {
        m_.emplace_back(p->rows, p->cols);
        v_.emplace_back(p->rows, p->cols);
      }
    }
    if (m_.size() != params.size()) throw std::invalid_argument("adamw: state/param count");
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (size_t k = 0; k < params.size(); ++k) {
      Tensor& p = *params[k];
      const Tensor& g = grads[k];
      if (!p.same_shape(g)) throw std::invalid_argument("adamw: grad shape mismatch");
      const std::vector<char>* mask = nullptr;
      if (!masks.empty()) {
        if (masks[k].size() != p.numel() && !masks[k].empty())
          throw std::invalid_argument("adamw: mask length mismatch");
        if (!masks[k].empty()) mask = &masks[k];
      }
      for (size_t i = 0; i < p.numel(); ++i) {
        if (mask && !(*mask)[i]) continue;
        double& m = m_[k].data[i];
        double& v = v_[k].data[i];
        m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g.data[i];
        v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g.data[i] * g.data[i];
        const double mhat = m / bc1;
        const double vhat = v / bc2;
        p.data[i] -= lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * p.data[i]);
      }
    }
  }

 private:
  AdamWConfig cfg_;
  std::vector<Tensor> m_, v_;
  long long step_ = 0;
};

// Cosine annealing from lr_max down to lr_min across total_steps.
inline double cosine_lr(long long step, long long total_steps, double lr_max,
                        double lr_min = 0.0) {
  if (total_steps <= 0) throw std::invalid_argument("cosine_lr: total_steps must be positive");
  if (step < 0 || step > total_steps) throw std::invalid_argument("cosine_lr: step out of range");
  const double t = static_cast<double>(step) / static_cast<double>(total_steps);
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(M_PI * t));
}

}  // namespace beatkit::ad
