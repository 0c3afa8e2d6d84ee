#pragma once

#include "priorforge/autodiff.hpp"

namespace pf {

struct AdamConfig {
  float lr = 2e-4f;
  float beta1 = 0.5f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

// Adaptive moment estimation over a fixed parameter list. grad_scale is
// applied to the raw gradients before the moment updates, so step(-1)
// performs exact ascent and step(lambda) optimizes lambda * loss.
class Adam {
 public:
  Adam(std::vector<Var> params, AdamConfig cfg);

  void zero_grad() { pf::zero_grad(params_); }
  void step(float grad_scale = 1.0f);
  void step_with(const std::vector<Tensor>& grads, float grad_scale = 1.0f);

  // Copies of the current parameter gradients, for deferred updates.
  std::vector<Tensor> grad_snapshot() const;

  const std::vector<Var>& params() const { return params_; }
  int64_t t() const { return t_; }
  std::vector<Tensor>& moments_m() { return m_; }
  std::vector<Tensor>& moments_v() { return v_; }
  void set_t(int64_t t) { t_ = t; }

 private:
  std::vector<Var> params_;
  std::vector<Tensor> m_, v_;
  int64_t t_ = 0;
  AdamConfig cfg_;
};

}  // namespace pf
