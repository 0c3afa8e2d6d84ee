#include "priorforge/optim.hpp"

#include <cmath>

#include "priorforge/errors.hpp"

namespace pf {

Adam::Adam(std::vector<Var> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.push_back(Tensor::zeros(p->value.shape));
    v_.push_back(Tensor::zeros(p->value.shape));
  }
}

void Adam::step(float grad_scale) {
  std::vector<Tensor> grads = grad_snapshot();
  step_with(grads, grad_scale);
}

void Adam::step_with(const std::vector<Tensor>& grads, float grad_scale) {
  check_shape(grads.size() == params_.size(), "adam: gradient list size mismatch");
  ++t_;
  float bc1 = 1.0f - std::pow(cfg_.beta1, static_cast<float>(t_));
  float bc2 = 1.0f - std::pow(cfg_.beta2, static_cast<float>(t_));
  for (size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i]->value;
    const Tensor& g = grads[i];
    check_shape(g.same_shape(p), "adam: gradient shape mismatch");
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (int64_t j = 0; j < p.numel(); ++j) {
      float gj = grad_scale * g.data[j];
      m.data[j] = cfg_.beta1 * m.data[j] + (1.0f - cfg_.beta1) * gj;
      v.data[j] = cfg_.beta2 * v.data[j] + (1.0f - cfg_.beta2) * gj * gj;
      float mhat = m.data[j] / bc1;
      float vhat = v.data[j] / bc2;
      p.data[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

std::vector<Tensor> Adam::grad_snapshot() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& p : params_)
    out.push_back(p->has_grad() ? p->grad : Tensor::zeros(p->value.shape));
  return out;
}

}  // namespace pf
