#include "priorforge/objectives.hpp"

#include "priorforge/errors.hpp"

namespace pf {

namespace {
void expect_prob_column(const Var& p, const char* what) {
  check_shape(p->value.rank() == 2 && p->value.dim(1) == 1,
              std::string(what) + ": expected N x 1 probabilities, got " + p->value.shape_str());
}
}  // namespace

Var image_adversarial_loss(const Var& d_real, const Var& d_fake) {
  expect_prob_column(d_real, "image_adversarial_loss");
  expect_prob_column(d_fake, "image_adversarial_loss");
  check_shape(d_real->value.dim(0) == d_fake->value.dim(0),
              "image_adversarial_loss: batch size mismatch");
  return add(mean_log(d_real), mean_log_one_minus(d_fake));
}

Var code_adversarial_loss(const Var& d_prior, const Var& d_enc) {
  expect_prob_column(d_prior, "code_adversarial_loss");
  expect_prob_column(d_enc, "code_adversarial_loss");
  check_shape(d_prior->value.dim(0) == d_enc->value.dim(0),
              "code_adversarial_loss: batch size mismatch");
  return add(mean_log(d_prior), mean_log_one_minus(d_enc));
}

Var perceptual_loss(const Var& features_recon, const Var& features_orig) {
  check_shape(features_recon->value.same_shape(features_orig->value),
              "perceptual_loss: feature shape mismatch");
  return mse_mean(features_recon, detach(features_orig));
}

Var pixel_mse_loss(const Var& x_recon, const Var& x) {
  check_shape(x_recon->value.same_shape(x->value), "pixel_mse_loss: shape mismatch");
  return mse_mean(x_recon, x);
}

Var mi_category_loss(const Var& q, const Tensor& onehot) { return cross_entropy_rows(q, onehot); }

namespace {
LossValue value_of(const Var& v) { return LossValue{v->value.data[0]}; }
Var leafc(const Tensor& t) { return make_leaf(t, false); }
}  // namespace

LossValue image_adversarial_loss(const Tensor& d_real, const Tensor& d_fake) {
  return value_of(image_adversarial_loss(leafc(d_real), leafc(d_fake)));
}
LossValue code_adversarial_loss(const Tensor& d_prior, const Tensor& d_enc) {
  return value_of(code_adversarial_loss(leafc(d_prior), leafc(d_enc)));
}
LossValue perceptual_loss(const Tensor& features_recon, const Tensor& features_orig) {
  return value_of(perceptual_loss(leafc(features_recon), leafc(features_orig)));
}
LossValue pixel_mse_loss(const Tensor& x_recon, const Tensor& x) {
  return value_of(pixel_mse_loss(leafc(x_recon), leafc(x)));
}
LossValue mi_category_loss(const Tensor& q, const Tensor& onehot) {
  return value_of(mi_category_loss(leafc(q), onehot));
}

}  // namespace pf
