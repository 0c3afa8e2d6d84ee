#pragma once

#include "priorforge/ops.hpp"

namespace pf {

struct LossValue {
  float value = 0.0f;
};

// Mean over the batch of log d_real + log(1 - d_fake). The image
// discriminator ascends this; decoder and code generator descend it.
Var image_adversarial_loss(const Var& d_real, const Var& d_fake);

// Same form in latent code space: d_prior plays the real role, d_enc the
// fake role (labels, when used, are concatenated upstream).
Var code_adversarial_loss(const Var& d_prior, const Var& d_enc);

// Mean squared feature difference; the original's features are treated as a
// constant (no gradient flows into them).
Var perceptual_loss(const Var& features_recon, const Var& features_orig);

// Pixel-space MSE baseline for the ablation.
Var pixel_mse_loss(const Var& x_recon, const Var& x);

// Categorical cross-entropy of the Q head against the category fed to the
// code generator; minimizing it realizes the mutual-information bound.
Var mi_category_loss(const Var& q, const Tensor& onehot);

// Value-only conveniences over plain tensors.
LossValue image_adversarial_loss(const Tensor& d_real, const Tensor& d_fake);
LossValue code_adversarial_loss(const Tensor& d_prior, const Tensor& d_enc);
LossValue perceptual_loss(const Tensor& features_recon, const Tensor& features_orig);
LossValue pixel_mse_loss(const Tensor& x_recon, const Tensor& x);
LossValue mi_category_loss(const Tensor& q, const Tensor& onehot);

}  // namespace pf
