#pragma once

#include <memory>

#include "priorforge/layers.hpp"

namespace pf {

// The five networks follow the reference layer tables for 32x32 inputs.

class Encoder : public Network {
 public:
  Encoder(int channels, int code_dim, Rng& rng);
  // N x C x 32 x 32 -> N x code_dim
  Var forward(const Var& x);

  int channels, code_dim;

 private:
  ConvLayer conv_in_;
  ResidualBlock block1_, block2_, block3_, block4_;
  LinearLayer fc1_, fc2_;
  BatchNormLayer fc_bn_;
};

class Decoder : public Network {
 public:
  Decoder(int channels, int code_dim, Rng& rng);
  // N x code_dim -> N x C x 32 x 32, values strictly inside (-1, 1)
  Var forward(const Var& code);

  int channels, code_dim;

 private:
  LinearLayer up_in_;  // 4x4 up-conv from a 1x1 spatial code: FC to 512*4*4
  BatchNormLayer bn_in_;
  ResidualBlock up1_, up2_, up3_;
  ConvLayer conv_out_;
};

class CodeGenerator : public Network {
 public:
  CodeGenerator(int noise_dim, int cond_dim, int code_dim, Rng& rng);
  // noise N x noise_dim, cond N x cond_dim (null iff cond_dim == 0)
  Var forward(const Var& noise, const Var& cond = nullptr);

  int noise_dim, cond_dim, code_dim;

 private:
  LinearLayer fc1_, fc2_;
  BatchNormLayer bn1_, bn2_;
};

struct DiscriminatorOutput {
  Var d;         // N x 1 in (0,1)
  Var q;         // N x K rows summing to 1; null when the Q head is disabled
  Var features;  // N x (256*4*4), flattened last-conv activations
};

class ImageDiscriminator : public Network {
 public:
  ImageDiscriminator(int channels, int num_classes, bool q_enabled, Rng& rng);
  DiscriminatorOutput forward(const Var& x);

  // The Q head is a separate parameter group from the trunk + D head.
  std::vector<Var> d_params() const;
  std::vector<Var> q_params() const;

  int channels, num_classes;
  bool q_enabled;

 private:
  ConvLayer c1_, c2_, c3_;
  BatchNormLayer bn2_, bn3_;
  LinearLayer fc_, fc_d_, fc_q_;
  size_t q_param_start_ = 0;
};

class CodeDiscriminator : public Network {
 public:
  CodeDiscriminator(int code_dim, int cond_dim, Rng& rng);
  // code N x code_dim, cond N x cond_dim (null iff cond_dim == 0) -> N x 1
  Var forward(const Var& code, const Var& cond = nullptr);

  int code_dim, cond_dim;

 private:
  LinearLayer fc1_, fc2_, fc3_, fc4_;
};

std::unique_ptr<Encoder> build_encoder(int channels, int code_dim, Rng& rng);
std::unique_ptr<Decoder> build_decoder(int channels, int code_dim, Rng& rng);
std::unique_ptr<CodeGenerator> build_code_generator(int noise_dim, int cond_dim, int code_dim,
                                                    Rng& rng);
std::unique_ptr<ImageDiscriminator> build_image_discriminator(int channels, int num_classes,
                                                              bool q_enabled, Rng& rng);
std::unique_ptr<CodeDiscriminator> build_code_discriminator(int code_dim, int cond_dim, Rng& rng);

}  // namespace pf
