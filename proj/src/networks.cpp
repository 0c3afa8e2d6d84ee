#include "priorforge/networks.hpp"

#include "priorforge/errors.hpp"

namespace pf {

namespace {
void expect_image(const Var& x, int channels) {
  check_shape(x->value.rank() == 4 && x->value.dim(1) == channels && x->value.dim(2) == 32 &&
                  x->value.dim(3) == 32,
              "expected N x " + std::to_string(channels) + " x 32 x 32 input, got " +
                  x->value.shape_str());
}
}  // namespace

Encoder::Encoder(int channels_, int code_dim_, Rng& rng)
    : Network("encoder"), channels(channels_), code_dim(code_dim_) {
  check_shape(code_dim >= 1 && (channels == 1 || channels == 3), "encoder: bad configuration");
  conv_in_ = ConvLayer(*this, "conv_in", channels, 64, 3, 2, 1, rng);
  block1_ = ResidualBlock(*this, "block1", 64, 64, Resample::none, rng);
  block2_ = ResidualBlock(*this, "block2", 64, 128, Resample::down, rng);
  block3_ = ResidualBlock(*this, "block3", 128, 256, Resample::down, rng);
  block4_ = ResidualBlock(*this, "block4", 256, 512, Resample::down, rng);
  fc1_ = LinearLayer(*this, "fc1", 512, 2 * code_dim, rng);
  fc_bn_ = BatchNormLayer(*this, "fc1_bn", 2 * code_dim, rng);
  fc2_ = LinearLayer(*this, "fc2", 2 * code_dim, code_dim, rng);
}

Var Encoder::forward(const Var& x) {
  expect_image(x, channels);
  Var h = relu(conv_in_.forward(x));  // 16x16
  h = block1_.forward(h);
  h = block2_.forward(h);  // 8x8
  h = block3_.forward(h);  // 4x4
  h = block4_.forward(h);  // 2x2
  h = global_avg_pool(h);
  h = relu(fc_bn_.forward(fc1_.forward(h), training()));
  return fc2_.forward(h);
}

Decoder::Decoder(int channels_, int code_dim_, Rng& rng)
    : Network("decoder"), channels(channels_), code_dim(code_dim_) {
  check_shape(code_dim >= 1, "decoder: code_dim must be positive");
  up_in_ = LinearLayer(*this, "upconv", code_dim, 512 * 4 * 4, rng);
  bn_in_ = BatchNormLayer(*this, "upconv_bn", 512, rng);
  up1_ = ResidualBlock(*this, "up1", 512, 256, Resample::up, rng);
  up2_ = ResidualBlock(*this, "up2", 256, 128, Resample::up, rng);
  up3_ = ResidualBlock(*this, "up3", 128, 64, Resample::up, rng);
  conv_out_ = ConvLayer(*this, "conv_out", 64, channels, 3, 1, 1, rng);
}

Var Decoder::forward(const Var& code) {
  check_shape(code->value.rank() == 2 && code->value.dim(1) == code_dim,
              "decoder: expected N x " + std::to_string(code_dim) + " code, got " +
                  code->value.shape_str());
  int N = code->value.dim(0);
  Var h = reshape(up_in_.forward(code), {N, 512, 4, 4});
  h = relu(bn_in_.forward(h, training()));
  h = up1_.forward(h);  // 8x8
  h = up2_.forward(h);  // 16x16
  h = up3_.forward(h);  // 32x32
  return tanh_act(conv_out_.forward(h));
}

CodeGenerator::CodeGenerator(int noise_dim_, int cond_dim_, int code_dim_, Rng& rng)
    : Network("code_generator"), noise_dim(noise_dim_), cond_dim(cond_dim_), code_dim(code_dim_) {
  check_shape(noise_dim >= 1 && cond_dim >= 0 && code_dim >= 1, "code generator: bad configuration");
  int in = noise_dim + cond_dim;
  fc1_ = LinearLayer(*this, "fc1", in, 2 * in, rng);
  bn1_ = BatchNormLayer(*this, "fc1_bn", 2 * in, rng);
  fc2_ = LinearLayer(*this, "fc2", 2 * in, code_dim, rng);
  bn2_ = BatchNormLayer(*this, "fc2_bn", code_dim, rng);
}

Var CodeGenerator::forward(const Var& noise, const Var& cond) {
  check_shape(noise->value.rank() == 2 && noise->value.dim(1) == noise_dim,
              "code generator: expected N x " + std::to_string(noise_dim) + " noise, got " +
                  noise->value.shape_str());
  check_shape((cond == nullptr) == (cond_dim == 0), "code generator: condition presence mismatch");
  Var in = noise;
  if (cond) {
    check_shape(cond->value.rank() == 2 && cond->value.dim(1) == cond_dim &&
                    cond->value.dim(0) == noise->value.dim(0),
                "code generator: bad condition shape " + cond->value.shape_str());
    in = concat_cols(noise, cond);
  }
  Var h = relu(bn1_.forward(fc1_.forward(in), training()));
  return bn2_.forward(fc2_.forward(h), training());
}

ImageDiscriminator::ImageDiscriminator(int channels_, int num_classes_, bool q_enabled_, Rng& rng)
    : Network("image_discriminator"),
      channels(channels_),
      num_classes(num_classes_),
      q_enabled(q_enabled_) {
  check_shape(!q_enabled || num_classes >= 2, "image discriminator: Q head needs >= 2 classes");
  c1_ = ConvLayer(*this, "conv1", channels, 64, 4, 2, 1, rng);
  c2_ = ConvLayer(*this, "conv2", 64, 128, 4, 2, 1, rng);
  bn2_ = BatchNormLayer(*this, "conv2_bn", 128, rng);
  c3_ = ConvLayer(*this, "conv3", 128, 256, 4, 2, 1, rng);
  bn3_ = BatchNormLayer(*this, "conv3_bn", 256, rng);
  fc_ = LinearLayer(*this, "fc", 256 * 4 * 4, 1000, rng);
  fc_d_ = LinearLayer(*this, "d_head", 1000, 1, rng);
  q_param_start_ = named_params().size();
  if (q_enabled) fc_q_ = LinearLayer(*this, "q_head", 1000, num_classes, rng);
}

DiscriminatorOutput ImageDiscriminator::forward(const Var& x) {
  expect_image(x, channels);
  const float slope = 0.2f;
  Var h = leaky_relu(c1_.forward(x), slope);                        // 16x16
  h = leaky_relu(bn2_.forward(c2_.forward(h), training()), slope);  // 8x8
  h = leaky_relu(bn3_.forward(c3_.forward(h), training()), slope);  // 4x4
  Var feat = flatten_rows(h);
  Var t = leaky_relu(fc_.forward(feat), slope);
  DiscriminatorOutput out;
  out.features = feat;
  out.d = sigmoid(fc_d_.forward(t));
  if (q_enabled) out.q = softmax_rows(fc_q_.forward(t));
  return out;
}

std::vector<Var> ImageDiscriminator::d_params() const {
  std::vector<Var> out;
  for (size_t i = 0; i < q_param_start_; ++i) out.push_back(named_params()[i].second);
  return out;
}

std::vector<Var> ImageDiscriminator::q_params() const {
  std::vector<Var> out;
  for (size_t i = q_param_start_; i < named_params().size(); ++i)
    out.push_back(named_params()[i].second);
  return out;
}

CodeDiscriminator::CodeDiscriminator(int code_dim_, int cond_dim_, Rng& rng)
    : Network("code_discriminator"), code_dim(code_dim_), cond_dim(cond_dim_) {
  check_shape(code_dim >= 1 && cond_dim >= 0, "code discriminator: bad configuration");
  int in = code_dim + cond_dim;
  fc1_ = LinearLayer(*this, "fc1", in, 1000, rng);
  fc2_ = LinearLayer(*this, "fc2", 1000, 500, rng);
  fc3_ = LinearLayer(*this, "fc3", 500, 200, rng);
  fc4_ = LinearLayer(*this, "fc4", 200, 1, rng);
}

Var CodeDiscriminator::forward(const Var& code, const Var& cond) {
  check_shape(code->value.rank() == 2 && code->value.dim(1) == code_dim,
              "code discriminator: expected N x " + std::to_string(code_dim) + " code, got " +
                  code->value.shape_str());
  check_shape((cond == nullptr) == (cond_dim == 0), "code discriminator: condition presence mismatch");
  Var in = code;
  if (cond) {
    check_shape(cond->value.rank() == 2 && cond->value.dim(1) == cond_dim &&
                    cond->value.dim(0) == code->value.dim(0),
                "code discriminator: bad condition shape " + cond->value.shape_str());
    in = concat_cols(code, cond);
  }
  const float slope = 0.2f;
  Var h = leaky_relu(fc1_.forward(in), slope);
  h = leaky_relu(fc2_.forward(h), slope);
  h = leaky_relu(fc3_.forward(h), slope);
  return sigmoid(fc4_.forward(h));
}

std::unique_ptr<Encoder> build_encoder(int channels, int code_dim, Rng& rng) {
  return std::make_unique<Encoder>(channels, code_dim, rng);
}
std::unique_ptr<Decoder> build_decoder(int channels, int code_dim, Rng& rng) {
  return std::make_unique<Decoder>(channels, code_dim, rng);
}
std::unique_ptr<CodeGenerator> build_code_generator(int noise_dim, int cond_dim, int code_dim,
                                                    Rng& rng) {
  return std::make_unique<CodeGenerator>(noise_dim, cond_dim, code_dim, rng);
}
std::unique_ptr<ImageDiscriminator> build_image_discriminator(int channels, int num_classes,
                                                              bool q_enabled, Rng& rng) {
  return std::make_unique<ImageDiscriminator>(channels, num_classes, q_enabled, rng);
}
std::unique_ptr<CodeDiscriminator> build_code_discriminator(int code_dim, int cond_dim, Rng& rng) {
  return std::make_unique<CodeDiscriminator>(code_dim, cond_dim, rng);
}

}  // namespace pf
