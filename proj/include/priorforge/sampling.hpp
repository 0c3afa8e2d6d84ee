#pragma once

#include <optional>

#include "priorforge/checkpoint.hpp"
#include "priorforge/rng.hpp"

namespace pf {

// Codes drawn from the prior: CG(z[, s]) with z ~ N(0, I), or z itself for
// the fixed-Gaussian baseline. `label` fixes the one-hot condition; absent,
// conditional modes sample it uniformly. labels_out, when non-null, receives
// the per-row condition. Networks are run in eval mode.
Tensor sample_prior(const ModelSet& models, const TrainingConfig& cfg, int n, Rng& rng,
                    std::optional<int> label = std::nullopt,
                    std::vector<int>* labels_out = nullptr);

// dec(codes): N x code_dim -> N x C x 32 x 32 in (-1, 1).
Tensor generate_images(Decoder& decoder, const Tensor& codes);

// enc(images): N x C x 32 x 32 -> N x code_dim, eval mode, batched.
Tensor encode_images(Encoder& encoder, const Tensor& images, int batch = 256);

// Tile where row r fixes the r-th noise draw and column c fixes class c;
// returns C x (rows*32) x (num_classes*32). Conditional checkpoints only.
Tensor label_noise_grid(const ModelSet& models, const TrainingConfig& cfg, int rows, Rng& rng);

// Delimited text dump: header dim_0..dim_{d-1},label then one row per code.
// Values print with enough digits to reload bitwise; label -1 = unlabeled.
void write_latent_dump(const std::string& path, const Tensor& codes,
                       const std::vector<int>& labels);

struct LatentDump {
  Tensor codes;
  std::vector<int> labels;
};
LatentDump read_latent_dump(const std::string& path);

}  // namespace pf
