#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "priorforge/errors.hpp"

namespace pf {

enum class Mode { unconditional, supervised, unsupervised };

std::string to_string(Mode m);
Mode mode_from_string(const std::string& s);

// Flat key=value schema ('#' comments). Every key has a documented default
// except `mode` and `dataset`; unknown keys are errors.
struct TrainingConfig {
  Mode mode = Mode::unconditional;
  std::string dataset;             // synthetic | mnist | cifar10 | folder:<path>
  std::string data_root;           // default: $PRIORFORGE_DATA, else "."
  std::string out_dir = "out";
  int channels = 1;
  int code_dim = 64;
  int noise_dim = 64;
  int num_classes = 0;             // condition width; 0 in unconditional mode
  float lambda_rec = 1.0f;         // weight on the decoder's reconstruction update
  float learning_rate = 2e-4f;
  float beta1 = 0.5f;
  float beta2 = 0.999f;
  int batch_size = 32;
  int epochs = 10;
  uint64_t seed = 1;
  bool learned_prior = true;       // ablation switch A
  bool perceptual_loss = true;     // ablation switch B
  bool decoder_both_phases = true; // ablation switch C
  bool nonsaturating_generator = false;
  int dataset_limit = 0;           // 0 = use everything
  int64_t synthetic_n = 2048;
  int synthetic_classes = 4;

  bool conditional() const { return mode != Mode::unconditional; }
  void validate() const;  // throws ConfigError
  std::string to_text() const;  // canonical serialization (checkpoint snapshot)
};

TrainingConfig parse_config_text(const std::string& text);
TrainingConfig parse_config_file(const std::string& path);
void apply_override(TrainingConfig& cfg, const std::string& key, const std::string& value);

std::string default_data_root();

}  // namespace pf
