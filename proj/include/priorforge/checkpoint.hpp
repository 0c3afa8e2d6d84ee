#pragma once

#include <string>
#include <utility>
#include <vector>

#include "priorforge/models.hpp"

namespace pf {

// Single-file container: versioned, named tensors, little-endian 32-bit
// floats. save -> load -> save is byte-identical.
struct CheckpointData {
  uint32_t version = 1;
  std::string config_text;  // canonical TrainingConfig snapshot
  uint64_t step = 0;
  uint64_t seed = 0;
  std::vector<std::pair<std::string, Tensor>> tensors;    // params + running buffers
  std::vector<std::pair<std::string, Tensor>> opt_state;  // optimizer moments and step counts
};

void write_checkpoint_file(const std::string& path, const CheckpointData& ckpt);
CheckpointData read_checkpoint_file(const std::string& path);

// Collects "<network>.<param>" tensors (parameters then buffers, fixed
// order) from every present network.
std::vector<std::pair<std::string, Tensor>> collect_tensors(const ModelSet& models);
// Copies tensors back; throws DataError on unknown or missing names.
void restore_tensors(ModelSet& models, const std::vector<std::pair<std::string, Tensor>>& tensors);

struct LoadedModel {
  TrainingConfig config;
  ModelSet models;  // parameters restored, eval mode
  CheckpointData raw;
};
LoadedModel load_model(const std::string& path);

}  // namespace pf
