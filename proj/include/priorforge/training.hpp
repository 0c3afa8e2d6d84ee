#pragma once

#include <functional>
#include <optional>

#include "priorforge/checkpoint.hpp"
#include "priorforge/data.hpp"
#include "priorforge/optim.hpp"

namespace pf {

struct StepMetrics {
  int64_t step = 0;
  float l_rec = 0.0f;
  float l_code_gan = 0.0f;
  float l_image_gan = 0.0f;  // valid only when has_image_gan
  float l_mi = 0.0f;         // valid only when has_mi
  bool has_image_gan = false;
  bool has_mi = false;
};

// Per-mini-batch alternation of the AAE phase and the prior-improvement
// phase. Within a phase, every gradient is evaluated at the pre-update
// point and the parameter updates are applied afterwards, so the changed
// sets match the procedure's listing exactly.
class Trainer {
 public:
  explicit Trainer(TrainingConfig cfg);

  const TrainingConfig& config() const { return cfg_; }
  ModelSet& models() { return models_; }
  uint64_t step() const { return step_; }

  // Updates D_C (ascent), encoder, and decoder (lambda-scaled); code
  // generator, D_I, and Q are untouched. labels required in supervised mode.
  void aae_phase_step(const Tensor& images, const std::vector<int>& labels, StepMetrics& m);
  // Updates D_I (ascent), decoder (unless frozen by the ablation flag),
  // code generator, and Q; encoder and D_C are untouched.
  void prior_phase_step(const Tensor& images, StepMetrics& m);

  // Both phases in order; the prior phase runs only with a learned prior.
  StepMetrics train_step(const Tensor& images, const std::vector<int>& labels);

  CheckpointData snapshot() const;

 private:
  Tensor sample_noise(int n, int dim);
  std::vector<int> sample_categories(int n);

  TrainingConfig cfg_;
  ModelSet models_;
  Rng noise_rng_;
  uint64_t step_ = 0;
  std::unique_ptr<Adam> opt_enc_, opt_dec_, opt_cg_, opt_dc_, opt_di_, opt_q_;
};

struct TrainingResult {
  std::string final_checkpoint_path;
  std::vector<StepMetrics> metrics;
};

using StepCallback = std::function<void(const StepMetrics&)>;

// Runs the full schedule: per epoch, per seeded mini-batch, AAE phase then
// prior-improvement phase. Writes a metrics log and one checkpoint per
// epoch under cfg.out_dir. On a non-finite loss, dumps diagnostic state and
// rethrows; the last epoch checkpoint is retained.
TrainingResult run_training(const TrainingConfig& cfg, const DatasetHandle& dataset,
                            const StepCallback& on_step = nullptr);

// Resolves cfg.dataset (synthetic | mnist | cifar10 | folder:<path>).
DatasetHandle load_dataset(const TrainingConfig& cfg);

}  // namespace pf
