#pragma once

#include "priorforge/checkpoint.hpp"
#include "priorforge/data.hpp"

namespace pf {

struct ScoreResult {
  double mean = 0.0;
  double stddev = 0.0;
  int splits = 0;
  int64_t n = 0;  // rows actually scored (remainder dropped)
};

// Split-wise exp(mean KL(p(y|x) || marginal)), natural log; rows past the
// last full split are dropped. probs rows must each sum to 1.
ScoreResult inception_score(const Tensor& probs, int splits = 10);

// Image classifier with the discriminator trunk and a softmax head; stands
// in for a large pretrained scoring network at this scale.
struct Classifier {
  std::unique_ptr<ImageDiscriminator> net;
  int channels = 1;
  int num_classes = 0;

  // N x C x 32 x 32 -> N x K softmax rows, eval mode, batched.
  Tensor predict_probs(const Tensor& images, int batch = 256) const;
  double accuracy(const Tensor& images, const std::vector<int>& labels) const;
};

struct ClassifierTrainConfig {
  int epochs = 3;
  int batch_size = 64;
  float learning_rate = 1e-3f;
  float holdout_fraction = 0.1f;
  float accuracy_floor = 0.95f;
  uint64_t seed = 1;
};

// Trains on a holdout split and requires the floor to be met on the held-out
// part; throws NumericError with the achieved accuracy otherwise.
Classifier train_eval_classifier(const DatasetHandle& data, const ClassifierTrainConfig& cfg);

void save_classifier(const std::string& path, const Classifier& clf);
Classifier load_classifier(const std::string& path);

// Per class, generates per_class images conditioned on that class and
// reports the fraction the classifier maps back to it.
double conditional_accuracy(const ModelSet& models, const TrainingConfig& cfg,
                            const Classifier& clf, int per_class, uint64_t seed);

}  // namespace pf
