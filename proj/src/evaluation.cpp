#include "priorforge/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include "priorforge/objectives.hpp"
#include "priorforge/optim.hpp"
#include "priorforge/sampling.hpp"

namespace pf {

ScoreResult inception_score(const Tensor& probs, int splits) {
  check_shape(probs.rank() == 2, "scores expect N x K probability rows");
  const int64_t N = probs.dim(0);
  const int K = probs.dim(1);
  check_shape(K >= 2, "scoring needs at least two classes");
  if (splits < 1) throw ConfigError("splits must be >= 1");
  const int64_t per_split = N / splits;
  if (per_split < 1) throw ConfigError("fewer rows than splits");

  std::vector<double> scores;
  scores.reserve(static_cast<size_t>(splits));
  for (int s = 0; s < splits; ++s) {
    const float* rows = probs.ptr() + s * per_split * K;
    std::vector<double> marginal(static_cast<size_t>(K), 0.0);
    for (int64_t i = 0; i < per_split; ++i)
      for (int k = 0; k < K; ++k) marginal[static_cast<size_t>(k)] += rows[i * K + k];
    for (double& m : marginal) m /= static_cast<double>(per_split);

    double kl_sum = 0.0;
    for (int64_t i = 0; i < per_split; ++i)
      for (int k = 0; k < K; ++k) {
        double p = rows[i * K + k];
        if (p > 0.0)
          kl_sum += p * (std::log(std::max(p, static_cast<double>(kLogEps))) -
                         std::log(std::max(marginal[static_cast<size_t>(k)],
                                           static_cast<double>(kLogEps))));
      }
    scores.push_back(std::exp(kl_sum / static_cast<double>(per_split)));
  }

  ScoreResult r;
  r.splits = splits;
  r.n = per_split * splits;
  for (double s : scores) r.mean += s;
  r.mean /= splits;
  for (double s : scores) r.stddev += (s - r.mean) * (s - r.mean);
  r.stddev = std::sqrt(r.stddev / splits);
  return r;
}

Tensor Classifier::predict_probs(const Tensor& images, int batch) const {
  check_shape(images.rank() == 4 && images.dim(1) == channels,
              "classifier expects N x " + std::to_string(channels) + " x 32 x 32");
  const int N = images.dim(0);
  const int64_t px = static_cast<int64_t>(images.dim(1)) * images.dim(2) * images.dim(3);
  bool was = net->training();
  net->set_train(false);
  Tensor probs({N, num_classes});
  for (int start = 0; start < N; start += batch) {
    int n = std::min(batch, N - start);
    Tensor chunk({n, images.dim(1), images.dim(2), images.dim(3)});
    std::copy_n(images.data.begin() + start * px, n * px, chunk.data.begin());
    Tensor q = net->forward(make_leaf(std::move(chunk), false)).q->value;
    std::copy_n(q.data.begin(), q.data.size(),
                probs.data.begin() + static_cast<int64_t>(start) * num_classes);
  }
  net->set_train(was);
  return probs;
}

double Classifier::accuracy(const Tensor& images, const std::vector<int>& labels) const {
  Tensor probs = predict_probs(images);
  const int N = probs.dim(0), K = probs.dim(1);
  check_shape(static_cast<int>(labels.size()) == N, "label count mismatch");
  int hits = 0;
  for (int i = 0; i < N; ++i) {
    const float* row = probs.ptr() + static_cast<int64_t>(i) * K;
    int arg = static_cast<int>(std::max_element(row, row + K) - row);
    hits += arg == labels[static_cast<size_t>(i)];
  }
  return static_cast<double>(hits) / N;
}

Classifier train_eval_classifier(const DatasetHandle& data, const ClassifierTrainConfig& cfg) {
  if (!data.labeled()) throw DataError("classifier training needs labels");
  if (data.num_classes < 2) throw DataError("classifier training needs >= 2 classes");
  const int64_t N = data.size();
  int64_t n_hold = std::max<int64_t>(1, static_cast<int64_t>(std::lround(
                                            cfg.holdout_fraction * static_cast<double>(N))));
  if (N - n_hold < cfg.batch_size) throw DataError("dataset too small for a train/holdout split");

  std::vector<int> perm(static_cast<size_t>(N));
  for (int64_t i = 0; i < N; ++i) perm[static_cast<size_t>(i)] = static_cast<int>(i);
  Rng rng(cfg.seed);
  rng.shuffle(perm);
  std::vector<int> hold_idx(perm.begin(), perm.begin() + n_hold);
  std::vector<int> train_idx(perm.begin() + n_hold, perm.end());

  DatasetHandle train;
  train.name = data.name;
  train.num_classes = data.num_classes;
  train.images = gather_images(data, train_idx);
  train.labels = gather_labels(data, train_idx);
  Tensor hold_images = gather_images(data, hold_idx);
  std::vector<int> hold_labels = gather_labels(data, hold_idx);

  Classifier clf;
  clf.channels = data.images.dim(1);
  clf.num_classes = data.num_classes;
  clf.net = build_image_discriminator(clf.channels, clf.num_classes, true, rng);
  clf.net->set_train(true);

  Adam opt(clf.net->params(), AdamConfig{cfg.learning_rate, 0.9f, 0.999f, 1e-8f});
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto batches = epoch_batches(train.size(), cfg.batch_size, cfg.seed, epoch);
    for (const auto& idx : batches) {
      Var x = make_leaf(gather_images(train, idx), false);
      Tensor onehot = one_hot(gather_labels(train, idx), clf.num_classes);
      Var loss = cross_entropy_rows(clf.net->forward(x).q, onehot);
      if (!std::isfinite(loss->value.data[0]))
        throw NumericError("non-finite classifier loss");
      opt.zero_grad();
      backward(loss);
      opt.step();
    }
  }
  clf.net->set_train(false);

  double acc = clf.accuracy(hold_images, hold_labels);
  if (acc < cfg.accuracy_floor)
    throw NumericError("classifier held-out accuracy " + std::to_string(acc) +
                       " below floor " + std::to_string(cfg.accuracy_floor));
  return clf;
}

void save_classifier(const std::string& path, const Classifier& clf) {
  CheckpointData c;
  c.config_text = "channels = " + std::to_string(clf.channels) +
                  "\nnum_classes = " + std::to_string(clf.num_classes) + "\n";
  for (const auto& [name, var] : clf.net->named_params())
    c.tensors.emplace_back(clf.net->name() + "." + name, var->value);
  for (const auto& [name, buf] : clf.net->named_buffers())
    c.tensors.emplace_back(clf.net->name() + "." + name, *buf);
  write_checkpoint_file(path, c);
}

Classifier load_classifier(const std::string& path) {
  CheckpointData raw = read_checkpoint_file(path);
  TrainingConfig snap = parse_config_text(raw.config_text);
  Classifier clf;
  clf.channels = snap.channels;
  clf.num_classes = snap.num_classes;
  Rng rng(raw.seed + 1);
  clf.net = build_image_discriminator(clf.channels, clf.num_classes, true, rng);
  size_t i = 0;
  auto take = [&](const std::string& full, Tensor& dst) {
    if (i >= raw.tensors.size() || raw.tensors[i].first != full)
      throw DataError("classifier tensor mismatch: expected " + full);
    if (!(raw.tensors[i].second.shape == dst.shape))
      throw DataError("classifier shape mismatch for " + full);
    dst = raw.tensors[i].second;
    ++i;
  };
  for (const auto& [name, var] : clf.net->named_params())
    take(clf.net->name() + "." + name, var->value);
  for (const auto& [name, buf] : clf.net->named_buffers())
    take(clf.net->name() + "." + name, *buf);
  if (i != raw.tensors.size()) throw DataError("classifier file holds extra tensors");
  clf.net->set_train(false);
  return clf;
}

double conditional_accuracy(const ModelSet& models, const TrainingConfig& cfg,
                            const Classifier& clf, int per_class, uint64_t seed) {
  if (!cfg.conditional()) throw ConfigError("conditional accuracy needs a conditional checkpoint");
  if (clf.num_classes != cfg.num_classes)
    throw ConfigError("classifier covers " + std::to_string(clf.num_classes) +
                      " classes but the checkpoint has " + std::to_string(cfg.num_classes));
  if (per_class < 1) throw ConfigError("per_class must be >= 1");

  Rng rng(seed);
  int64_t hits = 0;
  for (int s = 0; s < cfg.num_classes; ++s) {
    Tensor codes = sample_prior(models, cfg, per_class, rng, s);
    Tensor images = generate_images(*models.decoder, codes);
    Tensor probs = clf.predict_probs(images);
    for (int i = 0; i < per_class; ++i) {
      const float* row = probs.ptr() + static_cast<int64_t>(i) * cfg.num_classes;
      int arg = static_cast<int>(std::max_element(row, row + cfg.num_classes) - row);
      hits += arg == s;
    }
  }
  return static_cast<double>(hits) / (static_cast<double>(per_class) * cfg.num_classes);
}

}  // namespace pf
