#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "priorforge/evaluation.hpp"
#include "test_util.hpp"

using namespace pf;
using namespace pf::testutil;
namespace fs = std::filesystem;

TEST_CASE("score oracle: uniform rows give exactly 1") {
  Tensor probs = Tensor::full({40, 10}, 0.1f);
  ScoreResult r = inception_score(probs, 4);
  CHECK(r.mean == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.stddev == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(r.n == 40);
  CHECK(r.splits == 4);
}

TEST_CASE("score oracle: confident balanced rows give K") {
  Tensor probs = Tensor::zeros({50, 10});
  for (int i = 0; i < 50; ++i) probs.data[i * 10 + i % 10] = 1.0f;
  ScoreResult r = inception_score(probs, 1);
  CHECK(r.mean == doctest::Approx(10.0).epsilon(1e-6));
  CHECK(r.stddev == 0.0);
}

TEST_CASE("score oracle: two-row hand computation") {
  Tensor probs({2, 2}, {0.9f, 0.1f, 0.1f, 0.9f});
  ScoreResult r = inception_score(probs, 1);
  // marginal (0.5, 0.5); each row KL = 0.9 ln 1.8 + 0.1 ln 0.2 = 0.368064
  CHECK(r.mean == doctest::Approx(1.444940).epsilon(1e-5));
}

TEST_CASE("score properties: bounds, permutation and duplication invariance") {
  Rng rng(3);
  const int N = 30, K = 5;
  Tensor probs({N, K});
  for (int i = 0; i < N; ++i) {
    double z = 0.0;
    for (int k = 0; k < K; ++k) {
      probs.data[i * K + k] = std::exp(rng.normalf());
      z += probs.data[i * K + k];
    }
    for (int k = 0; k < K; ++k) probs.data[i * K + k] = static_cast<float>(probs.data[i * K + k] / z);
  }
  ScoreResult base = inception_score(probs, 1);
  CHECK(base.mean >= 1.0);
  CHECK(base.mean <= K);

  // permuting rows within the single split changes nothing
  Tensor shuffled = probs;
  Rng prm(4);
  std::vector<int> order(N);
  for (int i = 0; i < N; ++i) order[static_cast<size_t>(i)] = i;
  prm.shuffle(order);
  for (int i = 0; i < N; ++i)
    std::copy_n(probs.ptr() + order[static_cast<size_t>(i)] * K, K, shuffled.ptr() + i * K);
  CHECK(inception_score(shuffled, 1).mean == doctest::Approx(base.mean).epsilon(1e-9));

  // duplicating all rows leaves the single-split score unchanged
  Tensor doubled({2 * N, K});
  std::copy_n(probs.ptr(), N * K, doubled.ptr());
  std::copy_n(probs.ptr(), N * K, doubled.ptr() + N * K);
  CHECK(inception_score(doubled, 1).mean == doctest::Approx(base.mean).epsilon(1e-9));
}

TEST_CASE("score input validation and remainder dropping") {
  CHECK_THROWS_AS(inception_score(Tensor::full({10, 1}, 1.0f), 1), ShapeError);  // K < 2
  CHECK_THROWS_AS(inception_score(Tensor::full({3, 2}, 0.5f), 4), ConfigError);  // more splits than rows
  CHECK_THROWS_AS(inception_score(Tensor::full({4, 2}, 0.5f), 0), ConfigError);

  ScoreResult r = inception_score(Tensor::full({11, 2}, 0.5f), 3);  // 11 -> 3 splits of 3
  CHECK(r.n == 9);
}

TEST_CASE("classifier training reaches the floor on synthetic data and round-trips") {
  DatasetHandle data = synthetic_dataset(512, 2, 7);
  ClassifierTrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 32;
  cfg.seed = 7;
  Classifier clf = train_eval_classifier(data, cfg);
  CHECK(clf.num_classes == 2);
  CHECK(clf.channels == 1);
  double acc = clf.accuracy(data.images, data.labels);
  CHECK(acc >= 0.95);

  Tensor probs = clf.predict_probs(data.images);
  CHECK(probs.shape == std::vector<int>{512, 2});
  for (int i = 0; i < 512; ++i)
    CHECK(probs.data[i * 2] + probs.data[i * 2 + 1] == doctest::Approx(1.0f).epsilon(1e-4));

  fs::path path = fs::temp_directory_path() / "pf_clf.bin";
  save_classifier(path.string(), clf);
  Classifier back = load_classifier(path.string());
  CHECK(back.num_classes == 2);
  Tensor probs2 = back.predict_probs(data.images);
  CHECK(probs.data == probs2.data);  // bitwise identical predictions

  CHECK_THROWS_AS(clf.predict_probs(Tensor::zeros({2, 3, 32, 32})), ShapeError);
}

TEST_CASE("classifier trainer rejects unusable datasets") {
  DatasetHandle unlabeled;
  unlabeled.images = Tensor::zeros({64, 1, 32, 32});
  ClassifierTrainConfig cfg;
  CHECK_THROWS_AS(train_eval_classifier(unlabeled, cfg), DataError);

  DatasetHandle tiny = synthetic_dataset(16, 2, 1);
  cfg.batch_size = 64;
  CHECK_THROWS_AS(train_eval_classifier(tiny, cfg), DataError);
}

TEST_CASE("conditional accuracy: chance level for an untrained decoder, validation") {
  DatasetHandle data = synthetic_dataset(512, 2, 7);
  ClassifierTrainConfig ccfg;
  ccfg.epochs = 3;
  ccfg.batch_size = 32;
  ccfg.seed = 7;
  Classifier clf = train_eval_classifier(data, ccfg);

  TrainingConfig cfg;
  cfg.mode = Mode::supervised;
  cfg.dataset = "synthetic";
  cfg.num_classes = 2;
  cfg.code_dim = 8;
  cfg.noise_dim = 6;
  Rng build(9);
  ModelSet m = build_models(cfg, build);
  m.set_train(false);

  double acc = conditional_accuracy(m, cfg, clf, 50, 11);
  CHECK(acc >= 0.0);
  CHECK(acc <= 1.0);
  // an untrained decoder cannot systematically match labels; stay near chance
  CHECK(acc > 0.1);
  CHECK(acc < 0.9);

  TrainingConfig mismatched = cfg;
  mismatched.num_classes = 3;
  Rng build2(10);
  ModelSet m3 = build_models(mismatched, build2);
  CHECK_THROWS_AS(conditional_accuracy(m3, mismatched, clf, 10, 1), ConfigError);

  TrainingConfig un;
  un.dataset = "synthetic";
  Rng build3(11);
  ModelSet mu = build_models(un, build3);
  CHECK_THROWS_AS(conditional_accuracy(mu, un, clf, 10, 1), ConfigError);
}
