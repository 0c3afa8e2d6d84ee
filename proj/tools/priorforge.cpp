// priorforge: train / sample / score adversarial autoencoders with a
// learned latent prior.

#include <cmath>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "priorforge/evaluation.hpp"
#include "priorforge/image_io.hpp"
#include "priorforge/sampling.hpp"
#include "priorforge/training.hpp"

namespace fs = std::filesystem;
using namespace pf;

namespace {

// Every config key doubles as a CLI flag; a flag given on the command line
// beats the config file value, which beats the default.
struct ConfigFlags {
  std::vector<std::pair<std::string, CLI::Option*>> opts;
  std::vector<std::string> values;

  void attach(CLI::App* cmd) {
    static const char* keys[] = {
        "mode", "dataset", "data_root", "out_dir", "channels", "code_dim", "noise_dim",
        "num_classes", "lambda_rec", "learning_rate", "beta1", "beta2", "batch_size",
        "epochs", "seed", "learned_prior", "perceptual_loss", "decoder_both_phases",
        "nonsaturating_generator", "dataset_limit", "synthetic_n", "synthetic_classes"};
    values.resize(std::size(keys));
    size_t i = 0;
    for (const char* key : keys) {
      std::string flag = "--" + std::string(key);
      for (auto& c : flag) c = c == '_' ? '-' : c;
      opts.emplace_back(key, cmd->add_option(flag, values[i], std::string("config key ") + key));
      ++i;
    }
  }
  void apply(TrainingConfig& cfg) const {
    size_t i = 0;
    for (const auto& [key, opt] : opts) {
      if (opt->count() > 0) apply_override(cfg, key, values[i]);
      ++i;
    }
  }
};

TrainingConfig resolve_config(const std::string& config_path, const ConfigFlags& flags) {
  TrainingConfig cfg;
  if (!config_path.empty()) cfg = parse_config_file(config_path);
  else cfg.data_root = default_data_root();
  flags.apply(cfg);
  cfg.validate();
  return cfg;
}

int run_train(const std::string& config_path, const ConfigFlags& flags) {
  TrainingConfig cfg = resolve_config(config_path, flags);
  DatasetHandle data = load_dataset(cfg);
  std::cout << "dataset " << data.name << ": " << data.size() << " images, "
            << (data.labeled() ? std::to_string(data.num_classes) + " classes" : "unlabeled")
            << "\n";
  int last_logged = -1;
  TrainingResult result = run_training(cfg, data, [&](const StepMetrics& m) {
    if (m.step % 50 == 0 || m.step == 1) {
      std::cout << "step " << m.step << "  l_rec " << m.l_rec << "  l_code_gan " << m.l_code_gan;
      if (m.has_image_gan) std::cout << "  l_image_gan " << m.l_image_gan;
      if (m.has_mi) std::cout << "  l_mi " << m.l_mi;
      std::cout << "\n";
      last_logged = static_cast<int>(m.step);
    }
  });
  (void)last_logged;
  std::cout << "final checkpoint: " << result.final_checkpoint_path << "\n";
  return 0;
}

int run_generate(const std::string& ckpt_path, int n, int grid_rows, int label_flag,
                 uint64_t seed, const std::string& out_path) {
  LoadedModel lm = load_model(ckpt_path);
  Rng rng(seed);
  Tensor tile;
  if (grid_rows > 0) {
    tile = label_noise_grid(lm.models, lm.config, grid_rows, rng);
  } else {
    std::optional<int> label;
    if (label_flag >= 0) label = label_flag;
    Tensor codes = sample_prior(lm.models, lm.config, n, rng, label);
    Tensor images = generate_images(*lm.models.decoder, codes);
    int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
    int rows = (n + cols - 1) / cols;
    if (rows * cols > n) {
      // pad with blank cells so the tile stays rectangular
      Tensor padded({rows * cols, images.dim(1), images.dim(2), images.dim(3)});
      std::fill(padded.data.begin(), padded.data.end(), -1.0f);
      std::copy(images.data.begin(), images.data.end(), padded.data.begin());
      images = std::move(padded);
    }
    tile = tile_grid(images, rows, cols);
  }
  write_png(out_path, tile);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int run_evaluate(const std::string& ckpt_path, const std::string& clf_path, int n, int splits,
                 int per_class, uint64_t seed) {
  LoadedModel lm = load_model(ckpt_path);
  Classifier clf = load_classifier(clf_path);
  if (clf.channels != lm.config.channels)
    throw ConfigError("classifier expects " + std::to_string(clf.channels) +
                      "-channel images but the checkpoint emits " +
                      std::to_string(lm.config.channels));
  Rng rng(seed);
  Tensor codes = sample_prior(lm.models, lm.config, n, rng);
  Tensor images = generate_images(*lm.models.decoder, codes);
  Tensor probs = clf.predict_probs(images);
  ScoreResult score = inception_score(probs, splits);
  std::cout << "is_mean = " << score.mean << "\n";
  std::cout << "is_std = " << score.stddev << "\n";
  std::cout << "splits = " << score.splits << "\n";
  std::cout << "n = " << score.n << "\n";
  if (lm.config.conditional()) {
    double acc = conditional_accuracy(lm.models, lm.config, clf, per_class, seed + 1);
    std::cout << "cond_accuracy = " << acc << "\n";
  }
  return 0;
}

int run_export_latents(const std::string& ckpt_path, const std::string& source,
                       const std::string& dataset_override, int n, uint64_t seed,
                       const std::string& out_path) {
  LoadedModel lm = load_model(ckpt_path);
  if (source == "encoder") {
    TrainingConfig data_cfg = lm.config;
    if (!dataset_override.empty()) data_cfg.dataset = dataset_override;
    if (data_cfg.dataset.empty()) throw ConfigError("encoder export needs a dataset");
    DatasetHandle data = load_dataset(data_cfg);
    int64_t take = n > 0 ? std::min<int64_t>(n, data.size()) : data.size();
    std::vector<int> idx(static_cast<size_t>(take));
    for (int64_t i = 0; i < take; ++i) idx[static_cast<size_t>(i)] = static_cast<int>(i);
    Tensor images = gather_images(data, idx);
    Tensor codes = encode_images(*lm.models.encoder, images);
    std::vector<int> labels = data.labeled() ? gather_labels(data, idx) : std::vector<int>{};
    write_latent_dump(out_path, codes, labels);
  } else if (source == "code_generator") {
    Rng rng(seed);
    std::vector<int> labels;
    Tensor codes = sample_prior(lm.models, lm.config, n > 0 ? n : 1000, rng, std::nullopt, &labels);
    write_latent_dump(out_path, codes, labels);
  } else {
    throw ConfigError("source must be encoder or code_generator");
  }
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int run_train_classifier(const std::string& config_path, const ConfigFlags& flags,
                         const std::string& out_path, int epochs, float lr) {
  TrainingConfig cfg;
  if (!config_path.empty()) cfg = parse_config_file(config_path);
  else {
    cfg.data_root = default_data_root();
    cfg.mode = Mode::unconditional;
  }
  flags.apply(cfg);
  if (cfg.dataset.empty()) throw ConfigError("dataset is required");
  DatasetHandle data = load_dataset(cfg);
  if (!data.labeled()) throw DataError("classifier training needs a labeled dataset");
  ClassifierTrainConfig ccfg;
  ccfg.epochs = epochs;
  ccfg.learning_rate = lr;
  ccfg.seed = cfg.seed;
  Classifier clf = train_eval_classifier(data, ccfg);
  save_classifier(out_path, clf);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adversarial autoencoder with a learned latent prior"};
  app.require_subcommand(1);

  std::string config_path, ckpt_path, clf_path, out_path, source = "code_generator";
  std::string dataset_override;
  int n = 64, grid_rows = 0, label_flag = -1, splits = 10, per_class = 100, clf_epochs = 3;
  float clf_lr = 1e-3f;
  uint64_t seed = 1;

  CLI::App* train = app.add_subcommand("train", "run the two-phase training loop");
  train->add_option("--config", config_path, "key=value config file");
  ConfigFlags train_flags;
  train_flags.attach(train);

  CLI::App* gen = app.add_subcommand("generate", "sample images from a checkpoint");
  gen->add_option("--checkpoint", ckpt_path, "trained checkpoint")->required();
  gen->add_option("--n", n, "sample count (tiled into one image)");
  gen->add_option("--grid", grid_rows, "emit a label-by-noise grid with this many rows");
  gen->add_option("--label", label_flag, "fix the class condition");
  gen->add_option("--seed", seed, "sampling seed");
  gen->add_option("--out", out_path, "output PNG")->required();

  CLI::App* eval = app.add_subcommand("evaluate", "score samples with a trained classifier");
  eval->add_option("--checkpoint", ckpt_path, "trained checkpoint")->required();
  eval->add_option("--classifier", clf_path, "classifier file")->required();
  eval->add_option("--n", n, "samples to score");
  eval->add_option("--splits", splits, "score splits");
  eval->add_option("--per-class", per_class, "samples per class for conditional accuracy");
  eval->add_option("--seed", seed, "sampling seed");

  CLI::App* exp = app.add_subcommand("export-latents", "dump latent codes with labels");
  exp->add_option("--checkpoint", ckpt_path, "trained checkpoint")->required();
  exp->add_option("--source", source, "encoder | code_generator");
  exp->add_option("--dataset", dataset_override, "dataset for encoder export");
  exp->add_option("--n", n, "row count (0 = whole dataset for encoder export)");
  exp->add_option("--seed", seed, "sampling seed");
  exp->add_option("--out", out_path, "output file")->required();

  CLI::App* tc = app.add_subcommand("train-classifier", "fit the scoring classifier");
  tc->add_option("--config", config_path, "key=value config file");
  ConfigFlags tc_flags;
  tc_flags.attach(tc);
  tc->add_option("--clf-epochs", clf_epochs, "classifier epochs");
  tc->add_option("--clf-lr", clf_lr, "classifier learning rate");
  tc->add_option("--out", out_path, "classifier output file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return run_train(config_path, train_flags);
    if (gen->parsed()) return run_generate(ckpt_path, n, grid_rows, label_flag, seed, out_path);
    if (eval->parsed()) return run_evaluate(ckpt_path, clf_path, n, splits, per_class, seed);
    if (exp->parsed())
      return run_export_latents(ckpt_path, source, dataset_override, n, seed, out_path);
    if (tc->parsed()) return run_train_classifier(config_path, tc_flags, out_path, clf_epochs, clf_lr);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ShapeError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
