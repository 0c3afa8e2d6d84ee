#include "priorforge/training.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "priorforge/objectives.hpp"

namespace fs = std::filesystem;

namespace pf {

namespace {
constexpr uint64_t kNoiseStream = 0xA5A5A5A500000001ull;

void require_finite(float v, const char* what) {
  if (!std::isfinite(v)) throw NumericError(std::string("non-finite loss: ") + what);
}
}  // namespace

Trainer::Trainer(TrainingConfig cfg)
    : cfg_(std::move(cfg)), noise_rng_(cfg_.seed ^ kNoiseStream) {
  cfg_.validate();
  Rng init_rng(cfg_.seed);
  models_ = build_models(cfg_, init_rng);
  models_.set_train(true);

  AdamConfig ac{cfg_.learning_rate, cfg_.beta1, cfg_.beta2, 1e-8f};
  opt_enc_ = std::make_unique<Adam>(models_.encoder->params(), ac);
  opt_dec_ = std::make_unique<Adam>(models_.decoder->params(), ac);
  opt_dc_ = std::make_unique<Adam>(models_.code_discriminator->params(), ac);
  if (models_.code_generator) opt_cg_ = std::make_unique<Adam>(models_.code_generator->params(), ac);
  if (models_.image_discriminator) {
    opt_di_ = std::make_unique<Adam>(models_.image_discriminator->d_params(), ac);
    if (models_.image_discriminator->q_enabled)
      opt_q_ = std::make_unique<Adam>(models_.image_discriminator->q_params(), ac);
  }
}

Tensor Trainer::sample_noise(int n, int dim) {
  Tensor z({n, dim});
  for (auto& v : z.data) v = noise_rng_.normalf();
  return z;
}

std::vector<int> Trainer::sample_categories(int n) {
  std::vector<int> s(static_cast<size_t>(n));
  for (auto& v : s) v = static_cast<int>(noise_rng_.uniform_int(cfg_.num_classes));
  return s;
}

void Trainer::aae_phase_step(const Tensor& images, const std::vector<int>& labels, StepMetrics& m) {
  const int N = images.dim(0);
  check_shape(cfg_.mode != Mode::supervised || static_cast<int>(labels.size()) == N,
              "supervised mode needs a label per image");
  Var x = make_leaf(images, false);

  // Prior-side codes; the code generator is fixed in this phase.
  Var zc;
  Tensor s_prior_onehot;
  if (cfg_.learned_prior) {
    Var z = make_leaf(sample_noise(N, cfg_.noise_dim), false);
    if (cfg_.conditional()) {
      s_prior_onehot = one_hot(sample_categories(N), cfg_.num_classes);
      zc = detach(models_.code_generator->forward(z, make_leaf(s_prior_onehot, false)));
    } else {
      zc = detach(models_.code_generator->forward(z));
    }
  } else {
    zc = make_leaf(sample_noise(N, cfg_.code_dim), false);  // Gaussian-prior baseline
  }

  CodeDiscriminator& dc = *models_.code_discriminator;
  Var d_prior, d_enc;
  Var e = models_.encoder->forward(x);
  if (cfg_.mode == Mode::supervised) {
    d_prior = dc.forward(zc, make_leaf(s_prior_onehot, false));
    d_enc = dc.forward(e, make_leaf(one_hot(labels, cfg_.num_classes), false));
  } else {
    d_prior = dc.forward(zc);
    d_enc = dc.forward(e);
  }
  Var l_code = code_adversarial_loss(d_prior, d_enc);

  Var xr = models_.decoder->forward(e);
  Var l_rec;
  if (cfg_.perceptual_loss) {
    // Feature extraction with running statistics, so both feature passes
    // see the same normalization.
    ImageDiscriminator& di = *models_.image_discriminator;
    bool was = di.training();
    di.set_train(false);
    Var f_recon = di.forward(xr).features;
    Var f_orig = di.forward(x).features;
    di.set_train(was);
    l_rec = perceptual_loss(f_recon, f_orig);
  } else {
    l_rec = pixel_mse_loss(xr, x);
  }

  for (Network* net : models_.networks()) zero_grad(net->params());
  backward(add(l_code, l_rec));

  // All gradients were taken at the same point; apply the listed updates.
  opt_dc_->step(-1.0f);                // D_C ascends L^C_GAN
  opt_enc_->step(1.0f);                // encoder descends L^C_GAN + L_rec
  opt_dec_->step(cfg_.lambda_rec);     // decoder descends lambda * L_rec

  m.l_code_gan = l_code->value.data[0];
  m.l_rec = l_rec->value.data[0];
  require_finite(m.l_code_gan, "code adversarial loss");
  require_finite(m.l_rec, "reconstruction loss");
}

void Trainer::prior_phase_step(const Tensor& images, StepMetrics& m) {
  check_shape(static_cast<bool>(cfg_.learned_prior), "prior phase requires a learned prior");
  const int N = images.dim(0);
  Var x = make_leaf(images, false);

  Var z = make_leaf(sample_noise(N, cfg_.noise_dim), false);
  Var zc;
  Tensor s_onehot;
  if (cfg_.conditional()) {
    s_onehot = one_hot(sample_categories(N), cfg_.num_classes);
    zc = models_.code_generator->forward(z, make_leaf(s_onehot, false));
  } else {
    zc = models_.code_generator->forward(z);
  }
  Var x_fake = models_.decoder->forward(zc);

  ImageDiscriminator& di = *models_.image_discriminator;
  Var d_real = di.forward(x).d;
  DiscriminatorOutput fake_out = di.forward(x_fake);
  Var l_img = image_adversarial_loss(d_real, fake_out.d);
  Var l_mi;
  if (cfg_.conditional()) l_mi = mi_category_loss(fake_out.q, s_onehot);

  for (Network* net : models_.networks()) zero_grad(net->params());
  backward(l_img);
  std::vector<Tensor> di_grads = opt_di_->grad_snapshot();

  if (cfg_.nonsaturating_generator) {
    // Generator side swaps log(1 - D) for -log D on fakes.
    for (Network* net : models_.networks()) zero_grad(net->params());
    backward(scale(mean_log(fake_out.d), -1.0f));
  }
  if (cfg_.conditional()) backward(l_mi);

  opt_di_->step_with(di_grads, -1.0f);                 // D_I ascends L^I_GAN
  if (cfg_.decoder_both_phases) opt_dec_->step(1.0f);  // decoder descends L^I_GAN (+ L_I)
  opt_cg_->step(1.0f);                                 // code generator likewise
  if (cfg_.conditional()) opt_q_->step(1.0f);          // Q descends L_I

  m.has_image_gan = true;
  m.l_image_gan = l_img->value.data[0];
  require_finite(m.l_image_gan, "image adversarial loss");
  if (cfg_.conditional()) {
    m.has_mi = true;
    m.l_mi = l_mi->value.data[0];
    require_finite(m.l_mi, "category loss");
  }
}

StepMetrics Trainer::train_step(const Tensor& images, const std::vector<int>& labels) {
  StepMetrics m;
  m.step = static_cast<int64_t>(++step_);
  aae_phase_step(images, labels, m);
  if (cfg_.learned_prior) prior_phase_step(images, m);
  return m;
}

CheckpointData Trainer::snapshot() const {
  CheckpointData c;
  c.config_text = cfg_.to_text();
  c.step = step_;
  c.seed = cfg_.seed;
  c.tensors = collect_tensors(models_);
  auto dump_opt = [&c](const char* name, const Adam* opt) {
    if (!opt) return;
    const auto& m = const_cast<Adam*>(opt)->moments_m();
    const auto& v = const_cast<Adam*>(opt)->moments_v();
    for (size_t i = 0; i < m.size(); ++i) {
      c.opt_state.emplace_back(std::string(name) + ".m." + std::to_string(i), m[i]);
      c.opt_state.emplace_back(std::string(name) + ".v." + std::to_string(i), v[i]);
    }
    c.opt_state.emplace_back(std::string(name) + ".t",
                             Tensor::scalar(static_cast<float>(opt->t())));
  };
  dump_opt("adam.encoder", opt_enc_.get());
  dump_opt("adam.decoder", opt_dec_.get());
  dump_opt("adam.code_generator", opt_cg_.get());
  dump_opt("adam.code_discriminator", opt_dc_.get());
  dump_opt("adam.image_discriminator", opt_di_.get());
  dump_opt("adam.q_head", opt_q_.get());
  return c;
}

DatasetHandle load_dataset(const TrainingConfig& cfg) {
  fs::path root(cfg.data_root.empty() ? default_data_root() : cfg.data_root);
  auto subdir = [&root](const char* name) {
    fs::path sub = root / name;
    return fs::is_directory(sub) ? sub.string() : root.string();
  };
  DatasetHandle d;
  if (cfg.dataset == "synthetic") {
    int classes = cfg.conditional() ? cfg.num_classes : cfg.synthetic_classes;
    d = synthetic_dataset(cfg.synthetic_n, classes, cfg.seed);
  } else if (cfg.dataset == "mnist") {
    d = load_mnist(subdir("mnist"));
  } else if (cfg.dataset == "cifar10") {
    d = load_cifar10(subdir("cifar10"));
  } else if (cfg.dataset.rfind("folder:", 0) == 0) {
    d = load_image_folder(cfg.dataset.substr(7), cfg.channels);
  } else {
    throw ConfigError("unknown dataset: " + cfg.dataset);
  }
  if (cfg.dataset_limit > 0 && d.size() > cfg.dataset_limit) {
    std::vector<int> idx(static_cast<size_t>(cfg.dataset_limit));
    for (int i = 0; i < cfg.dataset_limit; ++i) idx[static_cast<size_t>(i)] = i;
    DatasetHandle cut;
    cut.name = d.name;
    cut.num_classes = d.num_classes;
    cut.images = gather_images(d, idx);
    if (d.labeled()) cut.labels = gather_labels(d, idx);
    d = std::move(cut);
  }
  if (d.images.dim(1) != cfg.channels)
    throw ConfigError("dataset has " + std::to_string(d.images.dim(1)) +
                      " channels but config says " + std::to_string(cfg.channels));
  if (cfg.mode == Mode::supervised && !d.labeled())
    throw ConfigError("supervised mode needs a labeled dataset");
  if (cfg.conditional() && d.labeled() && d.num_classes != cfg.num_classes &&
      cfg.mode == Mode::supervised)
    throw ConfigError("dataset has " + std::to_string(d.num_classes) +
                      " classes but config says " + std::to_string(cfg.num_classes));
  return d;
}

namespace {

std::string metrics_header(const TrainingConfig& cfg) {
  std::string h = "step,l_rec,l_code_gan";
  if (cfg.learned_prior) h += ",l_image_gan";
  if (cfg.learned_prior && cfg.conditional()) h += ",l_mi";
  return h;
}

std::string metrics_row(const TrainingConfig& cfg, const StepMetrics& m) {
  char buf[160];
  std::string row = std::to_string(m.step);
  auto app = [&](float v) {
    snprintf(buf, sizeof(buf), ",%.6g", static_cast<double>(v));
    row += buf;
  };
  app(m.l_rec);
  app(m.l_code_gan);
  if (cfg.learned_prior) app(m.l_image_gan);
  if (cfg.learned_prior && cfg.conditional()) app(m.l_mi);
  return row;
}

}  // namespace

TrainingResult run_training(const TrainingConfig& cfg, const DatasetHandle& dataset,
                            const StepCallback& on_step) {
  cfg.validate();
  if (dataset.size() < cfg.batch_size) throw DataError("dataset smaller than one batch");

  fs::create_directories(cfg.out_dir);
  std::ofstream log(fs::path(cfg.out_dir) / "metrics.csv");
  if (!log) throw DataError("cannot open metrics log under " + cfg.out_dir);
  log << metrics_header(cfg) << "\n";

  Trainer trainer(cfg);
  TrainingResult result;
  std::string last_ckpt;
  try {
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      auto batches = epoch_batches(dataset.size(), cfg.batch_size, cfg.seed, epoch);
      for (const auto& idx : batches) {
        Tensor images = gather_images(dataset, idx);
        std::vector<int> labels = dataset.labeled() ? gather_labels(dataset, idx) : std::vector<int>{};
        StepMetrics m = trainer.train_step(images, labels);
        log << metrics_row(cfg, m) << "\n";
        result.metrics.push_back(m);
        if (on_step) on_step(m);
      }
      log.flush();
      CheckpointData ckpt = trainer.snapshot();
      last_ckpt = (fs::path(cfg.out_dir) / ("ckpt_epoch_" + std::to_string(epoch + 1))).string();
      write_checkpoint_file(last_ckpt, ckpt);
    }
  } catch (const NumericError&) {
    // Diagnostic dump; the last epoch checkpoint stays on disk.
    log.flush();
    write_checkpoint_file((fs::path(cfg.out_dir) / "ckpt_diagnostic").string(), trainer.snapshot());
    throw;
  }
  result.final_checkpoint_path = last_ckpt;
  return result;
}

}  // namespace pf
