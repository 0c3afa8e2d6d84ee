#include "priorforge/sampling.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "priorforge/data.hpp"
#include "priorforge/image_io.hpp"

namespace pf {

namespace {

Tensor gaussian(int n, int dim, Rng& rng) {
  Tensor z({n, dim});
  for (auto& v : z.data) v = rng.normalf();
  return z;
}

}  // namespace

Tensor sample_prior(const ModelSet& models, const TrainingConfig& cfg, int n, Rng& rng,
                    std::optional<int> label, std::vector<int>* labels_out) {
  if (n < 1) throw ConfigError("sample count must be >= 1");
  if (label && !cfg.conditional())
    throw ConfigError("a class label makes no sense in unconditional mode");
  if (label && (*label < 0 || *label >= cfg.num_classes))
    throw ConfigError("label " + std::to_string(*label) + " out of range for " +
                      std::to_string(cfg.num_classes) + " classes");

  std::vector<int> labels;
  if (cfg.conditional()) {
    labels.resize(static_cast<size_t>(n));
    for (auto& s : labels)
      s = label ? *label : static_cast<int>(rng.uniform_int(cfg.num_classes));
  }
  if (labels_out) *labels_out = labels;

  if (!cfg.learned_prior) return gaussian(n, cfg.code_dim, rng);

  CodeGenerator& cg = *models.code_generator;
  bool was = cg.training();
  cg.set_train(false);
  Var z = make_leaf(gaussian(n, cfg.noise_dim, rng), false);
  Var out = cfg.conditional()
                ? cg.forward(z, make_leaf(one_hot(labels, cfg.num_classes), false))
                : cg.forward(z);
  cg.set_train(was);
  return out->value;
}

Tensor generate_images(Decoder& decoder, const Tensor& codes) {
  check_shape(codes.rank() == 2 && codes.dim(1) == decoder.code_dim,
              "codes must be N x " + std::to_string(decoder.code_dim));
  bool was = decoder.training();
  decoder.set_train(false);
  Tensor images = decoder.forward(make_leaf(codes, false))->value;
  decoder.set_train(was);
  return images;
}

Tensor encode_images(Encoder& encoder, const Tensor& images, int batch) {
  check_shape(images.rank() == 4 && images.dim(1) == encoder.channels,
              "images must be N x " + std::to_string(encoder.channels) + " x 32 x 32");
  const int N = images.dim(0);
  bool was = encoder.training();
  encoder.set_train(false);
  Tensor codes({N, encoder.code_dim});
  const int64_t px = static_cast<int64_t>(images.dim(1)) * images.dim(2) * images.dim(3);
  for (int start = 0; start < N; start += batch) {
    int n = std::min(batch, N - start);
    Tensor chunk({n, images.dim(1), images.dim(2), images.dim(3)});
    std::copy_n(images.data.begin() + start * px, n * px, chunk.data.begin());
    Tensor out = encoder.forward(make_leaf(std::move(chunk), false))->value;
    std::copy_n(out.data.begin(), out.data.size(),
                codes.data.begin() + static_cast<int64_t>(start) * encoder.code_dim);
  }
  encoder.set_train(was);
  return codes;
}

Tensor label_noise_grid(const ModelSet& models, const TrainingConfig& cfg, int rows, Rng& rng) {
  if (!cfg.conditional()) throw ConfigError("label grids need a conditional checkpoint");
  if (rows < 1) throw ConfigError("grid needs at least one row");
  const int K = cfg.num_classes;

  CodeGenerator& cg = *models.code_generator;
  Decoder& dec = *models.decoder;
  bool cg_was = cg.training(), dec_was = dec.training();
  cg.set_train(false);
  dec.set_train(false);

  // One noise draw per row, repeated across the K columns of that row.
  Tensor z_rows = gaussian(rows, cfg.noise_dim, rng);
  Tensor z({rows * K, cfg.noise_dim});
  std::vector<int> labels(static_cast<size_t>(rows) * K);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < K; ++c) {
      std::copy_n(z_rows.data.begin() + static_cast<int64_t>(r) * cfg.noise_dim, cfg.noise_dim,
                  z.data.begin() + static_cast<int64_t>(r * K + c) * cfg.noise_dim);
      labels[static_cast<size_t>(r) * K + c] = c;
    }

  Var codes = cg.forward(make_leaf(std::move(z), false),
                         make_leaf(one_hot(labels, K), false));
  Tensor images = dec.forward(codes)->value;
  cg.set_train(cg_was);
  dec.set_train(dec_was);
  return tile_grid(images, rows, K);
}

void write_latent_dump(const std::string& path, const Tensor& codes,
                       const std::vector<int>& labels) {
  check_shape(codes.rank() == 2, "latent dump expects N x d codes");
  const int N = codes.dim(0), d = codes.dim(1);
  check_shape(labels.empty() || static_cast<int>(labels.size()) == N,
              "label count must match code count");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write latent dump: " + path);
  for (int j = 0; j < d; ++j) out << "dim_" << j << ",";
  out << "label\n";
  char buf[48];
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < d; ++j) {
      snprintf(buf, sizeof(buf), "%.9g,",
               static_cast<double>(codes.at(static_cast<int64_t>(i) * d + j)));
      out << buf;
    }
    out << (labels.empty() ? -1 : labels[static_cast<size_t>(i)]) << "\n";
  }
  if (!out) throw DataError("write failure: " + path);
}

LatentDump read_latent_dump(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open latent dump: " + path);
  std::string header;
  if (!std::getline(in, header)) throw DataError("empty latent dump: " + path);
  int d = 0;
  {
    std::istringstream hs(header);
    std::string col;
    while (std::getline(hs, col, ',')) {
      if (col.rfind("dim_", 0) == 0) ++d;
      else if (col != "label") throw DataError("unexpected dump column: " + col);
    }
  }
  if (d == 0) throw DataError("latent dump has no code columns");

  FloatVec values;
  std::vector<int> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    for (int j = 0; j < d; ++j) {
      if (!std::getline(ls, cell, ',')) throw DataError("short row in latent dump");
      values.push_back(std::strtof(cell.c_str(), nullptr));
    }
    if (!std::getline(ls, cell)) throw DataError("missing label column in latent dump");
    labels.push_back(std::atoi(cell.c_str()));
  }
  LatentDump dump;
  dump.codes = Tensor({static_cast<int>(labels.size()), d});
  dump.codes.data = std::move(values);
  bool unlabeled = true;
  for (int s : labels) unlabeled = unlabeled && s == -1;
  if (!unlabeled) dump.labels = std::move(labels);
  return dump;
}

}  // namespace pf
