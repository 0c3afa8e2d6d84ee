#include "priorforge/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace pf {

ModelSet build_models(const TrainingConfig& cfg, Rng& rng) {
  ModelSet m;
  m.encoder = build_encoder(cfg.channels, cfg.code_dim, rng);
  m.decoder = build_decoder(cfg.channels, cfg.code_dim, rng);
  int cond = cfg.conditional() ? cfg.num_classes : 0;
  if (cfg.learned_prior) m.code_generator = build_code_generator(cfg.noise_dim, cond, cfg.code_dim, rng);
  if (cfg.learned_prior || cfg.perceptual_loss)
    m.image_discriminator = build_image_discriminator(
        cfg.channels, cfg.conditional() ? cfg.num_classes : 2, cfg.conditional(), rng);
  // The code discriminator sees the label only in supervised mode.
  m.code_discriminator =
      build_code_discriminator(cfg.code_dim, cfg.mode == Mode::supervised ? cfg.num_classes : 0, rng);
  return m;
}

namespace {

constexpr char kMagic[4] = {'P', 'F', 'C', 'K'};

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));  // little-endian host
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError("truncated checkpoint");
  return v;
}

void put_string(std::ostream& out, const std::string& s) {
  put<uint32_t>(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
  uint32_t n = get<uint32_t>(in);
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw DataError("truncated checkpoint string");
  return s;
}

void put_tensors(std::ostream& out, const std::vector<std::pair<std::string, Tensor>>& ts) {
  put<uint32_t>(out, static_cast<uint32_t>(ts.size()));
  for (const auto& [name, t] : ts) {
    put_string(out, name);
    put<uint32_t>(out, static_cast<uint32_t>(t.shape.size()));
    for (int d : t.shape) put<int32_t>(out, d);
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  }
}

std::vector<std::pair<std::string, Tensor>> get_tensors(std::istream& in) {
  uint32_t n = get<uint32_t>(in);
  std::vector<std::pair<std::string, Tensor>> ts;
  ts.reserve(n);
  for (uint32_t i = 0; i < n; ++i) {
    std::string name = get_string(in);
    uint32_t rank = get<uint32_t>(in);
    std::vector<int> shape(rank);
    for (auto& d : shape) d = get<int32_t>(in);
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    if (!in) throw DataError("truncated checkpoint tensor: " + name);
    ts.emplace_back(std::move(name), std::move(t));
  }
  return ts;
}

}  // namespace

void write_checkpoint_file(const std::string& path, const CheckpointData& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out.write(kMagic, 4);
  put<uint32_t>(out, ckpt.version);
  put<uint64_t>(out, ckpt.step);
  put<uint64_t>(out, ckpt.seed);
  put_string(out, ckpt.config_text);
  put_tensors(out, ckpt.tensors);
  put_tensors(out, ckpt.opt_state);
  if (!out) throw DataError("write failure: " + path);
}

CheckpointData read_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("not a checkpoint file: " + path);
  CheckpointData c;
  c.version = get<uint32_t>(in);
  if (c.version != 1) throw DataError("unsupported checkpoint version " + std::to_string(c.version));
  c.step = get<uint64_t>(in);
  c.seed = get<uint64_t>(in);
  c.config_text = get_string(in);
  c.tensors = get_tensors(in);
  c.opt_state = get_tensors(in);
  return c;
}

std::vector<std::pair<std::string, Tensor>> collect_tensors(const ModelSet& models) {
  std::vector<std::pair<std::string, Tensor>> out;
  for (const Network* net : models.networks()) {
    for (const auto& [name, var] : net->named_params())
      out.emplace_back(net->name() + "." + name, var->value);
    for (const auto& [name, buf] : net->named_buffers())
      out.emplace_back(net->name() + "." + name, *buf);
  }
  return out;
}

void restore_tensors(ModelSet& models, const std::vector<std::pair<std::string, Tensor>>& tensors) {
  size_t i = 0;
  for (Network* net : models.networks()) {
    auto take = [&](const std::string& full, Tensor& dst) {
      if (i >= tensors.size() || tensors[i].first != full)
        throw DataError("checkpoint tensor mismatch: expected " + full);
      if (!(tensors[i].second.shape == dst.shape))
        throw DataError("checkpoint shape mismatch for " + full);
      dst = tensors[i].second;
      ++i;
    };
    for (const auto& [name, var] : net->named_params()) take(net->name() + "." + name, var->value);
    for (const auto& [name, buf] : net->named_buffers()) take(net->name() + "." + name, *buf);
  }
  if (i != tensors.size()) throw DataError("checkpoint holds unexpected extra tensors");
}

LoadedModel load_model(const std::string& path) {
  CheckpointData raw = read_checkpoint_file(path);
  TrainingConfig cfg = parse_config_text(raw.config_text);
  cfg.validate();
  Rng rng(raw.seed);
  LoadedModel lm{cfg, build_models(cfg, rng), std::move(raw)};
  restore_tensors(lm.models, lm.raw.tensors);
  lm.models.set_train(false);
  return lm;
}

}  // namespace pf
