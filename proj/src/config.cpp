#include "priorforge/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace pf {

std::string to_string(Mode m) {
  switch (m) {
    case Mode::unconditional: return "unconditional";
    case Mode::supervised: return "supervised";
    case Mode::unsupervised: return "unsupervised";
  }
  return "?";
}

Mode mode_from_string(const std::string& s) {
  if (s == "unconditional") return Mode::unconditional;
  if (s == "supervised") return Mode::supervised;
  if (s == "unsupervised") return Mode::unsupervised;
  throw ConfigError("unknown mode: " + s);
}

std::string default_data_root() {
  const char* env = std::getenv("PRIORFORGE_DATA");
  return env && *env ? env : ".";
}

namespace {

int parse_int(const std::string& k, const std::string& v) {
  try {
    size_t pos;
    int r = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (...) {
    throw ConfigError("bad integer for " + k + ": '" + v + "'");
  }
}

int64_t parse_i64(const std::string& k, const std::string& v) {
  try {
    size_t pos;
    long long r = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (...) {
    throw ConfigError("bad integer for " + k + ": '" + v + "'");
  }
}

float parse_float(const std::string& k, const std::string& v) {
  try {
    size_t pos;
    float r = std::stof(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (...) {
    throw ConfigError("bad number for " + k + ": '" + v + "'");
  }
}

bool parse_bool(const std::string& k, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("bad boolean for " + k + ": '" + v + "'");
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

void apply_override(TrainingConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "mode") cfg.mode = mode_from_string(value);
  else if (key == "dataset") cfg.dataset = value;
  else if (key == "data_root") cfg.data_root = value;
  else if (key == "out_dir") cfg.out_dir = value;
  else if (key == "channels") cfg.channels = parse_int(key, value);
  else if (key == "code_dim") cfg.code_dim = parse_int(key, value);
  else if (key == "noise_dim") cfg.noise_dim = parse_int(key, value);
  else if (key == "num_classes") cfg.num_classes = parse_int(key, value);
  else if (key == "lambda_rec") cfg.lambda_rec = parse_float(key, value);
  else if (key == "learning_rate") cfg.learning_rate = parse_float(key, value);
  else if (key == "beta1") cfg.beta1 = parse_float(key, value);
  else if (key == "beta2") cfg.beta2 = parse_float(key, value);
  else if (key == "batch_size") cfg.batch_size = parse_int(key, value);
  else if (key == "epochs") cfg.epochs = parse_int(key, value);
  else if (key == "seed") cfg.seed = static_cast<uint64_t>(parse_i64(key, value));
  else if (key == "learned_prior") cfg.learned_prior = parse_bool(key, value);
  else if (key == "perceptual_loss") cfg.perceptual_loss = parse_bool(key, value);
  else if (key == "decoder_both_phases") cfg.decoder_both_phases = parse_bool(key, value);
  else if (key == "nonsaturating_generator") cfg.nonsaturating_generator = parse_bool(key, value);
  else if (key == "dataset_limit") cfg.dataset_limit = parse_int(key, value);
  else if (key == "synthetic_n") cfg.synthetic_n = parse_i64(key, value);
  else if (key == "synthetic_classes") cfg.synthetic_classes = parse_int(key, value);
  else throw ConfigError("unknown config key: " + key);
}

TrainingConfig parse_config_text(const std::string& text) {
  TrainingConfig cfg;
  cfg.data_root = default_data_root();
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key=value, got '" + line + "'");
    apply_override(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

TrainingConfig parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

void TrainingConfig::validate() const {
  if (dataset.empty()) throw ConfigError("dataset is required");
  if (lambda_rec <= 0.0f) throw ConfigError("lambda_rec must be > 0");
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2 (batch-norm needs > 1 sample)");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (code_dim < 1 || noise_dim < 1) throw ConfigError("code_dim and noise_dim must be >= 1");
  if (channels != 1 && channels != 3) throw ConfigError("channels must be 1 or 3");
  if (conditional()) {
    if (num_classes < 2) throw ConfigError(to_string(mode) + " mode requires num_classes >= 2");
  } else if (num_classes != 0) {
    throw ConfigError("num_classes is meaningless in unconditional mode (set it to 0)");
  }
  if (learning_rate < 0.0f) throw ConfigError("learning_rate must be >= 0");
}

std::string TrainingConfig::to_text() const {
  std::ostringstream os;
  os << "mode = " << to_string(mode) << "\n";
  os << "dataset = " << dataset << "\n";
  os << "data_root = " << data_root << "\n";
  os << "out_dir = " << out_dir << "\n";
  os << "channels = " << channels << "\n";
  os << "code_dim = " << code_dim << "\n";
  os << "noise_dim = " << noise_dim << "\n";
  os << "num_classes = " << num_classes << "\n";
  os << "lambda_rec = " << lambda_rec << "\n";
  os << "learning_rate = " << learning_rate << "\n";
  os << "beta1 = " << beta1 << "\n";
  os << "beta2 = " << beta2 << "\n";
  os << "batch_size = " << batch_size << "\n";
  os << "epochs = " << epochs << "\n";
  os << "seed = " << seed << "\n";
  os << "learned_prior = " << (learned_prior ? "true" : "false") << "\n";
  os << "perceptual_loss = " << (perceptual_loss ? "true" : "false") << "\n";
  os << "decoder_both_phases = " << (decoder_both_phases ? "true" : "false") << "\n";
  os << "nonsaturating_generator = " << (nonsaturating_generator ? "true" : "false") << "\n";
  os << "dataset_limit = " << dataset_limit << "\n";
  os << "synthetic_n = " << synthetic_n << "\n";
  os << "synthetic_classes = " << synthetic_classes << "\n";
  return os.str();
}

}  // namespace pf
