#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "semvec/error.hpp"
#include "semvec/training.hpp"

namespace semvec::training {

using models::ModelKind;

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw std::invalid_argument("config key '" + key + "': '" + text +
                                "' is not a number");
  }
  return v;
}

std::uint64_t parse_uint(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw std::invalid_argument("config key '" + key + "': '" + text +
                                "' is not a non-negative integer");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw std::invalid_argument("config key '" + key + "': '" + text +
                              "' is not a boolean");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

TrainConfig TrainConfig::defaults(ModelKind kind) {
  TrainConfig c;
  c.model = kind;
  switch (kind) {
    case ModelKind::EqNet:
      c.learning_rate = std::pow(10.0, -2.1);
      c.init_std = std::pow(10.0, -2.05);
      break;
    case ModelKind::TreeNN1:
      c.learning_rate = std::pow(10.0, -3.5);
      c.rho = 0.6;
      c.momentum = 0.01;
      c.batch_size = 650;
      c.clip = 3.6;
      c.init_std = std::pow(10.0, -1.28);
      c.dropout = 0.0;
      c.noise = 0.0;
      c.subexpae = false;
      c.curriculum_start = 2.8;
      c.curriculum_step = 2.4;
      c.margin = 2.41;
      break;
    case ModelKind::TreeNN2:
      c.learning_rate = std::pow(10.0, -3.5);
      c.rho = 0.9;
      c.momentum = 0.95;
      c.batch_size = 1000;
      c.clip = 5.0;
      c.init_std = 1e-4;
      c.dropout = 0.0;
      c.noise = 0.0;
      c.hidden = 16;
      c.subexpae = false;
      c.curriculum_start = 6.5;
      c.curriculum_step = 2.25;
      c.margin = 0.62;
      break;
    case ModelKind::Gru:
      c.learning_rate = std::pow(10.0, -2.31);
      c.rho = 0.9;
      c.momentum = 0.66;
      c.batch_size = 100;
      c.clip = 0.87;
      c.init_std = 0.1;
      c.dropout = 0.26;
      c.noise = 0.0;
      c.subexpae = false;
      c.curriculum = false;
      break;
    case ModelKind::TfIdf:
      c.subexpae = false;
      c.curriculum = false;
      c.epochs = 0;
      break;
  }
  return c;
}

void TrainConfig::validate() const {
  const auto positive = [](double v, const char* what) {
    if (!(v > 0.0)) throw std::invalid_argument(std::string(what) + " must be positive");
  };
  positive(learning_rate, "learning_rate");
  positive(clip, "clip");
  positive(init_std, "init_std");
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("rho must be in (0, 1)");
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw std::invalid_argument("momentum must be in [0, 1)");
  }
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (dim == 0 || ae_dim == 0 || hidden == 0 || embedding == 0) {
    throw std::invalid_argument("layer sizes must be positive");
  }
  if (!(noise >= 0.0 && noise < 1.0)) throw std::invalid_argument("noise must be in [0, 1)");
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw std::invalid_argument("dropout must be in [0, 1)");
  }
  if (!(nu >= 0.0)) throw std::invalid_argument("nu must be non-negative");
  if (!(curriculum_start >= 0.0 && curriculum_step >= 0.0)) {
    throw std::invalid_argument("curriculum parameters must be non-negative");
  }
  if (!(margin >= 0.0)) throw std::invalid_argument("margin must be non-negative");
  if (!(max_seconds >= 0.0)) throw std::invalid_argument("max_seconds must be non-negative");
  if (threads == 0) throw std::invalid_argument("threads must be positive");
}

models::ModelConfig TrainConfig::model_config(Domain domain, std::vector<Op> ops,
                                              VarOrder vars) const {
  models::ModelConfig m = models::ModelConfig::defaults(model);
  m.domain = domain;
  m.ops = std::move(ops);
  m.vars = std::move(vars);
  m.dim = dim;
  m.hidden = hidden;
  m.ae_dim = ae_dim;
  m.embedding = embedding;
  m.hidden_activation = activation;
  m.dropout = dropout;
  m.noise = noise;
  m.noise_mode = noise_mode;
  m.init_std = init_std;
  return m;
}

std::vector<std::pair<std::string, std::string>> TrainConfig::to_pairs() const {
  const auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  return {
      {"model", std::string(models::model_kind_name(model))},
      {"learning_rate", format_double(learning_rate)},
      {"rho", format_double(rho)},
      {"momentum", format_double(momentum)},
      {"batch_size", std::to_string(batch_size)},
      {"dim", std::to_string(dim)},
      {"ae_dim", std::to_string(ae_dim)},
      {"hidden", std::to_string(hidden)},
      {"embedding", std::to_string(embedding)},
      {"noise", format_double(noise)},
      {"noise_mode", noise_mode == ndiff::NoiseMode::ExactCount ? "exact" : "bernoulli"},
      {"clip", format_double(clip)},
      {"init_std", format_double(init_std)},
      {"dropout", format_double(dropout)},
      {"nu", format_double(nu)},
      {"subexpae", b(subexpae)},
      {"activation", std::string(models::activation_name(activation))},
      {"curriculum", b(curriculum)},
      {"curriculum_start", format_double(curriculum_start)},
      {"curriculum_step", format_double(curriculum_step)},
      {"margin", format_double(margin)},
      {"epochs", std::to_string(epochs)},
      {"seed", std::to_string(seed)},
      {"max_seconds", format_double(max_seconds)},
      {"threads", std::to_string(threads)},
  };
}

void TrainConfig::set(const std::string& key, const std::string& value) {
  if (key == "model") {
    const auto k = models::model_kind_from_name(value);
    if (!k) throw std::invalid_argument("unknown model '" + value + "'");
    model = *k;
  } else if (key == "learning_rate") {
    learning_rate = parse_double(key, value);
  } else if (key == "rho") {
    rho = parse_double(key, value);
  } else if (key == "momentum") {
    momentum = parse_double(key, value);
  } else if (key == "batch_size") {
    batch_size = parse_uint(key, value);
  } else if (key == "dim") {
    dim = parse_uint(key, value);
  } else if (key == "ae_dim") {
    ae_dim = parse_uint(key, value);
  } else if (key == "hidden") {
    hidden = parse_uint(key, value);
  } else if (key == "embedding") {
    embedding = parse_uint(key, value);
  } else if (key == "noise") {
    noise = parse_double(key, value);
  } else if (key == "noise_mode") {
    if (value == "exact") {
      noise_mode = ndiff::NoiseMode::ExactCount;
    } else if (value == "bernoulli") {
      noise_mode = ndiff::NoiseMode::Bernoulli;
    } else {
      throw std::invalid_argument("noise_mode must be exact or bernoulli");
    }
  } else if (key == "clip") {
    clip = parse_double(key, value);
  } else if (key == "init_std") {
    init_std = parse_double(key, value);
  } else if (key == "dropout") {
    dropout = parse_double(key, value);
  } else if (key == "nu") {
    nu = parse_double(key, value);
  } else if (key == "subexpae") {
    subexpae = parse_bool(key, value);
  } else if (key == "activation") {
    const auto a = models::activation_from_name(value);
    if (!a) throw std::invalid_argument("activation must be sigmoid or tanh");
    activation = *a;
  } else if (key == "curriculum") {
    curriculum = parse_bool(key, value);
  } else if (key == "curriculum_start") {
    curriculum_start = parse_double(key, value);
  } else if (key == "curriculum_step") {
    curriculum_step = parse_double(key, value);
  } else if (key == "margin") {
    margin = parse_double(key, value);
  } else if (key == "epochs") {
    epochs = parse_uint(key, value);
  } else if (key == "seed") {
    seed = parse_uint(key, value);
  } else if (key == "max_seconds") {
    max_seconds = parse_double(key, value);
  } else if (key == "threads") {
    threads = parse_uint(key, value);
  } else {
    throw std::invalid_argument("unknown config key '" + key + "'");
  }
}

TrainConfig load_config(const std::filesystem::path& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw DataError(path.string() + ":" + std::to_string(lineno) +
                      ": expected key = value");
    }
    try {
      base.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    } catch (const std::invalid_argument& err) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + err.what());
    }
  }
  return base;
}

std::string config_to_text(const TrainConfig& config) {
  std::ostringstream out;
  for (const auto& [k, v] : config.to_pairs()) out << k << " = " << v << "\n";
  return out.str();
}

}  // namespace semvec::training
