#include "semvec/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "semvec/error.hpp"

namespace semvec {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "semvec-checkpoint";
constexpr int kVersion = 1;

json model_config_json(const models::ModelConfig& c) {
  return json{
      {"dim", c.dim},
      {"hidden", c.hidden},
      {"ae_dim", c.ae_dim},
      {"embedding", c.embedding},
      {"normalize", c.normalize},
      {"residual", c.residual},
      {"activation", std::string(models::activation_name(c.hidden_activation))},
      {"dropout", c.dropout},
      {"noise", c.noise},
      {"noise_mode", c.noise_mode == ndiff::NoiseMode::ExactCount ? "exact" : "bernoulli"},
      {"init_std", c.init_std},
  };
}

template <typename T>
T required(const json& j, const char* key) {
  if (!j.contains(key)) throw DataError(std::string("checkpoint is missing '") + key + "'");
  return j.at(key).get<T>();
}

}  // namespace

models::Model<float> Checkpoint::load_model() const {
  if (model.kind == models::ModelKind::TfIdf) {
    throw DataError("tf-idf checkpoints hold no trainable model");
  }
  return models::Model<float>(model, classes, params);
}

Checkpoint make_checkpoint(const models::Model<float>& model,
                           std::vector<std::pair<std::string, std::string>> train_config) {
  Checkpoint c{model.config(), model.class_ids(), model.params(), std::nullopt,
               std::move(train_config)};
  return c;
}

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  const auto& m = ckpt.model;
  json ops = json::array();
  for (Op op : m.ops) ops.push_back(std::string(op_name(op)));
  json params = json::array();
  for (std::uint32_t i = 0; i < ckpt.params.size(); ++i) {
    const ndiff::ParamId id{i};
    const auto& t = ckpt.params.value(id);
    params.push_back(json{{"name", ckpt.params.name(id)},
                          {"shape", t.shape},
                          {"values", t.values}});
  }
  json train = json::object();
  for (const auto& [k, v] : ckpt.train_config) train[k] = v;
  json doc{
      {"format", kFormat},
      {"version", kVersion},
      {"model", std::string(models::model_kind_name(m.kind))},
      {"domain", json{{"kind", std::string(domain_name(m.domain))},
                      {"ops", ops},
                      {"vars", m.vars.to_string()}}},
      {"model_config", model_config_json(m)},
      {"train_config", train},
      {"classes", ckpt.classes},
      {"params", params},
  };
  if (ckpt.tfidf) {
    doc["tfidf"] = json{{"vocabulary", ckpt.tfidf->vocabulary()},
                        {"idf", ckpt.tfidf->idf()},
                        {"num_docs", ckpt.tfidf->num_docs()}};
  }
  return doc.dump();
}

Checkpoint checkpoint_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& err) {
    throw DataError(std::string("checkpoint is not valid JSON: ") + err.what());
  }
  try {
    if (required<std::string>(doc, "format") != kFormat) {
      throw DataError("not a semvec checkpoint");
    }
    if (required<int>(doc, "version") != kVersion) {
      throw DataError("unsupported checkpoint version");
    }
    Checkpoint c;
    const auto kind = models::model_kind_from_name(required<std::string>(doc, "model"));
    if (!kind) throw DataError("unknown model kind in checkpoint");
    c.model = models::ModelConfig::defaults(*kind);
    const json& dom = doc.at("domain");
    const auto domain = domain_from_name(required<std::string>(dom, "kind"));
    if (!domain) throw DataError("unknown domain in checkpoint");
    c.model.domain = *domain;
    for (const auto& name : dom.at("ops")) {
      const auto op = op_from_name(name.get<std::string>());
      if (!op) throw DataError("unknown operator in checkpoint");
      c.model.ops.push_back(*op);
    }
    c.model.vars = VarOrder::parse(required<std::string>(dom, "vars"));

    const json& mc = doc.at("model_config");
    c.model.dim = required<std::size_t>(mc, "dim");
    c.model.hidden = required<std::size_t>(mc, "hidden");
    c.model.ae_dim = required<std::size_t>(mc, "ae_dim");
    c.model.embedding = required<std::size_t>(mc, "embedding");
    c.model.normalize = required<bool>(mc, "normalize");
    c.model.residual = required<bool>(mc, "residual");
    const auto act = models::activation_from_name(required<std::string>(mc, "activation"));
    if (!act) throw DataError("unknown activation in checkpoint");
    c.model.hidden_activation = *act;
    c.model.dropout = required<double>(mc, "dropout");
    c.model.noise = required<double>(mc, "noise");
    c.model.noise_mode = required<std::string>(mc, "noise_mode") == "bernoulli"
                             ? ndiff::NoiseMode::Bernoulli
                             : ndiff::NoiseMode::ExactCount;
    c.model.init_std = required<double>(mc, "init_std");

    if (doc.contains("train_config")) {
      for (const auto& [k, v] : doc.at("train_config").items()) {
        c.train_config.emplace_back(k, v.get<std::string>());
      }
    }
    c.classes = required<std::vector<std::string>>(doc, "classes");
    for (const auto& p : doc.at("params")) {
      ndiff::Tensor<float> t(required<ndiff::Shape>(p, "shape"),
                             required<std::vector<float>>(p, "values"));
      c.params.add(required<std::string>(p, "name"), std::move(t));
    }
    if (doc.contains("tfidf")) {
      const json& tf = doc.at("tfidf");
      c.tfidf = models::TfIdfModel(required<std::vector<std::string>>(tf, "vocabulary"),
                                   required<std::vector<double>>(tf, "idf"),
                                   required<std::size_t>(tf, "num_docs"));
    }
    return c;
  } catch (const json::exception& err) {
    throw DataError(std::string("malformed checkpoint: ") + err.what());
  } catch (const std::invalid_argument& err) {
    throw DataError(std::string("malformed checkpoint: ") + err.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out << checkpoint_to_json(ckpt) << '\n';
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_json(buf.str());
}

}  // namespace semvec
