#pragma once

// Model checkpoints are JSON documents:
//
//   {
//     "format": "semvec-checkpoint", "version": 1,
//     "model": "eqnet" | "treenn1" | "treenn2" | "gru" | "tfidf",
//     "domain": {"kind": "bool" | "poly", "ops": [...], "vars": "a,b,c"},
//     "model_config": {"dim": 64, ...},
//     "train_config": {"key": "value", ...},
//     "classes": ["B:3:...", ...],          // prototype row j -> class id
//     "params": [{"name": ..., "shape": [r, c], "values": [...]}, ...],
//     "tfidf": {"vocabulary": [...], "idf": [...], "num_docs": N}
//   }
//
// Values are row-major. "params" is empty for tf-idf and "tfidf" is absent
// for trained models.

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "semvec/models.hpp"

namespace semvec {

struct Checkpoint {
  models::ModelConfig model;
  std::vector<std::string> classes;
  ndiff::ParamStore<float> params;
  std::optional<models::TfIdfModel> tfidf;
  std::vector<std::pair<std::string, std::string>> train_config;

  // Rebuilds the trainable model; throws DataError for tf-idf checkpoints.
  models::Model<float> load_model() const;
};

Checkpoint make_checkpoint(const models::Model<float>& model,
                           std::vector<std::pair<std::string, std::string>> train_config = {});

std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace semvec
