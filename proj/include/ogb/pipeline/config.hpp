#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ogb/model/encoder.hpp"
#include "ogb/scorer.hpp"
#include "ogb/trainer.hpp"

namespace ogb::pipeline {

struct ModelSection {
  std::string id = "tiny";       // registry scheme, or full id for prebuilt
  std::string name = "tiny-enc"; // model_id written into new checkpoints
  std::optional<std::string> checkpoint;  // reuse instead of initializing
  model::EncoderArch arch;       // used when initializing a tiny model
  std::uint64_t init_seed = 7;
};

struct EvaluationSection {
  std::string split = "full";  // "full" or "test"
  std::size_t batch_size = 8;
  std::string error_policy = "fail";  // "fail" or "skip"
  unsigned parallelism = 1;
};

struct ExperimentConfig {
  std::string run_id = "run";
  std::string lexicon_path;
  std::string out_dir;  // default run directory; CLI --out overrides
  double split_fraction = 0.8;
  std::uint64_t split_seed = 0;
  ModelSection model;
  trainer::TrainConfig training;
  std::vector<std::string> policies;  // e.g. {"LN", "LN_PE", "LN_PE_WE"}
  EvaluationSection evaluation;
  // Hyperparameter grid (sweep command); empty lists fall back to the
  // single configured value.
  std::vector<double> sweep_learning_rates;
  std::vector<int> sweep_epochs;
};

// Loads the JSON experiment config; relative paths inside are resolved
// against the config file's directory. Throws ConfigError on unknown or
// ill-typed fields.
ExperimentConfig load_config(const std::string& path);

// Canonical serialization of the resolved config (used for run digests).
std::string config_to_json(const ExperimentConfig& cfg);

scorer::ScoreOptions score_options_from(const EvaluationSection& eval);

}  // namespace ogb::pipeline
