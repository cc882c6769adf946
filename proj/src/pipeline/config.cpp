#include "ogb/pipeline/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ogb/errors.hpp"

namespace ogb::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) {
      if (key == a) { ok = true; break; }
    }
    if (!ok) {
      raise(ErrorKind::ConfigError,
            where + ": unknown field '" + key + "'");
    }
  }
}

template <typename T>
void read_field(const json& obj, const char* key, T& into,
                const std::string& where) {
  if (auto it = obj.find(key); it != obj.end()) {
    try {
      into = it->get<T>();
    } catch (const json::exception&) {
      raise(ErrorKind::ConfigError,
            where + ": field '" + std::string(key) + "' has the wrong type");
    }
  }
}

std::string resolve_path(const std::string& path, const fs::path& base_dir) {
  if (path.empty()) return path;
  fs::path p(path);
  if (p.is_absolute()) return p.string();
  return (base_dir / p).lexically_normal().string();
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    raise(ErrorKind::FileMissing, "config file '" + path + "' does not exist");
  }
  std::ostringstream buf;
  buf << in.rdbuf();

  json doc;
  try {
    doc = json::parse(buf.str());
  } catch (const json::exception& e) {
    raise(ErrorKind::ConfigError, std::string("config parse: ") + e.what());
  }
  if (!doc.is_object()) {
    raise(ErrorKind::ConfigError, "config must be a JSON object");
  }
  check_keys(doc, "config",
             {"run_id", "lexicon", "out_dir", "corpus", "model", "training",
              "policies", "evaluation", "sweep"});

  const fs::path base_dir = fs::absolute(fs::path(path)).parent_path();

  ExperimentConfig cfg;
  read_field(doc, "run_id", cfg.run_id, "config");
  read_field(doc, "lexicon", cfg.lexicon_path, "config");
  if (cfg.lexicon_path.empty()) {
    raise(ErrorKind::ConfigError, "config: 'lexicon' is required");
  }
  cfg.lexicon_path = resolve_path(cfg.lexicon_path, base_dir);
  std::string out_dir;
  read_field(doc, "out_dir", out_dir, "config");
  cfg.out_dir = resolve_path(out_dir, base_dir);

  if (auto it = doc.find("corpus"); it != doc.end()) {
    check_keys(*it, "config.corpus", {"split_fraction", "seed"});
    read_field(*it, "split_fraction", cfg.split_fraction, "config.corpus");
    read_field(*it, "seed", cfg.split_seed, "config.corpus");
  }

  if (auto it = doc.find("model"); it != doc.end()) {
    check_keys(*it, "config.model",
               {"id", "name", "checkpoint", "init_seed", "arch"});
    read_field(*it, "id", cfg.model.id, "config.model");
    read_field(*it, "name", cfg.model.name, "config.model");
    read_field(*it, "init_seed", cfg.model.init_seed, "config.model");
    if (auto cp = it->find("checkpoint"); cp != it->end() && !cp->is_null()) {
      cfg.model.checkpoint =
          resolve_path(cp->get<std::string>(), base_dir);
    }
    if (auto arch = it->find("arch"); arch != it->end()) {
      check_keys(*arch, "config.model.arch",
                 {"hidden_size", "num_layers", "num_heads", "intermediate_size",
                  "max_positions", "type_vocab_size", "layer_norm_eps"});
      read_field(*arch, "hidden_size", cfg.model.arch.hidden_size, "config.model.arch");
      read_field(*arch, "num_layers", cfg.model.arch.num_layers, "config.model.arch");
      read_field(*arch, "num_heads", cfg.model.arch.num_heads, "config.model.arch");
      read_field(*arch, "intermediate_size", cfg.model.arch.intermediate_size,
                 "config.model.arch");
      read_field(*arch, "max_positions", cfg.model.arch.max_positions,
                 "config.model.arch");
      read_field(*arch, "type_vocab_size", cfg.model.arch.type_vocab_size,
                 "config.model.arch");
      read_field(*arch, "layer_norm_eps", cfg.model.arch.layer_norm_eps,
                 "config.model.arch");
    }
  }

  if (auto it = doc.find("training"); it != doc.end()) {
    check_keys(*it, "config.training",
               {"epochs", "learning_rate", "batch_size", "seed",
                "mask_probability", "adam_beta1", "adam_beta2", "adam_epsilon"});
    read_field(*it, "epochs", cfg.training.epochs, "config.training");
    read_field(*it, "learning_rate", cfg.training.learning_rate, "config.training");
    read_field(*it, "batch_size", cfg.training.batch_size, "config.training");
    read_field(*it, "seed", cfg.training.seed, "config.training");
    read_field(*it, "mask_probability", cfg.training.mask_probability,
               "config.training");
    read_field(*it, "adam_beta1", cfg.training.adam_beta1, "config.training");
    read_field(*it, "adam_beta2", cfg.training.adam_beta2, "config.training");
    read_field(*it, "adam_epsilon", cfg.training.adam_epsilon, "config.training");
  }

  read_field(doc, "policies", cfg.policies, "config");

  if (auto it = doc.find("evaluation"); it != doc.end()) {
    check_keys(*it, "config.evaluation",
               {"split", "batch_size", "error_policy", "parallelism"});
    read_field(*it, "split", cfg.evaluation.split, "config.evaluation");
    read_field(*it, "batch_size", cfg.evaluation.batch_size, "config.evaluation");
    read_field(*it, "error_policy", cfg.evaluation.error_policy,
               "config.evaluation");
    read_field(*it, "parallelism", cfg.evaluation.parallelism,
               "config.evaluation");
    if (cfg.evaluation.split != "full" && cfg.evaluation.split != "test") {
      raise(ErrorKind::ConfigError,
            "config.evaluation.split must be 'full' or 'test'");
    }
    if (cfg.evaluation.error_policy != "fail" &&
        cfg.evaluation.error_policy != "skip") {
      raise(ErrorKind::ConfigError,
            "config.evaluation.error_policy must be 'fail' or 'skip'");
    }
  }

  if (auto it = doc.find("sweep"); it != doc.end()) {
    check_keys(*it, "config.sweep", {"learning_rates", "epochs"});
    read_field(*it, "learning_rates", cfg.sweep_learning_rates, "config.sweep");
    read_field(*it, "epochs", cfg.sweep_epochs, "config.sweep");
  }

  return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json doc;
  doc["run_id"] = cfg.run_id;
  doc["lexicon"] = cfg.lexicon_path;
  doc["corpus"] = {{"split_fraction", cfg.split_fraction},
                   {"seed", cfg.split_seed}};
  doc["model"] = {{"id", cfg.model.id},
                  {"name", cfg.model.name},
                  {"init_seed", cfg.model.init_seed},
                  {"arch",
                   {{"hidden_size", cfg.model.arch.hidden_size},
                    {"num_layers", cfg.model.arch.num_layers},
                    {"num_heads", cfg.model.arch.num_heads},
                    {"intermediate_size", cfg.model.arch.intermediate_size},
                    {"max_positions", cfg.model.arch.max_positions},
                    {"type_vocab_size", cfg.model.arch.type_vocab_size},
                    {"layer_norm_eps", cfg.model.arch.layer_norm_eps}}}};
  if (cfg.model.checkpoint) doc["model"]["checkpoint"] = *cfg.model.checkpoint;
  doc["training"] = {{"epochs", cfg.training.epochs},
                     {"learning_rate", cfg.training.learning_rate},
                     {"batch_size", cfg.training.batch_size},
                     {"seed", cfg.training.seed},
                     {"mask_probability", cfg.training.mask_probability}};
  doc["policies"] = cfg.policies;
  doc["evaluation"] = {{"split", cfg.evaluation.split},
                       {"batch_size", cfg.evaluation.batch_size},
                       {"error_policy", cfg.evaluation.error_policy},
                       {"parallelism", cfg.evaluation.parallelism}};
  return doc.dump();
}

scorer::ScoreOptions score_options_from(const EvaluationSection& eval) {
  scorer::ScoreOptions opts;
  opts.batch_size = eval.batch_size;
  opts.on_error = eval.error_policy == "skip" ? scorer::ErrorPolicy::SkipAndRecord
                                              : scorer::ErrorPolicy::FailFast;
  opts.parallelism = eval.parallelism;
  return opts;
}

}  // namespace ogb::pipeline
