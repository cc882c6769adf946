#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ogb/metrics.hpp"
#include "ogb/pipeline/config.hpp"
#include "ogb/trainer.hpp"

namespace ogb::pipeline {

// Library entry points behind the CLI subcommands. Each prints a short
// human summary to `out` and returns the interesting numbers so tests can
// drive them directly.

struct BuildCorpusResult {
  std::size_t instances = 0;
  std::size_t train_professions = 0;
  std::size_t test_professions = 0;
  std::string corpus_path;
  std::string train_path;
  std::string test_path;
  std::string split_manifest_path;
};

BuildCorpusResult cmd_build_corpus(const std::string& lexicon_path,
                                   const std::string& out_dir,
                                   double split_fraction, std::uint64_t seed,
                                   std::ostream& out);

struct EvaluateOptions {
  scorer::ScoreOptions score;
  std::string cache_dir;  // empty: OGB_CACHE_DIR env var, else no cache
};

struct EvaluateResult {
  metrics::GroupSummary summary;
  std::string scored_path;
  std::size_t scored_count = 0;
  std::size_t failed_count = 0;
  bool cache_hit = false;
};

EvaluateResult cmd_evaluate(const std::string& model_id,
                            const std::string& corpus_path,
                            const std::string& out_path,
                            const EvaluateOptions& options, std::ostream& out);

struct DebiasResult {
  trainer::ParamReport param_report;
  trainer::TrainLog train_log;
  std::string checkpoint_path;
  std::string manifest_path;
};

DebiasResult cmd_debias(const std::string& model_id,
                        const std::string& train_corpus_path,
                        const std::string& policy_name,
                        const trainer::TrainConfig& config,
                        const std::string& out_dir, std::ostream& out);

struct ReportResult {
  metrics::BiasReport report;
  std::string table_path;
  std::string delimited_path;
  std::string structured_path;
};

ReportResult cmd_report(
    const std::string& baseline_scored_path,
    const std::vector<std::pair<std::string, std::string>>& method_scored_paths,
    const std::string& out_dir, std::ostream& out);

struct RunAllResult {
  std::string run_dir;
  std::string manifest_path;
  std::vector<std::string> stages_run;      // stages executed this call
  std::vector<std::string> stages_skipped;  // already done, resumed over
};

// build -> model init -> baseline eval -> {debias, eval} per policy ->
// report. Resumable: finished stages are skipped on rerun.
RunAllResult cmd_run_all(const ExperimentConfig& config,
                         const std::string& run_dir, std::ostream& out);

// Initializes a tiny encoder checkpoint with a vocabulary drawn from a
// corpus file. Returns the checkpoint path.
std::string cmd_init_model(const ModelSection& model,
                           const std::string& corpus_path,
                           const std::string& out_path, std::ostream& out);

trainer::ParamReport cmd_count_params(const std::string& model_id,
                                      const std::string& policy_name,
                                      std::ostream& out);

struct SweepCell {
  double learning_rate = 0.0;
  int epochs = 0;
  std::string policy;
  double mean_abs_group_ogb = 0.0;  // mean over gender groups of |mean OGB|
};

// Grid sweep over learning rates x epochs x policies; asserts nothing
// about which cell wins, just reports them.
std::vector<SweepCell> cmd_sweep(const ExperimentConfig& config,
                                 const std::string& run_dir,
                                 std::ostream& out);

}  // namespace ogb::pipeline
