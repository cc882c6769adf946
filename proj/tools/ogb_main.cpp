// Command-line front end for the OGB toolkit: corpus construction, masked-LM
// bias scoring, selective-unfreezing fine-tuning, and report generation.

#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "ogb/errors.hpp"
#include "ogb/pipeline/commands.hpp"
#include "ogb/pipeline/config.hpp"

namespace {

struct CliArgs {
  // shared
  std::string lexicon, model, corpus, policy, config, out;
  std::uint64_t seed = 0;
  double split_fraction = 0.8;
  // evaluate
  std::size_t batch_size = 8;
  std::string error_policy = "fail";
  unsigned parallelism = 1;
  std::string cache_dir;
  // debias / init-model
  std::string train_corpus;
  int epochs = 3;
  double learning_rate = 2e-5;
  int train_batch_size = 8;
  std::uint64_t train_seed = 0;
  double mask_probability = 0.15;
  std::string model_name = "tiny-enc";
  std::uint64_t init_seed = 7;
  int hidden_size = 16, num_layers = 2, num_heads = 2, intermediate_size = 64,
      max_positions = 32;
  // report
  std::vector<std::string> methods;
};

std::pair<std::string, std::string> parse_method(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
    ogb::raise(ogb::ErrorKind::UsageError,
               "--method expects NAME=SCORED_PATH, got '" + spec + "'");
  }
  return {spec.substr(0, eq), spec.substr(eq + 1)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Occupational gender bias evaluation and mitigation for masked language models"};
  app.require_subcommand(1);
  CliArgs args;

  auto* build = app.add_subcommand("build-corpus",
                                   "Expand a lexicon into the evaluation corpus and split it");
  build->alias("build_corpus");
  build->add_option("--lexicon", args.lexicon, "Lexicon JSON file")->required();
  build->add_option("--out", args.out, "Output directory")->required();
  build->add_option("--split-fraction", args.split_fraction,
                    "Fraction of professions assigned to train");
  build->add_option("--seed", args.seed, "Split shuffle seed");

  auto* evaluate = app.add_subcommand("evaluate", "Score a corpus with a model");
  evaluate->add_option("--model", args.model, "Model id (uniform[:V], tiny:<ckpt>)")->required();
  evaluate->add_option("--corpus", args.corpus, "Corpus JSONL file")->required();
  evaluate->add_option("--out", args.out, "Scored-results output path")->required();
  evaluate->add_option("--batch-size", args.batch_size, "Scoring batch size");
  evaluate->add_option("--error-policy", args.error_policy, "fail | skip");
  evaluate->add_option("--parallelism", args.parallelism, "Concurrent scoring chunks");
  evaluate->add_option("--cache-dir", args.cache_dir,
                       "Score cache directory (default: $OGB_CACHE_DIR)");

  auto* debias = app.add_subcommand("debias",
                                    "Fine-tune a model under a freeze policy");
  debias->add_option("--model", args.model, "Model id (tiny:<ckpt>)")->required();
  debias->add_option("--train-corpus", args.train_corpus, "Training corpus JSONL")->required();
  debias->add_option("--policy", args.policy, "LN | LN_PE | LN_PE_WE | FULL")->required();
  debias->add_option("--out", args.out, "Output directory")->required();
  debias->add_option("--config", args.config,
                     "Experiment config; its training section seeds the defaults");
  debias->add_option("--epochs", args.epochs, "Training epochs");
  debias->add_option("--learning-rate", args.learning_rate, "Adam learning rate");
  debias->add_option("--batch-size", args.train_batch_size, "Training batch size");
  debias->add_option("--seed", args.train_seed, "Masking/shuffle seed");
  debias->add_option("--mask-probability", args.mask_probability,
                     "Dynamic masking probability");

  auto* report = app.add_subcommand("report", "Render the bias comparison report");
  report->add_option("--baseline", args.corpus, "Baseline scored-results file")->required();
  report->add_option("--method", args.methods,
                     "NAME=SCORED_PATH (repeatable)");
  report->add_option("--out", args.out, "Output directory")->required();

  auto* run_all = app.add_subcommand("run-all", "Run the full experiment from a config");
  run_all->alias("run_all");
  run_all->add_option("--config", args.config, "Experiment config JSON")->required();
  run_all->add_option("--out", args.out, "Run directory (default: config out_dir)");

  auto* init_model = app.add_subcommand("init-model",
                                        "Initialize a tiny encoder checkpoint from a corpus");
  init_model->add_option("--corpus", args.corpus, "Corpus JSONL for the vocabulary")->required();
  init_model->add_option("--out", args.out, "Checkpoint path")->required();
  init_model->add_option("--name", args.model_name, "Model id stored in the checkpoint");
  init_model->add_option("--seed", args.init_seed, "Initialization seed");
  init_model->add_option("--hidden-size", args.hidden_size, "Hidden size");
  init_model->add_option("--num-layers", args.num_layers, "Encoder layers");
  init_model->add_option("--num-heads", args.num_heads, "Attention heads");
  init_model->add_option("--intermediate-size", args.intermediate_size, "FFN size");
  init_model->add_option("--max-positions", args.max_positions, "Positional table size");

  auto* count = app.add_subcommand("count-params",
                                   "Trainable-parameter accounting for a freeze policy");
  count->add_option("--model", args.model,
                    "Model id, or 'muril-base' for the analytic architecture")->required();
  count->add_option("--policy", args.policy, "LN | LN_PE | LN_PE_WE | FULL")->required();

  auto* sweep = app.add_subcommand("sweep", "Hyperparameter grid sweep");
  sweep->add_option("--config", args.config, "Experiment config JSON")->required();
  sweep->add_option("--out", args.out, "Sweep directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (build->parsed()) {
      ogb::pipeline::cmd_build_corpus(args.lexicon, args.out,
                                      args.split_fraction, args.seed, std::cout);
    } else if (evaluate->parsed()) {
      ogb::pipeline::EvaluateOptions opts;
      opts.score.batch_size = args.batch_size;
      if (args.error_policy == "skip") {
        opts.score.on_error = ogb::scorer::ErrorPolicy::SkipAndRecord;
      } else if (args.error_policy != "fail") {
        ogb::raise(ogb::ErrorKind::UsageError,
                   "--error-policy must be 'fail' or 'skip'");
      }
      opts.score.parallelism = args.parallelism;
      opts.cache_dir = args.cache_dir;
      ogb::pipeline::cmd_evaluate(args.model, args.corpus, args.out, opts,
                                  std::cout);
    } else if (debias->parsed()) {
      ogb::trainer::TrainConfig config;
      if (!args.config.empty()) {
        config = ogb::pipeline::load_config(args.config).training;
      }
      if (debias->count("--epochs")) config.epochs = args.epochs;
      if (debias->count("--learning-rate")) config.learning_rate = args.learning_rate;
      if (debias->count("--batch-size")) config.batch_size = args.train_batch_size;
      if (debias->count("--seed")) config.seed = args.train_seed;
      if (debias->count("--mask-probability")) config.mask_probability = args.mask_probability;
      ogb::pipeline::cmd_debias(args.model, args.train_corpus, args.policy,
                                config, args.out, std::cout);
    } else if (report->parsed()) {
      std::vector<std::pair<std::string, std::string>> methods;
      for (const auto& m : args.methods) methods.push_back(parse_method(m));
      ogb::pipeline::cmd_report(args.corpus, methods, args.out, std::cout);
    } else if (run_all->parsed()) {
      const auto config = ogb::pipeline::load_config(args.config);
      std::string run_dir = args.out.empty() ? config.out_dir : args.out;
      if (run_dir.empty()) {
        ogb::raise(ogb::ErrorKind::UsageError,
                   "run-all needs --out or an out_dir in the config");
      }
      ogb::pipeline::cmd_run_all(config, run_dir, std::cout);
    } else if (init_model->parsed()) {
      ogb::pipeline::ModelSection section;
      section.name = args.model_name;
      section.init_seed = args.init_seed;
      section.arch.hidden_size = args.hidden_size;
      section.arch.num_layers = args.num_layers;
      section.arch.num_heads = args.num_heads;
      section.arch.intermediate_size = args.intermediate_size;
      section.arch.max_positions = args.max_positions;
      ogb::pipeline::cmd_init_model(section, args.corpus, args.out, std::cout);
    } else if (count->parsed()) {
      ogb::pipeline::cmd_count_params(args.model, args.policy, std::cout);
    } else if (sweep->parsed()) {
      const auto config = ogb::pipeline::load_config(args.config);
      ogb::pipeline::cmd_sweep(config, args.out, std::cout);
    }
  } catch (const ogb::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ogb::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
