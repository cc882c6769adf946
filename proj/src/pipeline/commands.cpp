#include "ogb/pipeline/commands.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "ogb/model/encoder.hpp"
#include "ogb/model/registry.hpp"
#include "ogb/pipeline/manifest.hpp"
#include "ogb/util/digest.hpp"
#include "ogb/util/numfmt.hpp"

namespace ogb::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    raise(ErrorKind::FileMissing,
          "cannot create directory '" + dir + "': " + ec.message());
  }
}

void copy_file_exact(const std::string& from, const std::string& to) {
  std::error_code ec;
  fs::copy_file(from, to, fs::copy_options::overwrite_existing, ec);
  if (ec) {
    raise(ErrorKind::FileMissing,
          "cannot copy '" + from + "' to '" + to + "': " + ec.message());
  }
}

void print_summary(const metrics::GroupSummary& summary, std::ostream& out) {
  for (const auto& [gender, stats] : summary.by_gender) {
    out << "  " << lexicon::to_string(gender) << ": mean OGB "
        << numfmt::significant(stats.mean_ogb, 4) << " over " << stats.count
        << " instances\n";
  }
}

std::string policy_stage(const std::string& prefix, const std::string& policy) {
  return prefix + "-" + policy;
}

}  // namespace

BuildCorpusResult cmd_build_corpus(const std::string& lexicon_path,
                                   const std::string& out_dir,
                                   double split_fraction, std::uint64_t seed,
                                   std::ostream& out) {
  ensure_dir(out_dir);
  const auto lex = lexicon::load_lexicon(lexicon_path);
  const auto instances = corpus::build_corpus(lex);
  const auto split = corpus::split_corpus(instances, split_fraction, seed);

  BuildCorpusResult result;
  result.instances = instances.size();
  result.train_professions = split.train_professions.size();
  result.test_professions = split.test_professions.size();
  result.corpus_path = (fs::path(out_dir) / "corpus.jsonl").string();
  result.train_path = (fs::path(out_dir) / "train.jsonl").string();
  result.test_path = (fs::path(out_dir) / "test.jsonl").string();
  result.split_manifest_path = (fs::path(out_dir) / "split.json").string();

  corpus::save_corpus(instances, result.corpus_path);
  corpus::save_split(split, result.train_path, result.test_path,
                     result.split_manifest_path);

  out << result.instances << " instances; " << result.train_professions
      << " train / " << result.test_professions << " test professions\n";
  return result;
}

EvaluateResult cmd_evaluate(const std::string& model_id,
                            const std::string& corpus_path,
                            const std::string& out_path,
                            const EvaluateOptions& options, std::ostream& out) {
  const std::string corpus_digest = digest::sha256_file(corpus_path);
  const std::string model_digest = model::backend_digest(model_id);

  std::string cache_dir = options.cache_dir;
  if (cache_dir.empty()) {
    if (const char* env = std::getenv("OGB_CACHE_DIR")) cache_dir = env;
  }
  std::string cache_path;
  if (!cache_dir.empty()) {
    ensure_dir(cache_dir);
    cache_path = (fs::path(cache_dir) /
                  (model_digest.substr(0, 16) + "-" + corpus_digest.substr(0, 16) +
                   ".jsonl"))
                     .string();
  }

  EvaluateResult result;
  result.scored_path = out_path;

  if (!cache_path.empty() && fs::exists(cache_path)) {
    copy_file_exact(cache_path, out_path);
    const auto records = scorer::load_scored(out_path);
    result.summary = metrics::group_means(records, corpus_digest);
    result.scored_count = records.size();
    result.cache_hit = true;
    out << "cache hit (" << records.size() << " scored instances reused)\n";
    print_summary(result.summary, out);
    return result;
  }

  const auto backend = model::create_backend(model_id);
  const auto instances = corpus::load_corpus(corpus_path);
  const auto score_result =
      scorer::score_corpus(*backend, instances, options.score);

  scorer::save_scored(score_result.scored, backend->model_id(), out_path);
  if (!cache_path.empty()) copy_file_exact(out_path, cache_path);

  if (!score_result.failures.empty()) {
    const std::string fail_path = out_path + ".failures.jsonl";
    std::ofstream fail_out(fail_path, std::ios::binary | std::ios::trunc);
    for (const auto& f : score_result.failures) {
      fail_out << json{{"index", f.index}, {"error", f.message}}.dump() << "\n";
    }
    out << score_result.failures.size() << " instances failed; see "
        << fail_path << "\n";
  }

  result.summary = metrics::group_means(score_result.scored,
                                        backend->model_id(), corpus_digest);
  result.scored_count = score_result.scored.size();
  result.failed_count = score_result.failures.size();
  out << "scored " << result.scored_count << " instances with "
      << backend->model_id() << "\n";
  print_summary(result.summary, out);
  return result;
}

DebiasResult cmd_debias(const std::string& model_id,
                        const std::string& train_corpus_path,
                        const std::string& policy_name,
                        const trainer::TrainConfig& config,
                        const std::string& out_dir, std::ostream& out) {
  const auto policy = trainer::FreezePolicy::parse(policy_name);
  ensure_dir(out_dir);

  auto backend = model::create_backend(model_id);
  auto* tiny = dynamic_cast<model::TinyEncoder*>(backend.get());
  if (tiny == nullptr) {
    raise(ErrorKind::BackendFailure,
          "model '" + model_id + "' is not trainable");
  }

  const auto train_corpus = corpus::load_corpus(train_corpus_path);
  const std::string corpus_digest = digest::sha256_file(train_corpus_path);

  DebiasResult result;
  result.param_report = trainer::count_trainable(*tiny, policy);
  result.train_log = trainer::finetune(*tiny, train_corpus, policy, config);

  tiny->set_model_id(tiny->model_id() + "+" + policy.to_string());
  result.checkpoint_path = (fs::path(out_dir) / "model.ckpt").string();
  tiny->save(result.checkpoint_path);

  // param report in the structured report shape
  json report_doc;
  report_doc["policy"] = policy.to_string();
  report_doc["trainable_count"] = result.param_report.trainable_count;
  report_doc["total_count"] = result.param_report.total_count;
  report_doc["fraction"] = result.param_report.fraction;
  const std::string report_path =
      (fs::path(out_dir) / "param_report.json").string();
  {
    std::ofstream f(report_path, std::ios::binary | std::ios::trunc);
    f << report_doc.dump(2) << "\n";
  }

  json manifest;
  manifest["policy"] = policy.to_string();
  manifest["model_id"] = tiny->model_id();
  manifest["train_corpus_digest"] = corpus_digest;
  manifest["config"] = {{"epochs", config.epochs},
                        {"learning_rate", config.learning_rate},
                        {"batch_size", config.batch_size},
                        {"seed", config.seed},
                        {"mask_probability", config.mask_probability}};
  manifest["epoch_loss"] = result.train_log.epoch_loss;
  manifest["steps"] = result.train_log.steps;
  manifest["wall_seconds"] = result.train_log.wall_seconds;
  manifest["checkpoint"] = "model.ckpt";
  manifest["written_at"] = iso8601_utc_now();
  result.manifest_path = (fs::path(out_dir) / "manifest.json").string();
  {
    std::ofstream f(result.manifest_path, std::ios::binary | std::ios::trunc);
    f << manifest.dump(2) << "\n";
  }

  out << "policy " << policy.to_string() << ": "
      << result.param_report.trainable_count << " / "
      << result.param_report.total_count << " trainable parameters ("
      << numfmt::significant(result.param_report.fraction * 100.0, 3) << "%)\n";
  for (std::size_t e = 0; e < result.train_log.epoch_loss.size(); ++e) {
    out << "  epoch " << (e + 1) << " loss "
        << numfmt::significant(result.train_log.epoch_loss[e], 6) << "\n";
  }
  return result;
}

ReportResult cmd_report(
    const std::string& baseline_scored_path,
    const std::vector<std::pair<std::string, std::string>>& method_scored_paths,
    const std::string& out_dir, std::ostream& out) {
  ensure_dir(out_dir);

  const auto baseline_records = scorer::load_scored(baseline_scored_path);
  auto baseline = metrics::group_means(baseline_records);

  std::vector<std::pair<std::string, metrics::GroupSummary>> methods;
  for (const auto& [name, path] : method_scored_paths) {
    methods.emplace_back(name, metrics::group_means(scorer::load_scored(path)));
  }

  ReportResult result;
  result.report = metrics::make_report(std::move(baseline), methods);
  result.table_path = (fs::path(out_dir) / "report.txt").string();
  result.delimited_path = (fs::path(out_dir) / "report.tsv").string();
  result.structured_path = (fs::path(out_dir) / "report.json").string();

  const auto write = [](const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) raise(ErrorKind::FileMissing, "cannot write report '" + path + "'");
    f << text;
  };
  const std::string table =
      metrics::render_report(result.report, metrics::ReportFormat::TableText);
  write(result.table_path, table);
  write(result.delimited_path,
        metrics::render_report(result.report, metrics::ReportFormat::Delimited));
  write(result.structured_path,
        metrics::render_report(result.report, metrics::ReportFormat::Structured));

  out << table;
  return result;
}

std::string cmd_init_model(const ModelSection& model,
                           const std::string& corpus_path,
                           const std::string& out_path, std::ostream& out) {
  const auto instances = corpus::load_corpus(corpus_path);
  if (instances.empty()) {
    raise(ErrorKind::EmptyCorpus,
          "cannot build a vocabulary from an empty corpus");
  }

  model::Vocabulary vocab;
  std::size_t longest = 0;
  for (const auto& inst : instances) {
    const auto raw = model::split_text(inst.sentence);
    longest = std::max(longest, raw.size() + 2);  // [CLS] ... [SEP]
    for (const auto& token : raw) vocab.add(token.text);
  }
  if (longest > static_cast<std::size_t>(model.arch.max_positions)) {
    raise(ErrorKind::ConfigError,
          "max_positions " + std::to_string(model.arch.max_positions) +
              " is too small for this corpus (needs " + std::to_string(longest) +
              ")");
  }

  auto encoder = model::TinyEncoder::random_init(model.arch, std::move(vocab),
                                                 model.name, model.init_seed);
  encoder->save(out_path);

  std::size_t total = 0;
  for (const auto& t : encoder->tensors()) total += t.count();
  out << "initialized " << model.name << " (vocab "
      << encoder->vocab_size() << ", " << total << " parameters) at "
      << out_path << "\n";
  return out_path;
}

trainer::ParamReport cmd_count_params(const std::string& model_id,
                                      const std::string& policy_name,
                                      std::ostream& out) {
  const auto policy = trainer::FreezePolicy::parse(policy_name);
  trainer::ParamReport report;
  if (model_id == "muril-base") {
    report = trainer::count_trainable(
        model::encoder_inventory(model::muril_base_arch(),
                                 model::kMurilBaseVocabSize),
        policy);
  } else {
    const auto backend = model::create_backend(model_id);
    report = trainer::count_trainable(*backend, policy);
  }
  out << policy.to_string() << ": " << report.trainable_count << " of "
      << report.total_count << " parameters trainable ("
      << numfmt::significant(report.fraction * 100.0, 3) << "%)\n";
  return report;
}

RunAllResult cmd_run_all(const ExperimentConfig& config,
                         const std::string& run_dir, std::ostream& out) {
  ensure_dir(run_dir);
  const fs::path root(run_dir);
  const std::string manifest_path = (root / "manifest.json").string();

  RunManifest manifest;
  if (fs::exists(manifest_path)) {
    manifest = load_manifest(manifest_path);
  } else {
    manifest.run_id = config.run_id;
    manifest.created_at = iso8601_utc_now();
  }
  manifest.config_digest = digest::sha256_hex(config_to_json(config));
  manifest.lexicon_digest = digest::sha256_file(config.lexicon_path);
  manifest.split_seed = config.split_seed;
  manifest.policies = config.policies;

  RunAllResult result;
  result.run_dir = run_dir;
  result.manifest_path = manifest_path;

  const auto save = [&] {
    manifest.updated_at = iso8601_utc_now();
    save_manifest(manifest, manifest_path);
  };

  // A stage is skippable only when marked done and its artifacts are still
  // on disk.
  const auto stage_valid = [&](const std::string& stage,
                               std::initializer_list<std::string> artifacts) {
    if (!manifest.stage_done(stage)) return false;
    for (const auto& name : artifacts) {
      auto it = manifest.artifacts.find(name);
      if (it == manifest.artifacts.end() || !fs::exists(root / it->second)) {
        return false;
      }
    }
    return true;
  };

  const auto run_stage = [&](const std::string& stage,
                             std::initializer_list<std::string> artifacts,
                             const std::function<void()>& body) {
    if (stage_valid(stage, artifacts)) {
      out << "[skip] " << stage << "\n";
      result.stages_skipped.push_back(stage);
      return;
    }
    out << "[run ] " << stage << "\n";
    try {
      body();
    } catch (const Error& e) {
      save();
      raise(e.kind(), "stage '" + stage + "': " + e.what());
    }
    manifest.mark_stage(stage);
    result.stages_run.push_back(stage);
    save();
  };

  // -- corpus -------------------------------------------------------------
  run_stage("corpus",
            {"corpus", "train", "test", "split"}, [&] {
              cmd_build_corpus(config.lexicon_path, run_dir,
                               config.split_fraction, config.split_seed, out);
              manifest.add_artifact("corpus", "corpus.jsonl");
              manifest.add_artifact("train", "train.jsonl");
              manifest.add_artifact("test", "test.jsonl");
              manifest.add_artifact("split", "split.json");
            });
  manifest.corpus_digest =
      digest::sha256_file((root / "corpus.jsonl").string());

  // -- model --------------------------------------------------------------
  std::string base_model_id;
  if (config.model.checkpoint) {
    base_model_id = "tiny:" + *config.model.checkpoint;
  } else if (config.model.id == "tiny") {
    run_stage("model", {"model"}, [&] {
      cmd_init_model(config.model, (root / "corpus.jsonl").string(),
                     (root / "model.ckpt").string(), out);
      manifest.add_artifact("model", "model.ckpt");
    });
    base_model_id = "tiny:" + (root / "model.ckpt").string();
  } else {
    base_model_id = config.model.id;  // e.g. uniform:32
  }
  manifest.model_id = base_model_id;

  // -- baseline evaluation --------------------------------------------------
  const std::string eval_corpus =
      (root / (config.evaluation.split == "test" ? "test.jsonl" : "corpus.jsonl"))
          .string();
  EvaluateOptions eval_opts;
  eval_opts.score = score_options_from(config.evaluation);
  eval_opts.cache_dir = (root / "cache").string();

  run_stage("eval-baseline", {"scored-baseline"}, [&] {
    cmd_evaluate(base_model_id, eval_corpus,
                 (root / "scored_baseline.jsonl").string(), eval_opts, out);
    manifest.add_artifact("scored-baseline", "scored_baseline.jsonl");
  });

  // -- per-policy debias + evaluation ---------------------------------------
  std::vector<std::pair<std::string, std::string>> method_paths;
  for (const auto& policy : config.policies) {
    const std::string debias_dir = (root / "debias" / policy).string();
    run_stage(policy_stage("debias", policy),
              {"checkpoint-" + policy}, [&] {
                cmd_debias(base_model_id, (root / "train.jsonl").string(),
                           policy, config.training, debias_dir, out);
                manifest.add_artifact("checkpoint-" + policy,
                                      "debias/" + policy + "/model.ckpt");
              });

    const std::string scored_rel = "scored_" + policy + ".jsonl";
    run_stage(policy_stage("eval", policy), {"scored-" + policy}, [&] {
      cmd_evaluate("tiny:" + debias_dir + "/model.ckpt", eval_corpus,
                   (root / scored_rel).string(), eval_opts, out);
      manifest.add_artifact("scored-" + policy, scored_rel);
    });
    method_paths.emplace_back(policy, (root / scored_rel).string());
  }

  // -- report ---------------------------------------------------------------
  run_stage("report", {"report-table", "report-delimited", "report-structured"},
            [&] {
              cmd_report((root / "scored_baseline.jsonl").string(), method_paths,
                         run_dir, out);
              manifest.add_artifact("report-table", "report.txt");
              manifest.add_artifact("report-delimited", "report.tsv");
              manifest.add_artifact("report-structured", "report.json");
            });

  save();
  return result;
}

std::vector<SweepCell> cmd_sweep(const ExperimentConfig& config,
                                 const std::string& run_dir,
                                 std::ostream& out) {
  ensure_dir(run_dir);
  const fs::path root(run_dir);

  // shared corpus + base model
  cmd_build_corpus(config.lexicon_path, run_dir, config.split_fraction,
                   config.split_seed, out);
  const std::string base_ckpt = (root / "model.ckpt").string();
  if (config.model.checkpoint) {
    copy_file_exact(*config.model.checkpoint, base_ckpt);
  } else {
    cmd_init_model(config.model, (root / "corpus.jsonl").string(), base_ckpt,
                   out);
  }

  const auto train_corpus = corpus::load_corpus((root / "train.jsonl").string());
  const std::string eval_corpus_path =
      (root / (config.evaluation.split == "test" ? "test.jsonl" : "corpus.jsonl"))
          .string();
  const auto eval_corpus = corpus::load_corpus(eval_corpus_path);

  std::vector<double> rates = config.sweep_learning_rates;
  if (rates.empty()) rates = {config.training.learning_rate};
  std::vector<int> epochs = config.sweep_epochs;
  if (epochs.empty()) epochs = {config.training.epochs};
  std::vector<std::string> policies = config.policies;
  if (policies.empty()) policies = {"LN"};

  std::vector<SweepCell> cells;
  std::ofstream tsv((root / "sweep.tsv").string(),
                    std::ios::binary | std::ios::trunc);
  tsv << "learning_rate\tepochs\tpolicy\tmean_abs_group_ogb\n";

  for (double lr : rates) {
    for (int ep : epochs) {
      for (const auto& policy_name : policies) {
        auto encoder = model::TinyEncoder::load(base_ckpt);
        trainer::TrainConfig cell_config = config.training;
        cell_config.learning_rate = lr;
        cell_config.epochs = ep;
        trainer::finetune(*encoder, train_corpus,
                          trainer::FreezePolicy::parse(policy_name),
                          cell_config);

        const auto scored = scorer::score_corpus(
            *encoder, eval_corpus, score_options_from(config.evaluation));
        const auto summary = metrics::group_means(scored.scored);
        double acc = 0.0;
        for (const auto& [gender, stats] : summary.by_gender) {
          acc += std::fabs(stats.mean_ogb);
        }
        SweepCell cell;
        cell.learning_rate = lr;
        cell.epochs = ep;
        cell.policy = policy_name;
        cell.mean_abs_group_ogb = acc / 3.0;
        cells.push_back(cell);

        tsv << numfmt::exact(lr) << '\t' << ep << '\t' << policy_name << '\t'
            << numfmt::exact(cell.mean_abs_group_ogb) << '\n';
        out << "lr " << numfmt::significant(lr, 3) << ", epochs " << ep << ", "
            << policy_name << ": mean |group OGB| "
            << numfmt::significant(cell.mean_abs_group_ogb, 4) << "\n";
      }
    }
  }
  return cells;
}

}  // namespace ogb::pipeline
