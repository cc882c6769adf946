#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "helpers.hpp"
#include "ogb/model/encoder.hpp"
#include "ogb/model/mock.hpp"
#include "ogb/model/registry.hpp"
#include "ogb/pipeline/commands.hpp"
#include "ogb/pipeline/config.hpp"
#include "ogb/pipeline/manifest.hpp"

using namespace ogb;
using pipeline::ExperimentConfig;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

// Tiny-reference config pointing at the shipped demo lexicon, rooted in a
// temp dir.
ExperimentConfig tiny_config(const test::TempDir& dir) {
  ExperimentConfig cfg;
  cfg.run_id = "test-run";
  cfg.lexicon_path = std::string(OGB_DATA_DIR) + "/lexicon.hi.demo.json";
  cfg.split_fraction = 0.8;
  cfg.split_seed = 12345;
  cfg.model.id = "tiny";
  cfg.model.name = "tiny-test";
  cfg.model.init_seed = 7;
  cfg.model.arch.hidden_size = 16;
  cfg.model.arch.num_layers = 2;
  cfg.model.arch.num_heads = 2;
  cfg.model.arch.intermediate_size = 64;
  cfg.model.arch.max_positions = 24;
  cfg.training.epochs = 2;
  cfg.training.seed = 99;
  cfg.policies = {"LN"};
  cfg.out_dir = dir.file("run");
  return cfg;
}

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run_cli(const test::TempDir& dir, const std::string& args) {
  const std::string out_path = dir.file("cli.out");
  const std::string err_path = dir.file("cli.err");
  const std::string command = std::string(OGB_CLI_PATH) + " " + args + " > " +
                              out_path + " 2> " + err_path;
  const int status = std::system(command.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  return r;
}

}  // namespace

TEST_CASE("the shipped tiny-reference config loads with resolved paths") {
  const auto cfg =
      pipeline::load_config(std::string(OGB_DATA_DIR) + "/config.tiny.json");
  CHECK(cfg.run_id == "tiny-reference");
  CHECK(cfg.lexicon_path.find("lexicon.hi.demo.json") != std::string::npos);
  CHECK(cfg.lexicon_path.front() == '/');  // resolved against the config dir
  CHECK(cfg.model.arch.hidden_size == 16);
  CHECK(cfg.training.epochs == 3);
  CHECK(cfg.training.learning_rate == 2e-5);
  CHECK(cfg.training.mask_probability == 0.15);
  CHECK(cfg.policies == std::vector<std::string>{"LN", "LN_PE", "LN_PE_WE"});
}

TEST_CASE("unknown config fields are ConfigError") {
  test::TempDir dir("cfg");
  write_text(dir.file("bad.json"),
             R"({"lexicon": "x.json", "corpus": {"split_fractoin": 0.8}})");
  try {
    pipeline::load_config(dir.file("bad.json"));
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ConfigError);
    CHECK(std::string(e.what()).find("split_fractoin") != std::string::npos);
  }
}

TEST_CASE("cmd_build_corpus prints the demo cardinality summary") {
  test::TempDir dir("bc");
  std::ostringstream out;
  const auto result = pipeline::cmd_build_corpus(
      std::string(OGB_DATA_DIR) + "/lexicon.hi.demo.json", dir.file("c"), 0.8,
      42, out);
  CHECK(result.instances == 30);
  CHECK(result.train_professions == 4);
  CHECK(result.test_professions == 1);
  CHECK(out.str().find("30 instances; 4 train / 1 test professions") !=
        std::string::npos);

  // same inputs + seed => identical output files
  std::ostringstream ignore;
  pipeline::cmd_build_corpus(std::string(OGB_DATA_DIR) + "/lexicon.hi.demo.json",
                             dir.file("c2"), 0.8, 42, ignore);
  CHECK(slurp(result.corpus_path) == slurp(dir.file("c2") + "/corpus.jsonl"));
  CHECK(slurp(result.split_manifest_path) == slurp(dir.file("c2") + "/split.json"));
}

TEST_CASE("cmd_evaluate with the uniform mock: all group means zero") {
  test::TempDir dir("ev");
  std::ostringstream out;
  pipeline::cmd_build_corpus(std::string(OGB_DATA_DIR) + "/lexicon.hi.demo.json",
                             dir.file("c"), 0.8, 1, out);
  pipeline::EvaluateOptions opts;
  const auto result =
      pipeline::cmd_evaluate("uniform:64", dir.file("c") + "/corpus.jsonl",
                             dir.file("scored.jsonl"), opts, out);
  CHECK(result.scored_count == 30);
  for (const auto& [g, st] : result.summary.by_gender) {
    CHECK(st.mean_ogb == 0.0);
  }
}

TEST_CASE("cmd_evaluate cache: repeated invocation reuses without rescoring") {
  static int constructions = 0;
  model::register_backend_scheme(
      "counted", [](const std::string&) -> std::unique_ptr<model::MaskedModelBackend> {
        ++constructions;
        return std::make_unique<model::UniformBackend>(32);
      });

  test::TempDir dir("cache");
  std::ostringstream out;
  pipeline::cmd_build_corpus(std::string(OGB_DATA_DIR) + "/lexicon.hi.demo.json",
                             dir.file("c"), 0.8, 1, out);
  pipeline::EvaluateOptions opts;
  opts.cache_dir = dir.file("cache");

  const auto first =
      pipeline::cmd_evaluate("counted:x", dir.file("c") + "/corpus.jsonl",
                             dir.file("a.jsonl"), opts, out);
  CHECK(constructions == 1);
  CHECK_FALSE(first.cache_hit);

  const auto second =
      pipeline::cmd_evaluate("counted:x", dir.file("c") + "/corpus.jsonl",
                             dir.file("b.jsonl"), opts, out);
  CHECK(constructions == 1);  // backend never rebuilt
  CHECK(second.cache_hit);
  CHECK(slurp(dir.file("a.jsonl")) == slurp(dir.file("b.jsonl")));

  // different corpus digest (train split differs from the full corpus): no reuse
  pipeline::cmd_evaluate("counted:x", dir.file("c") + "/train.jsonl",
                         dir.file("d.jsonl"), opts, out);
  CHECK(constructions == 2);

  // different model digest: no reuse either
  pipeline::cmd_evaluate("counted:y", dir.file("c") + "/corpus.jsonl",
                         dir.file("e.jsonl"), opts, out);
  CHECK(constructions == 3);
}

TEST_CASE("cmd_debias writes checkpoint, param report and manifest") {
  test::TempDir dir("db");
  std::ostringstream out;

  // an architecture whose norms are under 1% of all parameters
  model::EncoderArch arch;
  arch.hidden_size = 32;
  arch.num_layers = 4;
  arch.num_heads = 4;
  arch.intermediate_size = 128;
  arch.max_positions = 64;
  model::Vocabulary vocab;
  const auto instances = corpus::build_corpus(test::small_hindi_lexicon());
  for (const auto& inst : instances) {
    for (const auto& tok : model::split_text(inst.sentence)) vocab.add(tok.text);
  }
  while (vocab.size() < 1024) vocab.add("pad" + std::to_string(vocab.size()));
  auto encoder = model::TinyEncoder::random_init(arch, std::move(vocab), "m", 1);
  encoder->save(dir.file("base.ckpt"));
  corpus::save_corpus(instances, dir.file("train.jsonl"));

  trainer::TrainConfig config;
  config.epochs = 2;
  config.seed = 4;
  const auto result =
      pipeline::cmd_debias("tiny:" + dir.file("base.ckpt"), dir.file("train.jsonl"),
                           "LN", config, dir.file("out"), out);

  CHECK(result.param_report.fraction < 0.01);  // under one percent
  CHECK(result.param_report.trainable_count == (2 * 4 + 2) * 2 * 32);
  CHECK(result.train_log.epoch_loss.size() == 2);
  CHECK(std::ifstream(result.checkpoint_path).good());
  const auto manifest_text = slurp(result.manifest_path);
  CHECK(manifest_text.find("\"policy\": \"LN\"") != std::string::npos);
  CHECK(manifest_text.find("epoch_loss") != std::string::npos);
  const auto report_text = slurp(dir.file("out") + "/param_report.json");
  CHECK(report_text.find("\"trainable_count\": 640") != std::string::npos);

  // the debiased checkpoint advertises its policy
  const auto reloaded = model::TinyEncoder::load(result.checkpoint_path);
  CHECK(reloaded->model_id() == "m+LN");

  // a non-trainable backend is refused
  try {
    pipeline::cmd_debias("uniform:32", dir.file("train.jsonl"), "LN", config,
                         dir.file("out2"), out);
    FAIL("expected BackendFailure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::BackendFailure);
  }
}

TEST_CASE("cmd_report reproduces the published arithmetic from scored files") {
  test::TempDir dir("rep");

  const auto write_scored = [&](const std::string& name, double neutral,
                                double feminine, double masculine) {
    std::vector<scorer::ScoredInstance> scored;
    const std::pair<lexicon::GenderClass, double> rows[] = {
        {lexicon::GenderClass::Neutral, neutral},
        {lexicon::GenderClass::Feminine, feminine},
        {lexicon::GenderClass::Masculine, masculine},
    };
    for (const auto& [g, v] : rows) {
      scorer::ScoredInstance s;
      s.instance.template_id = "t";
      s.instance.gender = g;
      s.instance.person_surface = "p";
      s.instance.profession_surface = "f";
      s.p_person = std::exp(v);
      s.p_prior = 1.0;
      s.ogb = v;
      scored.push_back(s);
    }
    scorer::save_scored(scored, "synthetic", dir.file(name));
    return dir.file(name);
  };

  const auto baseline = write_scored("base.jsonl", -2.575, -4.173, -1.382);
  const auto ln = write_scored("ln.jsonl", -0.788, -1.239, 0.0069);

  std::ostringstream out;
  const auto result =
      pipeline::cmd_report(baseline, {{"LN", ln}}, dir.file("rep"), out);
  const auto& row = result.report.methods.at(0);
  CHECK(std::fabs(row.percent_change_by_gender.at(lexicon::GenderClass::Neutral) -
                  69.41) <= 0.05);
  CHECK(std::fabs(row.percent_change_by_gender.at(lexicon::GenderClass::Feminine) -
                  70.31) <= 0.05);
  CHECK(std::fabs(row.percent_change_by_gender.at(lexicon::GenderClass::Masculine) -
                  99.50) <= 0.05);
  CHECK(std::fabs(row.mean_percent_change - 79.74) <= 0.05);

  const auto table = slurp(result.table_path);
  CHECK(table.find("-2.575") != std::string::npos);
  CHECK(table.find("-0.788") != std::string::npos);
  CHECK(std::ifstream(result.delimited_path).good());
  CHECK(std::ifstream(result.structured_path).good());

  // baseline only: no percent columns
  std::ostringstream out2;
  const auto solo = pipeline::cmd_report(baseline, {}, dir.file("solo"), out2);
  CHECK(slurp(solo.table_path).find("% change") == std::string::npos);

  // debiased == baseline: all percents render 0.00
  std::ostringstream out3;
  const auto same =
      pipeline::cmd_report(baseline, {{"same", baseline}}, dir.file("same"), out3);
  CHECK(slurp(same.table_path).find("0.00") != std::string::npos);
}

TEST_CASE("cmd_run_all resumes finished stages and redoes deleted ones") {
  test::TempDir dir("runall");
  const auto cfg = tiny_config(dir);
  std::ostringstream out1;
  const auto first = pipeline::cmd_run_all(cfg, cfg.out_dir, out1);
  // corpus, model, eval-baseline, debias-LN, eval-LN, report
  CHECK(first.stages_run.size() == 6);
  CHECK(first.stages_skipped.empty());
  CHECK(std::ifstream(cfg.out_dir + "/report.txt").good());

  std::ostringstream out2;
  const auto second = pipeline::cmd_run_all(cfg, cfg.out_dir, out2);
  CHECK(second.stages_run.empty());
  CHECK(second.stages_skipped.size() == first.stages_run.size());

  // deleting only the report re-executes only the report stage
  std::filesystem::remove(cfg.out_dir + "/report.txt");
  std::ostringstream out3;
  const auto third = pipeline::cmd_run_all(cfg, cfg.out_dir, out3);
  CHECK(third.stages_run == std::vector<std::string>{"report"});

  // manifest completeness: every artifact it lists exists
  const auto manifest = pipeline::load_manifest(first.manifest_path);
  for (const auto& [name, rel] : manifest.artifacts) {
    CHECK(std::filesystem::exists(std::filesystem::path(cfg.out_dir) / rel));
  }
  CHECK(manifest.stage_done("report"));
}

TEST_CASE("cmd_run_all with zero policies produces a baseline-only report") {
  test::TempDir dir("runzero");
  auto cfg = tiny_config(dir);
  cfg.policies.clear();
  std::ostringstream out;
  pipeline::cmd_run_all(cfg, cfg.out_dir, out);
  const auto table = slurp(cfg.out_dir + "/report.txt");
  CHECK(table.find("baseline") != std::string::npos);
  CHECK(table.find("% change") == std::string::npos);
}

TEST_CASE("cmd_count_params answers for the analytic muril architecture") {
  std::ostringstream out;
  const auto report = pipeline::cmd_count_params("muril-base", "LN", out);
  CHECK(report.trainable_count == 39936);
  CHECK(report.total_count == 237755045);
  CHECK(out.str().find("39936") != std::string::npos);
}

TEST_CASE("cmd_sweep reports one cell per grid point") {
  test::TempDir dir("sweep");
  auto cfg = tiny_config(dir);
  cfg.sweep_learning_rates = {1e-4, 1e-3};
  cfg.sweep_epochs = {1};
  cfg.policies = {"LN", "FULL"};
  std::ostringstream out;
  const auto cells = pipeline::cmd_sweep(cfg, dir.file("sw"), out);
  CHECK(cells.size() == 4);
  const auto tsv = slurp(dir.file("sw") + "/sweep.tsv");
  CHECK(tsv.find("learning_rate") != std::string::npos);
  for (const auto& cell : cells) CHECK(cell.mean_abs_group_ogb >= 0.0);
}

TEST_CASE("cli: bad lexicon exits with the data error code and names the schema issue") {
  test::TempDir dir("cli");
  write_text(dir.file("bad.json"), R"({
    "templates": [{"id": "t", "text": "{PERSON} only."}],
    "person_nouns": [{"surface": "a", "gender": "masculine"},
                      {"surface": "b", "gender": "feminine"},
                      {"surface": "c", "gender": "neutral"}],
    "professions": [{"surface": "p"}]
  })");
  const auto r = run_cli(dir, "build-corpus --lexicon " + dir.file("bad.json") +
                                  " --out " + dir.file("out"));
  CHECK(r.code == 2);
  CHECK(r.err.find("SchemaViolation") != std::string::npos);
}

TEST_CASE("cli: usage problems exit 1, success exits 0") {
  test::TempDir dir("cli2");
  const auto usage = run_cli(dir, "count-params --model muril-base --policy BOGUS");
  CHECK(usage.code == 1);

  const auto missing = run_cli(dir, "definitely-not-a-command");
  CHECK(missing.code == 1);

  const auto ok = run_cli(dir, "count-params --model muril-base --policy LN_PE");
  CHECK(ok.code == 0);
  CHECK(ok.out.find("433152") != std::string::npos);

  const auto help = run_cli(dir, "--help");
  CHECK(help.code == 0);
}
