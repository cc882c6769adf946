#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ogb::pipeline {

// Per-run bookkeeping: digests of the inputs, the artifacts every stage
// produced, and per-stage status. Written after each stage so interrupted
// runs can resume.
struct RunManifest {
  std::string run_id;
  std::string config_digest;
  std::string model_id;
  std::string lexicon_digest;
  std::string corpus_digest;
  std::uint64_t split_seed = 0;
  std::vector<std::string> policies;
  std::string created_at;   // ISO-8601 UTC
  std::string updated_at;
  // artifact name -> path relative to the run directory
  std::map<std::string, std::string> artifacts;
  // stage name -> "done"
  std::map<std::string, std::string> stages;

  bool stage_done(const std::string& stage) const;
  void mark_stage(const std::string& stage);
  void add_artifact(const std::string& name, const std::string& rel_path);
};

std::string manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const std::string& text);

void save_manifest(const RunManifest& m, const std::string& path);
RunManifest load_manifest(const std::string& path);

std::string iso8601_utc_now();

}  // namespace ogb::pipeline
