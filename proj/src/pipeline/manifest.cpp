#include "ogb/pipeline/manifest.hpp"

#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ogb/errors.hpp"

namespace ogb::pipeline {

using nlohmann::json;

bool RunManifest::stage_done(const std::string& stage) const {
  auto it = stages.find(stage);
  return it != stages.end() && it->second == "done";
}

void RunManifest::mark_stage(const std::string& stage) {
  stages[stage] = "done";
}

void RunManifest::add_artifact(const std::string& name,
                               const std::string& rel_path) {
  artifacts[name] = rel_path;
}

std::string manifest_to_json(const RunManifest& m) {
  json doc;
  doc["run_id"] = m.run_id;
  doc["config_digest"] = m.config_digest;
  doc["model_id"] = m.model_id;
  doc["lexicon_digest"] = m.lexicon_digest;
  doc["corpus_digest"] = m.corpus_digest;
  doc["split_seed"] = m.split_seed;
  doc["policies"] = m.policies;
  doc["created_at"] = m.created_at;
  doc["updated_at"] = m.updated_at;
  doc["artifacts"] = m.artifacts;
  doc["stages"] = m.stages;
  return doc.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    raise(ErrorKind::MalformedFile, std::string("run manifest: ") + e.what());
  }
  RunManifest m;
  try {
    m.run_id = doc.value("run_id", "");
    m.config_digest = doc.value("config_digest", "");
    m.model_id = doc.value("model_id", "");
    m.lexicon_digest = doc.value("lexicon_digest", "");
    m.corpus_digest = doc.value("corpus_digest", "");
    m.split_seed = doc.value("split_seed", std::uint64_t{0});
    m.policies = doc.value("policies", std::vector<std::string>{});
    m.created_at = doc.value("created_at", "");
    m.updated_at = doc.value("updated_at", "");
    m.artifacts = doc.value("artifacts", std::map<std::string, std::string>{});
    m.stages = doc.value("stages", std::map<std::string, std::string>{});
  } catch (const json::exception& e) {
    raise(ErrorKind::MalformedFile, std::string("run manifest: ") + e.what());
  }
  return m;
}

void save_manifest(const RunManifest& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    raise(ErrorKind::FileMissing, "cannot write manifest '" + path + "'");
  }
  out << manifest_to_json(m);
}

RunManifest load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    raise(ErrorKind::FileMissing, "manifest '" + path + "' does not exist");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return manifest_from_json(buf.str());
}

std::string iso8601_utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

}  // namespace ogb::pipeline
