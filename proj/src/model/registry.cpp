#include "ogb/model/registry.hpp"

#include <map>
#include <mutex>

#include "ogb/errors.hpp"
#include "ogb/model/encoder.hpp"
#include "ogb/model/mock.hpp"
#include "ogb/util/digest.hpp"

namespace ogb::model {

namespace {

constexpr std::size_t kDefaultUniformVocab = 32;

std::map<std::string, BackendFactory>& factories() {
  static std::map<std::string, BackendFactory> reg;
  return reg;
}

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

void ensure_builtins() {
  auto& reg = factories();
  if (!reg.empty()) return;
  reg["uniform"] = [](const std::string& arg) -> std::unique_ptr<MaskedModelBackend> {
    std::size_t vocab = kDefaultUniformVocab;
    if (!arg.empty()) {
      try {
        vocab = std::stoul(arg);
      } catch (const std::exception&) {
        raise(ErrorKind::UsageError, "uniform backend expects 'uniform[:V]', got vocab '" + arg + "'");
      }
    }
    return std::make_unique<UniformBackend>(vocab);
  };
  reg["tiny"] = [](const std::string& arg) -> std::unique_ptr<MaskedModelBackend> {
    if (arg.empty()) {
      raise(ErrorKind::UsageError, "tiny backend expects 'tiny:<checkpoint path>'");
    }
    return TinyEncoder::load(arg);
  };
}

std::pair<std::string, std::string> split_id(const std::string& id) {
  const auto colon = id.find(':');
  if (colon == std::string::npos) return {id, ""};
  return {id.substr(0, colon), id.substr(colon + 1)};
}

}  // namespace

void register_backend_scheme(const std::string& scheme, BackendFactory factory) {
  std::lock_guard lock(registry_mutex());
  ensure_builtins();
  factories()[scheme] = std::move(factory);
}

std::unique_ptr<MaskedModelBackend> create_backend(const std::string& id) {
  BackendFactory factory;
  std::string arg;
  {
    std::lock_guard lock(registry_mutex());
    ensure_builtins();
    auto [scheme, rest] = split_id(id);
    auto it = factories().find(scheme);
    if (it == factories().end()) {
      raise(ErrorKind::UsageError, "unknown model id '" + id + "'");
    }
    factory = it->second;
    arg = rest;
  }
  return factory(arg);
}

std::string backend_digest(const std::string& id) {
  auto [scheme, arg] = split_id(id);
  if (scheme == "tiny") {
    return digest::sha256_file(arg);
  }
  return digest::sha256_hex(id);
}

}  // namespace ogb::model
