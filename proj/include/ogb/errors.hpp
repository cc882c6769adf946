#pragma once

#include <stdexcept>
#include <string>

namespace ogb {

// Every failure the library reports carries one of these kinds so callers
// (and the CLI exit-code mapping) can react without parsing messages.
enum class ErrorKind {
  // file / schema
  FileMissing,
  MalformedFile,
  SchemaViolation,
  EmptySection,
  MalformedRecord,
  // template validation
  MissingPlaceholder,
  DuplicatePlaceholder,
  // corpus
  TooFewProfessions,
  EmptyCorpus,
  // scoring
  AlignmentFailure,
  EmptyTokenization,
  ZeroProbability,
  // metrics
  MissingGenderClass,
  ZeroBaseline,
  EmptyInput,
  // trainer / model
  UnclassifiableParameter,
  BackendFailure,
  // pipeline
  ConfigError,
  UsageError,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

// CLI exit-code discipline: 1 usage/config, 2 data, 3 backend/training.
int exit_code_for(ErrorKind kind);

}  // namespace ogb
