#include "ogb/errors.hpp"

namespace ogb {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::FileMissing: return "FileMissing";
    case ErrorKind::MalformedFile: return "MalformedFile";
    case ErrorKind::SchemaViolation: return "SchemaViolation";
    case ErrorKind::EmptySection: return "EmptySection";
    case ErrorKind::MalformedRecord: return "MalformedRecord";
    case ErrorKind::MissingPlaceholder: return "MissingPlaceholder";
    case ErrorKind::DuplicatePlaceholder: return "DuplicatePlaceholder";
    case ErrorKind::TooFewProfessions: return "TooFewProfessions";
    case ErrorKind::EmptyCorpus: return "EmptyCorpus";
    case ErrorKind::AlignmentFailure: return "AlignmentFailure";
    case ErrorKind::EmptyTokenization: return "EmptyTokenization";
    case ErrorKind::ZeroProbability: return "ZeroProbability";
    case ErrorKind::MissingGenderClass: return "MissingGenderClass";
    case ErrorKind::ZeroBaseline: return "ZeroBaseline";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::UnclassifiableParameter: return "UnclassifiableParameter";
    case ErrorKind::BackendFailure: return "BackendFailure";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::UsageError: return "UsageError";
  }
  return "UnknownError";
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ConfigError:
    case ErrorKind::UsageError:
      return 1;
    case ErrorKind::FileMissing:
    case ErrorKind::MalformedFile:
    case ErrorKind::SchemaViolation:
    case ErrorKind::EmptySection:
    case ErrorKind::MalformedRecord:
    case ErrorKind::MissingPlaceholder:
    case ErrorKind::DuplicatePlaceholder:
    case ErrorKind::TooFewProfessions:
    case ErrorKind::EmptyCorpus:
    case ErrorKind::MissingGenderClass:
    case ErrorKind::ZeroBaseline:
    case ErrorKind::EmptyInput:
      return 2;
    case ErrorKind::AlignmentFailure:
    case ErrorKind::EmptyTokenization:
    case ErrorKind::ZeroProbability:
    case ErrorKind::UnclassifiableParameter:
    case ErrorKind::BackendFailure:
      return 3;
  }
  return 3;
}

}  // namespace ogb
