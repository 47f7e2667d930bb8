#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace laker {

enum class ErrorKind {
  ParseError,
  ValidationError,
  ShapeMismatch,
  NonFiniteInput,
  NotScalar,
  GraphConsumed,
  InsufficientCandidates,
  EmptyCorpus,
  BatchTooSmall,
  UnknownConcept,
  EmptyGraph,
  BadSlot,
  UntrainedModel,
  IoError,
  ConfigError,
};

std::string_view error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::string_view kind_name() const noexcept { return error_kind_name(kind_); }

 private:
  ErrorKind kind_;
};

}  // namespace laker
