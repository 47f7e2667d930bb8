#include "laker/errors.hpp"

namespace laker {

std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NonFiniteInput: return "NonFiniteInput";
    case ErrorKind::NotScalar: return "NotScalar";
    case ErrorKind::GraphConsumed: return "GraphConsumed";
    case ErrorKind::InsufficientCandidates: return "InsufficientCandidates";
    case ErrorKind::EmptyCorpus: return "EmptyCorpus";
    case ErrorKind::BatchTooSmall: return "BatchTooSmall";
    case ErrorKind::UnknownConcept: return "UnknownConcept";
    case ErrorKind::EmptyGraph: return "EmptyGraph";
    case ErrorKind::BadSlot: return "BadSlot";
    case ErrorKind::UntrainedModel: return "UntrainedModel";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Error";
}

}  // namespace laker
