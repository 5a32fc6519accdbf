#include "quizforge/errors.hpp"

namespace quizforge {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kZeroVector: return "ZeroVector";
    case ErrorKind::kSizeMismatch: return "SizeMismatch";
    case ErrorKind::kDuplicateMcq: return "DuplicateMcq";
    case ErrorKind::kParseError: return "ParseError";
    case ErrorKind::kUnknownColumn: return "UnknownColumn";
    case ErrorKind::kEmptyDataset: return "EmptyDataset";
    case ErrorKind::kEmptyResult: return "EmptyResult";
    case ErrorKind::kInsufficientPool: return "InsufficientPool";
    case ErrorKind::kNoCandidates: return "NoCandidates";
    case ErrorKind::kNonFiniteInput: return "NonFiniteInput";
    case ErrorKind::kNonFiniteGradient: return "NonFiniteGradient";
    case ErrorKind::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::kWorkerPanic: return "WorkerPanic";
    case ErrorKind::kDimensionMismatch: return "DimensionMismatch";
    case ErrorKind::kEmptyWindow: return "EmptyWindow";
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kConfig: return "ConfigError";
    case ErrorKind::kIo: return "IoError";
  }
  return "Unknown";
}

}  // namespace quizforge
