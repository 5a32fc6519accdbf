#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace quizforge {

enum class ErrorKind {
  kZeroVector,
  kSizeMismatch,
  kDuplicateMcq,
  kParseError,
  kUnknownColumn,
  kEmptyDataset,
  kEmptyResult,
  kInsufficientPool,
  kNoCandidates,
  kNonFiniteInput,
  kNonFiniteGradient,
  kNonFiniteLoss,
  kWorkerPanic,
  kDimensionMismatch,
  kEmptyWindow,
  kInvalidArgument,
  kConfig,
  kIo,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace quizforge
