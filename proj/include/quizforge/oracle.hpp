#pragma once

#include <cstddef>

#include "quizforge/core.hpp"
#include "quizforge/environment.hpp"

namespace quizforge {

struct OracleResult {
  QuizIndex index = 0;
  double match = 0.0;
  // Quizzes examined; always the universe size.
  std::size_t scan_count = 0;
  double elapsed_sec = 0.0;
};

// Exhaustive linear scan for the best-matching quiz. Ties go to the lowest index.
OracleResult oracle_best(const Universe& u, const TargetSpec& spec);

}  // namespace quizforge
