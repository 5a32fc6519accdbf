#include "quizforge/oracle.hpp"

#include <chrono>

#include "quizforge/errors.hpp"

namespace quizforge {

OracleResult oracle_best(const Universe& u, const TargetSpec& spec) {
  if (u.size() == 0) {
    throw Error(ErrorKind::kInvalidArgument, "oracle needs a non-empty universe");
  }
  spec.validate();
  const auto t0 = std::chrono::steady_clock::now();
  OracleResult best;
  best.match = -1.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double m = target_match(u.quiz(i), spec);
    if (m > best.match) {
      best.match = m;
      best.index = static_cast<QuizIndex>(i);
    }
    ++best.scan_count;
  }
  best.elapsed_sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return best;
}

}  // namespace quizforge
