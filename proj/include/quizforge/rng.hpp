#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

#include <boost/random/mersenne_twister.hpp>

namespace quizforge {

// Seedable generator used everywhere randomness is needed. The engine is
// mt19937_64 and all distributions come from Boost.Random, whose algorithms
// are fixed in the headers, so streams are identical across platforms and
// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform();
  // Uniform integer in [0, n). Requires n > 0.
  std::size_t uniform_index(std::size_t n);
  double normal(double mean = 0.0, double stddev = 1.0);
  double gamma(double shape);
  // Index drawn with probability proportional to weights[i].
  std::size_t categorical(std::span<const double> weights);

 private:
  boost::random::mt19937_64 engine_;
};

// SplitMix64 finalizer; used to turn structured keys into independent seeds.
std::uint64_t mix64(std::uint64_t x);

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);
std::uint64_t derive_seed(std::uint64_t base, std::string_view key, std::uint64_t stream = 0);

}  // namespace quizforge
