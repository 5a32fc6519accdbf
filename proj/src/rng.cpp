#include "quizforge/rng.hpp"

#include <boost/random/discrete_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include "quizforge/errors.hpp"

namespace quizforge {

double Rng::uniform() {
  boost::random::uniform_01<double> dist;
  return dist(engine_);
}

std::size_t Rng::uniform_index(std::size_t n) {
  if (n == 0) {
    throw Error(ErrorKind::kInvalidArgument, "uniform_index over an empty range");
  }
  boost::random::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine_);
}

double Rng::normal(double mean, double stddev) {
  boost::random::normal_distribution<double> dist(mean, stddev);
  return dist(engine_);
}

double Rng::gamma(double shape) {
  if (!(shape > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "gamma shape must be positive");
  }
  boost::random::gamma_distribution<double> dist(shape, 1.0);
  return dist(engine_);
}

std::size_t Rng::categorical(std::span<const double> weights) {
  if (weights.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "categorical over no outcomes");
  }
  boost::random::discrete_distribution<std::size_t, double> dist(weights.begin(), weights.end());
  return dist(engine_);
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return mix64(mix64(base) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view key, std::uint64_t stream) {
  // FNV-1a over the key bytes.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : key) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return derive_seed(mix64(base ^ h), stream);
}

}  // namespace quizforge
