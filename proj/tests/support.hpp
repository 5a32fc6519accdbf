#pragma once

// Independent reference implementations used as test oracles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include <limits>

#include "quizforge/environment.hpp"
#include "quizforge/network.hpp"
#include "quizforge/rng.hpp"

namespace qf_test {

using quizforge::Action;
using quizforge::QuizIndex;
using quizforge::Universe;

inline std::vector<std::int64_t> counts_of(const std::vector<double>& props, std::size_t k) {
  std::vector<std::int64_t> c;
  for (double p : props) c.push_back(std::llround(p * static_cast<double>(k)));
  return c;
}

// cos^2 as an exact fraction num/den over integer label counts.
struct Frac {
  __int128 num;
  __int128 den;
};

inline Frac cos2(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b) {
  __int128 dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<__int128>(a[i]) * b[i];
    na += static_cast<__int128>(a[i]) * a[i];
    nb += static_cast<__int128>(b[i]) * b[i];
  }
  return {dot * dot, na * nb};
}

inline bool less(const Frac& x, const Frac& y) { return x.num * y.den < y.num * x.den; }
inline bool equal(const Frac& x, const Frac& y) { return x.num * y.den == y.num * x.den; }

inline std::vector<std::int64_t> full_counts(const Universe& u, std::size_t i) {
  auto t = counts_of(u.quiz(i).topic_vec, u.k());
  auto l = counts_of(u.quiz(i).diff_vec, u.k());
  t.insert(t.end(), l.begin(), l.end());
  return t;
}

// Rank every other quiz by exact sub-vector cosine, drop near-duplicates
// (full-state cosine > 0.95, i.e. cos^2 > 0.9025) and keep the first 25.
inline std::vector<QuizIndex> brute_force_candidates(const Universe& u, std::size_t cur,
                                                     Action a) {
  const bool topic = a == Action::kSimTopic || a == Action::kDissTopic;
  const bool sim = a == Action::kSimTopic || a == Action::kSimLevel;
  auto sub = [&](std::size_t i) {
    return counts_of(topic ? u.quiz(i).topic_vec : u.quiz(i).diff_vec, u.k());
  };
  const auto cur_sub = sub(cur);
  const auto cur_full = full_counts(u, cur);
  const Frac limit{9025, 10000};
  std::vector<std::pair<Frac, QuizIndex>> scored;
  for (std::size_t j = 0; j < u.size(); ++j) {
    if (j == cur) continue;
    if (less(limit, cos2(cur_full, full_counts(u, j)))) continue;
    scored.push_back({cos2(cur_sub, sub(j)), static_cast<QuizIndex>(j)});
  }
  std::sort(scored.begin(), scored.end(), [&](const auto& x, const auto& y) {
    if (!equal(x.first, y.first)) return sim ? less(y.first, x.first) : less(x.first, y.first);
    return x.second < y.second;
  });
  std::vector<QuizIndex> out;
  for (std::size_t i = 0; i < scored.size() && i < quizforge::kCandidatePoolSize; ++i) {
    out.push_back(scored[i].second);
  }
  return out;
}

// Plain floating-point cosine, written independently of the library.
inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / std::sqrt(na * nb);
}

// Forward pass written directly from the flat layout (W out x in, then b).
// Also reports the smallest |pre-activation| of any hidden unit.
inline std::vector<double> reference_forward(const quizforge::ParamSet& p,
                                             const std::vector<double>& input,
                                             double* min_abs_pre = nullptr) {
  std::vector<std::size_t> widths = {p.spec.input_dim};
  for (auto h : p.spec.hidden) widths.push_back(h);
  widths.push_back(p.spec.output_dim());
  std::vector<double> x = input;
  std::size_t off = 0;
  double kink = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t in = widths[l], out = widths[l + 1];
    std::vector<double> y(out, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      double z = 0.0;
      for (std::size_t i = 0; i < in; ++i) z += p.values[off + o * in + i] * x[i];
      if (p.spec.bias) z += p.values[off + in * out + o];
      const bool hidden = l + 2 < widths.size();
      if (hidden) kink = std::min(kink, std::abs(z));
      y[o] = hidden ? (z > 0 ? z : 0.0) : z;
    }
    off += in * out + (p.spec.bias ? out : 0);
    x = y;
  }
  if (min_abs_pre) *min_abs_pre = kink;
  return x;
}

struct GradCheck {
  std::size_t probes = 0;
  std::size_t entries = 0;
  // Probes discarded because an input sat within 1e-3 of a ReLU kink.
  std::size_t redraws = 0;
  double worst_rel = 0.0;
};

// Central differences (h = 1e-5) of a random linear functional of the raw
// outputs against backward(), on `probes` random (params, input) pairs.
// Every `stride`-th parameter is compared, from a random offset.
inline GradCheck gradient_check(const quizforge::NetworkSpec& spec, std::size_t probes,
                                std::size_t stride, std::uint64_t seed) {
  quizforge::Rng rng(seed);
  const double h = 1e-5;
  GradCheck res;
  auto loss = [](const quizforge::ParamSet& p, const std::vector<double>& x,
                 const std::vector<double>& c) {
    const auto out = reference_forward(p, x);
    double s = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k) s += c[k] * out[k];
    return s;
  };
  while (res.probes < probes) {
    quizforge::ParamSet p = quizforge::init_params(spec, rng);
    for (double& v : p.values) v += 0.1 * (rng.uniform() - 0.5);
    std::vector<double> x(spec.input_dim);
    for (double& v : x) v = rng.uniform();
    double kink = 0.0;
    reference_forward(p, x, &kink);
    if (kink < 1e-3) {
      ++res.redraws;
      continue;
    }
    std::vector<double> c(spec.output_dim());
    for (double& v : c) v = 2.0 * rng.uniform() - 1.0;
    const auto g = quizforge::backward(p, x, c);
    for (std::size_t i = rng.uniform_index(stride); i < p.values.size(); i += stride) {
      quizforge::ParamSet a = p, b = p;
      a.values[i] += h;
      b.values[i] -= h;
      const double fd = (loss(a, x, c) - loss(b, x, c)) / (2 * h);
      const double denom = std::max({std::abs(fd), std::abs(g[i]), 1e-6});
      res.worst_rel = std::max(res.worst_rel, std::abs(fd - g[i]) / denom);
      ++res.entries;
    }
    ++res.probes;
  }
  return res;
}

}  // namespace qf_test
