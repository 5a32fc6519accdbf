#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "quizforge/rng.hpp"

namespace quizforge {

enum class HeadKind : std::uint32_t {
  // One linear output per action.
  kQ = 0,
  // Softmax policy over the actions plus a scalar state value.
  kActorCritic = 1,
};

struct NetworkSpec {
  std::size_t input_dim = 15;
  std::vector<std::size_t> hidden = {64, 64};
  HeadKind head = HeadKind::kQ;
  std::size_t n_actions = 4;
  bool bias = true;

  void validate() const;
  // Raw outputs of the final linear layer: n_actions, plus one for the value.
  std::size_t output_dim() const { return n_actions + (head == HeadKind::kActorCritic ? 1 : 0); }
  std::size_t param_count() const;

  bool operator==(const NetworkSpec&) const = default;
};

// Flat parameters. Layout per layer: weights (out x in, row-major) then biases.
struct ParamSet {
  NetworkSpec spec;
  std::vector<double> values;
  std::uint64_t version = 0;
  // Free-form label stored in checkpoints (e.g. the training algorithm).
  std::string tag;
};

ParamSet init_params(const NetworkSpec& spec, Rng& rng);
ParamSet zero_params(const NetworkSpec& spec);

struct HeadOutput {
  // Final-layer outputs: Q-values, or policy logits followed by the value.
  std::vector<double> raw;
  // Actor-critic only.
  std::vector<double> probs;
  double value = 0.0;

  std::span<const double> q() const { return {raw.data(), raw.size()}; }
};

// Throws NonFiniteInput on NaN/inf input or a dimension mismatch.
HeadOutput forward(const ParamSet& params, std::span<const double> input);

// Forward pass that keeps every layer input for a later backward_from().
struct ForwardPass {
  HeadOutput out;
  std::vector<std::vector<double>> layer_inputs;
};
ForwardPass forward_pass(const ParamSet& params, std::span<const double> input);
// Accumulates dLoss/dparams into `grad` from a cached pass.
void backward_from(const ParamSet& params, const ForwardPass& pass,
                   std::span<const double> loss_grad, std::span<double> grad);

// Gradient of the loss w.r.t. every parameter, given dLoss/d(raw outputs).
// Throws NonFiniteGradient if the result contains NaN/inf.
std::vector<double> backward(const ParamSet& params, std::span<const double> input,
                             std::span<const double> loss_grad);
// Accumulating form used by batched updates.
void backward_accumulate(const ParamSet& params, std::span<const double> input,
                         std::span<const double> loss_grad, std::span<double> grad);

std::vector<double> softmax(std::span<const double> logits);
// d/dlogits of -log softmax(logits)[label].
std::vector<double> softmax_cross_entropy_grad(std::span<const double> probs, std::size_t label);

// Plain gradient descent: values -= eta * grad; bumps the version counter.
void apply_update(ParamSet& params, std::span<const double> grad, double eta);

enum class OptimizerKind { kSgd, kAdam };

std::string to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(const std::string& text);

class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate, std::size_t n_params);

  void step(ParamSet& params, std::span<const double> grad);
  // Same arithmetic as step(), but every element read/write on the shared
  // buffers is a relaxed atomic access, so concurrent callers race benignly.
  // Returns the version number this update produced.
  std::uint64_t step_shared(ParamSet& params, std::span<const double> grad);

  OptimizerKind kind() const { return kind_; }
  double learning_rate() const { return lr_; }

 private:
  OptimizerKind kind_;
  double lr_;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double epsilon_ = 1e-8;
  std::vector<double> m_;
  std::vector<double> v_;
  std::uint64_t t_ = 0;
};

void save_params(const ParamSet& params, std::ostream& out);
void save_params(const ParamSet& params, const std::filesystem::path& path);
ParamSet load_params(std::istream& in);
ParamSet load_params(const std::filesystem::path& path);

}  // namespace quizforge
