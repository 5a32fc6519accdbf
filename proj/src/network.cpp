#include "quizforge/network.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "quizforge/errors.hpp"

namespace quizforge {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint encoding assumes a little-endian host");

constexpr char kMagic[8] = {'Q', 'F', 'N', 'E', 'T', '\0', '\0', '\1'};
constexpr std::uint32_t kFormatVersion = 1;

struct LayerShape {
  std::size_t in;
  std::size_t out;
  std::size_t offset;  // start of weights; biases follow at offset + in * out
};

std::vector<LayerShape> layer_shapes(const NetworkSpec& spec) {
  std::vector<LayerShape> shapes;
  std::size_t in = spec.input_dim;
  std::size_t offset = 0;
  auto add = [&](std::size_t out) {
    shapes.push_back({in, out, offset});
    offset += in * out + (spec.bias ? out : 0);
    in = out;
  };
  for (std::size_t w : spec.hidden) {
    add(w);
  }
  add(spec.output_dim());
  return shapes;
}

// Fills pass.layer_inputs and pass.out.raw.
void run_forward(const ParamSet& params, std::span<const double> input, ForwardPass& pass) {
  const auto shapes = layer_shapes(params.spec);
  const double* p = params.values.data();
  pass.layer_inputs.clear();
  pass.layer_inputs.reserve(shapes.size());
  std::vector<double> x(input.begin(), input.end());
  for (std::size_t l = 0; l < shapes.size(); ++l) {
    const LayerShape& s = shapes[l];
    const double* w = p + s.offset;
    const double* b = p + s.offset + s.in * s.out;
    std::vector<double> y(s.out);
    for (std::size_t o = 0; o < s.out; ++o) {
      double acc = params.spec.bias ? b[o] : 0.0;
      const double* row = w + o * s.in;
      for (std::size_t i = 0; i < s.in; ++i) {
        acc += row[i] * x[i];
      }
      // ReLU on hidden layers only.
      y[o] = (l + 1 < shapes.size()) ? std::max(acc, 0.0) : acc;
    }
    pass.layer_inputs.push_back(std::move(x));
    x = std::move(y);
  }
  pass.out.raw = std::move(x);
}

void check_input(const ParamSet& params, std::span<const double> input) {
  if (input.size() != params.spec.input_dim) {
    throw Error(ErrorKind::kNonFiniteInput, "input has " + std::to_string(input.size()) +
                                                " entries, network expects " +
                                                std::to_string(params.spec.input_dim));
  }
  for (double x : input) {
    if (!std::isfinite(x)) {
      throw Error(ErrorKind::kNonFiniteInput, "network input contains NaN or inf");
    }
  }
}

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) {
    throw Error(ErrorKind::kParseError, "checkpoint is truncated");
  }
  return v;
}

}  // namespace

void NetworkSpec::validate() const {
  if (input_dim < 2) {
    throw Error(ErrorKind::kInvalidArgument, "network input_dim must be at least 2");
  }
  if (n_actions == 0) {
    throw Error(ErrorKind::kInvalidArgument, "network needs at least one action");
  }
  for (std::size_t w : hidden) {
    if (w == 0) {
      throw Error(ErrorKind::kInvalidArgument, "hidden layer widths must be at least 1");
    }
  }
}

std::size_t NetworkSpec::param_count() const {
  const auto shapes = layer_shapes(*this);
  const LayerShape& last = shapes.back();
  return last.offset + last.in * last.out + (bias ? last.out : 0);
}

ParamSet zero_params(const NetworkSpec& spec) {
  spec.validate();
  ParamSet p;
  p.spec = spec;
  p.values.assign(spec.param_count(), 0.0);
  return p;
}

ParamSet init_params(const NetworkSpec& spec, Rng& rng) {
  ParamSet p = zero_params(spec);
  for (const LayerShape& s : layer_shapes(spec)) {
    // He-style uniform fan-in scaling; biases start at zero.
    const double bound = std::sqrt(6.0 / static_cast<double>(s.in));
    for (std::size_t i = 0; i < s.in * s.out; ++i) {
      p.values[s.offset + i] = (2.0 * rng.uniform() - 1.0) * bound;
    }
  }
  return p;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (double& v : out) {
    v /= sum;
  }
  return out;
}

std::vector<double> softmax_cross_entropy_grad(std::span<const double> probs, std::size_t label) {
  std::vector<double> g(probs.begin(), probs.end());
  g.at(label) -= 1.0;
  return g;
}

ForwardPass forward_pass(const ParamSet& params, std::span<const double> input) {
  check_input(params, input);
  ForwardPass pass;
  run_forward(params, input, pass);
  if (params.spec.head == HeadKind::kActorCritic) {
    const std::size_t na = params.spec.n_actions;
    pass.out.probs = softmax(std::span<const double>(pass.out.raw.data(), na));
    pass.out.value = pass.out.raw[na];
  }
  return pass;
}

HeadOutput forward(const ParamSet& params, std::span<const double> input) {
  return forward_pass(params, input).out;
}

void backward_accumulate(const ParamSet& params, std::span<const double> input,
                         std::span<const double> loss_grad, std::span<double> grad) {
  backward_from(params, forward_pass(params, input), loss_grad, grad);
}

void backward_from(const ParamSet& params, const ForwardPass& pass,
                   std::span<const double> loss_grad, std::span<double> grad) {
  if (loss_grad.size() != params.spec.output_dim() || grad.size() != params.values.size()) {
    throw Error(ErrorKind::kInvalidArgument, "backward: gradient buffer shape mismatch");
  }
  const auto shapes = layer_shapes(params.spec);
  const double* p = params.values.data();
  std::vector<double> g(loss_grad.begin(), loss_grad.end());
  for (std::size_t l = shapes.size(); l-- > 0;) {
    const LayerShape& s = shapes[l];
    const std::vector<double>& x = pass.layer_inputs[l];
    const double* w = p + s.offset;
    double* gw = grad.data() + s.offset;
    double* gb = grad.data() + s.offset + s.in * s.out;
    std::vector<double> gx(s.in, 0.0);
    for (std::size_t o = 0; o < s.out; ++o) {
      const double go = g[o];
      if (go == 0.0) {
        continue;
      }
      if (params.spec.bias) {
        gb[o] += go;
      }
      const double* row = w + o * s.in;
      double* grow = gw + o * s.in;
      for (std::size_t i = 0; i < s.in; ++i) {
        grow[i] += go * x[i];
        gx[i] += go * row[i];
      }
    }
    if (l > 0) {
      // x is the ReLU output of the previous layer; zero entries had no slope.
      for (std::size_t i = 0; i < s.in; ++i) {
        if (x[i] <= 0.0) {
          gx[i] = 0.0;
        }
      }
    }
    g = std::move(gx);
  }
}

std::vector<double> backward(const ParamSet& params, std::span<const double> input,
                             std::span<const double> loss_grad) {
  std::vector<double> grad(params.values.size(), 0.0);
  backward_accumulate(params, input, loss_grad, grad);
  for (double v : grad) {
    if (!std::isfinite(v)) {
      throw Error(ErrorKind::kNonFiniteGradient, "gradient contains NaN or inf");
    }
  }
  return grad;
}

void apply_update(ParamSet& params, std::span<const double> grad, double eta) {
  if (grad.size() != params.values.size()) {
    throw Error(ErrorKind::kInvalidArgument, "apply_update: gradient shape mismatch");
  }
  for (std::size_t i = 0; i < grad.size(); ++i) {
    params.values[i] -= eta * grad[i];
  }
  ++params.version;
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::kSgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer(const std::string& text) {
  if (text == "sgd") {
    return OptimizerKind::kSgd;
  }
  if (text == "adam") {
    return OptimizerKind::kAdam;
  }
  throw Error(ErrorKind::kInvalidArgument, "optimizer must be 'sgd' or 'adam', got '" + text + "'");
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate, std::size_t n_params)
    : kind_(kind), lr_(learning_rate) {
  if (!(learning_rate >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "learning rate must be non-negative");
  }
  if (kind_ == OptimizerKind::kAdam) {
    m_.assign(n_params, 0.0);
    v_.assign(n_params, 0.0);
  }
}

void Optimizer::step(ParamSet& params, std::span<const double> grad) {
  if (grad.size() != params.values.size()) {
    throw Error(ErrorKind::kInvalidArgument, "optimizer: gradient shape mismatch");
  }
  if (kind_ == OptimizerKind::kSgd) {
    apply_update(params, grad, lr_);
    return;
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < grad.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params.values[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + epsilon_);
  }
  ++params.version;
}

std::uint64_t Optimizer::step_shared(ParamSet& params, std::span<const double> grad) {
  if (grad.size() != params.values.size()) {
    throw Error(ErrorKind::kInvalidArgument, "optimizer: gradient shape mismatch");
  }
  constexpr auto relaxed = std::memory_order_relaxed;
  if (kind_ == OptimizerKind::kSgd) {
    for (std::size_t i = 0; i < grad.size(); ++i) {
      std::atomic_ref<double> w(params.values[i]);
      w.store(w.load(relaxed) - lr_ * grad[i], relaxed);
    }
  } else {
    const std::uint64_t t = std::atomic_ref<std::uint64_t>(t_).fetch_add(1, relaxed) + 1;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t));
    for (std::size_t i = 0; i < grad.size(); ++i) {
      std::atomic_ref<double> m(m_[i]);
      std::atomic_ref<double> v(v_[i]);
      std::atomic_ref<double> w(params.values[i]);
      const double mi = beta1_ * m.load(relaxed) + (1.0 - beta1_) * grad[i];
      const double vi = beta2_ * v.load(relaxed) + (1.0 - beta2_) * grad[i] * grad[i];
      m.store(mi, relaxed);
      v.store(vi, relaxed);
      w.store(w.load(relaxed) - lr_ * (mi / c1) / (std::sqrt(vi / c2) + epsilon_), relaxed);
    }
  }
  return std::atomic_ref<std::uint64_t>(params.version).fetch_add(1, std::memory_order_acq_rel) +
         1;
}

void save_params(const ParamSet& params, std::ostream& out) {
  const NetworkSpec& s = params.spec;
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kFormatVersion);
  write_pod(out, static_cast<std::uint32_t>(s.head));
  write_pod(out, static_cast<std::uint64_t>(s.input_dim));
  write_pod(out, static_cast<std::uint64_t>(s.n_actions));
  write_pod(out, static_cast<std::uint8_t>(s.bias ? 1 : 0));
  write_pod(out, static_cast<std::uint64_t>(s.hidden.size()));
  for (std::size_t w : s.hidden) {
    write_pod(out, static_cast<std::uint64_t>(w));
  }
  write_pod(out, static_cast<std::uint64_t>(params.tag.size()));
  out.write(params.tag.data(), static_cast<std::streamsize>(params.tag.size()));
  write_pod(out, params.version);
  write_pod(out, static_cast<std::uint64_t>(params.values.size()));
  out.write(reinterpret_cast<const char*>(params.values.data()),
            static_cast<std::streamsize>(params.values.size() * sizeof(double)));
  if (!out) {
    throw Error(ErrorKind::kIo, "failed writing checkpoint");
  }
}

void save_params(const ParamSet& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorKind::kIo, "cannot write checkpoint " + path.string());
  }
  save_params(params, out);
}

ParamSet load_params(std::istream& in) {
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorKind::kParseError, "not a quizforge checkpoint");
  }
  if (read_pod<std::uint32_t>(in) != kFormatVersion) {
    throw Error(ErrorKind::kParseError, "unsupported checkpoint version");
  }
  ParamSet p;
  const auto head = read_pod<std::uint32_t>(in);
  if (head > 1) {
    throw Error(ErrorKind::kParseError, "unknown head kind in checkpoint");
  }
  p.spec.head = static_cast<HeadKind>(head);
  p.spec.input_dim = read_pod<std::uint64_t>(in);
  p.spec.n_actions = read_pod<std::uint64_t>(in);
  p.spec.bias = read_pod<std::uint8_t>(in) != 0;
  const auto n_hidden = read_pod<std::uint64_t>(in);
  if (n_hidden > 64) {
    throw Error(ErrorKind::kParseError, "implausible layer count in checkpoint");
  }
  p.spec.hidden.resize(n_hidden);
  for (auto& w : p.spec.hidden) {
    w = read_pod<std::uint64_t>(in);
  }
  p.spec.validate();
  const auto tag_len = read_pod<std::uint64_t>(in);
  if (tag_len > 4096) {
    throw Error(ErrorKind::kParseError, "implausible tag length in checkpoint");
  }
  p.tag.resize(tag_len);
  in.read(p.tag.data(), static_cast<std::streamsize>(tag_len));
  p.version = read_pod<std::uint64_t>(in);
  const auto count = read_pod<std::uint64_t>(in);
  if (count != p.spec.param_count()) {
    throw Error(ErrorKind::kParseError, "checkpoint parameter count disagrees with its header");
  }
  p.values.resize(count);
  in.read(reinterpret_cast<char*>(p.values.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) {
    throw Error(ErrorKind::kParseError, "checkpoint is truncated");
  }
  for (double v : p.values) {
    if (!std::isfinite(v)) {
      throw Error(ErrorKind::kParseError, "checkpoint holds non-finite parameters");
    }
  }
  return p;
}

ParamSet load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::kIo, "cannot open checkpoint " + path.string());
  }
  return load_params(in);
}

}  // namespace quizforge
