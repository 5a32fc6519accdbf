#include "quizforge/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "quizforge/errors.hpp"
#include "quizforge/rng.hpp"

namespace quizforge {

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& why) {
  throw Error(ErrorKind::kConfig, "config key '" + key + "': invalid value '" + value + "' (" +
                                      why + ")");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) {
    return "";
  }
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) {
      out.push_back(item);
    }
  }
  return out;
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    bad_value(key, text, "expected a number");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    bad_value(key, text, "expected a non-negative integer");
  }
  return v;
}

std::size_t parse_size(const std::string& key, const std::string& text) {
  return static_cast<std::size_t>(parse_u64(key, text));
}

std::vector<double> parse_doubles(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const std::string& item : split_list(text)) {
    out.push_back(parse_double(key, item));
  }
  return out;
}

std::vector<std::size_t> parse_sizes(const std::string& key, const std::string& text) {
  std::vector<std::size_t> out;
  for (const std::string& item : split_list(text)) {
    out.push_back(parse_size(key, item));
  }
  return out;
}

std::string fmt(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

template <typename T>
std::string join(const std::vector<T>& items, const std::function<std::string(const T&)>& f) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) {
      out += ",";
    }
    out += f(items[i]);
  }
  return out;
}

std::string join_doubles(const std::vector<double>& v) {
  return join<double>(v, [](const double& x) { return fmt(x); });
}

std::string join_sizes(const std::vector<std::size_t>& v) {
  return join<std::size_t>(v, [](const std::size_t& x) { return std::to_string(x); });
}

std::string join_strings(const std::vector<std::string>& v) {
  return join<std::string>(v, [](const std::string& x) { return x; });
}

template <typename F>
auto rethrow_as(const std::string& key, const std::string& value, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    bad_value(key, value, e.what());
  }
}

struct Entry {
  const char* key;
  std::function<void(Config&, const std::string& key, const std::string& value)> set;
  std::function<std::string(const Config&)> get;
};

struct DataEntry {
  const char* key;
  std::function<void(DataConfig&, const std::string& key, const std::string& value)> set;
  std::function<std::string(const DataConfig&)> get;
};

const std::vector<DataEntry>& data_entries() {
  static const std::vector<DataEntry> entries = {
      {"source",
       [](DataConfig& d, const std::string& k, const std::string& v) {
         const std::string t = trim(v);
         if (t != "synthetic" && t != "csv") bad_value(k, v, "expected synthetic or csv");
         d.source = t;
       },
       [](const DataConfig& d) { return d.source; }},
      {"path", [](DataConfig& d, const std::string&, const std::string& v) { d.path = trim(v); },
       [](const DataConfig& d) { return d.path.string(); }},
      {"n_mcqs",
       [](DataConfig& d, const std::string& k, const std::string& v) {
         d.synthetic.n_mcqs = parse_size(k, v);
       },
       [](const DataConfig& d) { return std::to_string(d.synthetic.n_mcqs); }},
      {"n_topics",
       [](DataConfig& d, const std::string& k, const std::string& v) {
         d.synthetic.n_topics = parse_size(k, v);
       },
       [](const DataConfig& d) { return std::to_string(d.synthetic.n_topics); }},
      {"n_levels",
       [](DataConfig& d, const std::string& k, const std::string& v) {
         d.synthetic.n_levels = parse_size(k, v);
       },
       [](const DataConfig& d) { return std::to_string(d.synthetic.n_levels); }},
      {"topic_concentration",
       [](DataConfig& d, const std::string& k, const std::string& v) {
         d.synthetic.topic_concentration = parse_double(k, v);
       },
       [](const DataConfig& d) { return fmt(d.synthetic.topic_concentration); }},
      {"level_concentration",
       [](DataConfig& d, const std::string& k, const std::string& v) {
         d.synthetic.level_concentration = parse_double(k, v);
       },
       [](const DataConfig& d) { return fmt(d.synthetic.level_concentration); }},
      {"draw",
       [](DataConfig& d, const std::string& k, const std::string& v) {
         d.synthetic.draw = rethrow_as(k, v, [&] { return parse_dirichlet_draw(trim(v)); });
       },
       [](const DataConfig& d) { return to_string(d.synthetic.draw); }},
      {"topic_subset",
       [](DataConfig& d, const std::string& k, const std::string& v) {
         d.topic_subset = parse_size(k, v);
       },
       [](const DataConfig& d) { return std::to_string(d.topic_subset); }},
      {"seed",
       [](DataConfig& d, const std::string& k, const std::string& v) {
         if (trim(v).empty()) {
           d.seed.reset();
         } else {
           d.seed = parse_u64(k, v);
         }
       },
       [](const DataConfig& d) { return d.seed ? std::to_string(*d.seed) : std::string(); }},
  };
  return entries;
}

#define QF_SIZE(name, field)                                                                 \
  {                                                                                          \
    name, [](Config& c, const std::string& k, const std::string& v) { field = parse_size(k, v); }, \
        [](const Config& c) { return std::to_string(field); }                                \
  }
#define QF_DOUBLE(name, field)                                                                 \
  {                                                                                            \
    name, [](Config& c, const std::string& k, const std::string& v) { field = parse_double(k, v); }, \
        [](const Config& c) { return fmt(field); }                                             \
  }
#define QF_PATH(name, field)                                                                  \
  {                                                                                           \
    name, [](Config& c, const std::string&, const std::string& v) { field = trim(v); },      \
        [](const Config& c) { return field.string(); }                                        \
  }

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      {"run.seed",
       [](Config& c, const std::string& k, const std::string& v) { c.seed = parse_u64(k, v); },
       [](const Config& c) { return std::to_string(c.seed); }},
      QF_PATH("run.out_dir", c.out_dir),

      QF_SIZE("env.quiz_size", c.quiz_size),
      QF_SIZE("env.universe_size", c.universe_size),
      QF_SIZE("env.max_steps", c.max_steps),
      {"env.reward",
       [](Config& c, const std::string& k, const std::string& v) {
         c.reward = rethrow_as(k, v, [&] { return parse_reward_scheme(trim(v)); });
       },
       [](const Config& c) { return to_string(c.reward); }},

      {"target.name",
       [](Config& c, const std::string& k, const std::string& v) {
         const std::string t = trim(v);
         if (t != "uniform" && t != "bias" && t != "bias_prime" && t != "custom") {
           bad_value(k, v, "expected uniform, bias, bias_prime or custom");
         }
         c.target = t;
       },
       [](const Config& c) { return c.target; }},
      {"target.tc",
       [](Config& c, const std::string& k, const std::string& v) { c.tc = parse_doubles(k, v); },
       [](const Config& c) { return join_doubles(c.tc); }},
      {"target.td",
       [](Config& c, const std::string& k, const std::string& v) { c.td = parse_doubles(k, v); },
       [](const Config& c) { return join_doubles(c.td); }},
      QF_DOUBLE("target.alpha", c.alpha),
      QF_DOUBLE("target.beta", c.beta),

      {"train.algorithm",
       [](Config& c, const std::string& k, const std::string& v) {
         c.algorithm = rethrow_as(k, v, [&] { return parse_algorithm(trim(v)); });
       },
       [](const Config& c) { return to_string(c.algorithm); }},
      QF_SIZE("train.episodes", c.train.episodes),
      QF_DOUBLE("train.gamma", c.train.gamma),
      QF_DOUBLE("train.eta", c.train.eta),
      QF_SIZE("train.batch_size", c.train.batch_size),
      QF_DOUBLE("train.epsilon_start", c.train.epsilon_start),
      QF_DOUBLE("train.epsilon_decay", c.train.epsilon_decay),
      QF_DOUBLE("train.epsilon_min", c.train.epsilon_min),
      QF_SIZE("train.target_sync_interval", c.train.target_sync_interval),
      QF_SIZE("train.replay_capacity", c.train.replay_capacity),
      QF_DOUBLE("train.per_alpha", c.train.per_alpha),
      QF_DOUBLE("train.per_beta_start", c.train.per_beta_start),
      QF_DOUBLE("train.per_epsilon", c.train.per_epsilon),
      QF_DOUBLE("train.entropy_coef", c.train.entropy_coef),
      QF_DOUBLE("train.value_coef", c.train.value_coef),
      QF_SIZE("train.workers", c.train.workers),
      {"train.optimizer",
       [](Config& c, const std::string& k, const std::string& v) {
         c.train.optimizer = rethrow_as(k, v, [&] { return parse_optimizer(trim(v)); });
       },
       [](const Config& c) { return to_string(c.train.optimizer); }},
      {"train.hidden",
       [](Config& c, const std::string& k, const std::string& v) {
         c.train.hidden = parse_sizes(k, v);
       },
       [](const Config& c) { return join_sizes(c.train.hidden); }},
      QF_SIZE("train.probe_states", c.train.probe_states),

      {"plan.datasets",
       [](Config& c, const std::string&, const std::string& v) {
         c.plan_datasets = split_list(v);
       },
       [](const Config& c) { return join_strings(c.plan_datasets); }},
      {"plan.targets",
       [](Config& c, const std::string&, const std::string& v) { c.plan_targets = split_list(v); },
       [](const Config& c) { return join_strings(c.plan_targets); }},
      {"plan.algorithms",
       [](Config& c, const std::string&, const std::string& v) {
         c.plan_algorithms = split_list(v);
       },
       [](const Config& c) { return join_strings(c.plan_algorithms); }},
      {"plan.alphas",
       [](Config& c, const std::string& k, const std::string& v) {
         c.plan_alphas = parse_doubles(k, v);
       },
       [](const Config& c) { return join_doubles(c.plan_alphas); }},
      QF_SIZE("plan.runs", c.plan_runs),

      QF_PATH("io.dataset", c.dataset_path),
      QF_PATH("io.universe", c.universe_path),
      QF_PATH("io.checkpoint", c.checkpoint_path),
      QF_PATH("io.source_checkpoint", c.source_checkpoint),
  };
  return table;
}

#undef QF_SIZE
#undef QF_DOUBLE
#undef QF_PATH

// Splits "data.NAME.key" into NAME and key.
bool split_named_data(const std::string& key, std::string& name, std::string& field) {
  if (key.rfind("data.", 0) != 0) {
    return false;
  }
  const std::string rest = key.substr(5);
  const auto dot = rest.rfind('.');
  if (dot == std::string::npos || dot == 0) {
    return false;
  }
  name = rest.substr(0, dot);
  field = rest.substr(dot + 1);
  return true;
}

bool set_data_field(DataConfig& d, const std::string& full_key, const std::string& field,
                    const std::string& value) {
  for (const DataEntry& e : data_entries()) {
    if (field == e.key) {
      e.set(d, full_key, value);
      return true;
    }
  }
  return false;
}

void append_data_section(std::ostringstream& out, const std::string& section, const DataConfig& d) {
  out << "[" << section << "]\n";
  for (const DataEntry& e : data_entries()) {
    out << e.key << " = " << e.get(d) << "\n";
  }
}

void check_data(const std::string& section, const DataConfig& d) {
  if (d.source == "csv" && d.path.empty()) {
    throw Error(ErrorKind::kConfig, "config key '" + section + ".path' is required for csv data");
  }
  if (d.source == "synthetic") {
    try {
      d.synthetic.validate();
    } catch (const Error& e) {
      throw Error(ErrorKind::kConfig, "config section [" + section + "]: " + e.what());
    }
  }
}

}  // namespace

void Config::set(const std::string& key, const std::string& value) {
  for (const Entry& e : entries()) {
    if (key == e.key) {
      e.set(*this, key, value);
      return;
    }
  }
  if (key.rfind("data.", 0) == 0) {
    const std::string field = key.substr(5);
    if (field.find('.') == std::string::npos) {
      if (set_data_field(data, key, field, value)) {
        return;
      }
    } else {
      std::string name;
      std::string sub;
      if (split_named_data(key, name, sub) && set_data_field(named_data[name], key, sub, value)) {
        return;
      }
    }
  }
  throw Error(ErrorKind::kConfig, "unknown config key '" + key + "'");
}

void Config::validate() const {
  auto fail = [](const std::string& key, const std::string& why) {
    throw Error(ErrorKind::kConfig, "config key '" + key + "': " + why);
  };
  check_data("data", data);
  for (const auto& [name, d] : named_data) {
    check_data("data." + name, d);
  }
  if (quiz_size == 0) fail("env.quiz_size", "must be positive");
  if (universe_size == 0) fail("env.universe_size", "must be positive");
  if (max_steps == 0) fail("env.max_steps", "must be positive");
  if (!(alpha >= 0.0 && alpha <= 1.0)) fail("target.alpha", "must lie in [0, 1]");
  if (!(beta > 0.0 && beta <= 1.0)) fail("target.beta", "must lie in (0, 1]");
  if (target == "custom" && (tc.empty() || td.empty())) {
    fail("target.tc", "custom targets need both target.tc and target.td");
  }
  try {
    train.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::kConfig, std::string("config section [train]: ") + e.what());
  }
  if (plan_runs == 0) fail("plan.runs", "must be at least 1");
  for (double a : plan_alphas) {
    if (!(a >= 0.0 && a <= 1.0)) fail("plan.alphas", "every alpha must lie in [0, 1]");
  }
  for (const std::string& a : plan_algorithms) {
    if (a != "oracle") {
      try {
        parse_algorithm(a);
      } catch (const Error&) {
        fail("plan.algorithms", "unknown algorithm '" + a + "'");
      }
    }
  }
  for (const std::string& t : plan_targets) {
    if (t != "uniform" && t != "bias" && t != "bias_prime" && t != "custom") {
      fail("plan.targets", "unknown target '" + t + "'");
    }
  }
  for (const std::string& d : plan_datasets) {
    if (d != "default" && named_data.find(d) == named_data.end()) {
      fail("plan.datasets", "no [data." + d + "] section for dataset '" + d + "'");
    }
  }
}

std::vector<std::string> Config::keys() {
  std::vector<std::string> out;
  for (const Entry& e : entries()) {
    out.emplace_back(e.key);
  }
  for (const DataEntry& e : data_entries()) {
    out.push_back(std::string("data.") + e.key);
  }
  return out;
}

std::string Config::to_ini() const {
  std::ostringstream out;
  std::string section;
  for (const Entry& e : entries()) {
    const std::string key = e.key;
    const auto dot = key.find('.');
    const std::string sec = key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) {
        out << "\n";
      }
      if (sec == "env") {
        append_data_section(out, "data", data);
        out << "\n";
      }
      out << "[" << sec << "]\n";
      section = sec;
    }
    out << key.substr(dot + 1) << " = " << e.get(*this) << "\n";
  }
  for (const auto& [name, d] : named_data) {
    out << "\n";
    append_data_section(out, "data." + name, d);
  }
  return out.str();
}

nlohmann::json Config::to_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const Entry& e : entries()) {
    j[e.key] = e.get(*this);
  }
  for (const DataEntry& e : data_entries()) {
    j[std::string("data.") + e.key] = e.get(data);
  }
  for (const auto& [name, d] : named_data) {
    for (const DataEntry& e : data_entries()) {
      j["data." + name + "." + e.key] = e.get(d);
    }
  }
  return nlohmann::json(j);
}

Config parse_config(std::istream& in, const std::string& source_name) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorKind::kConfig, source_name + ": " + e.message() + " (line " +
                                        std::to_string(e.line()) + ")");
  }
  Config cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw Error(ErrorKind::kConfig, source_name + ": key '" + section +
                                          "' must live inside a [section]");
    }
    for (const auto& [key, value] : body) {
      cfg.set(section + "." + key, value.data());
    }
  }
  return cfg;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::kIo, "cannot open config file " + path.string());
  }
  return parse_config(in, path.string());
}

void apply_env_overrides(Config& cfg) {
  if (const char* s = std::getenv("QUIZFORGE_SEED"); s != nullptr && *s != '\0') {
    cfg.seed = parse_u64("QUIZFORGE_SEED", s);
  }
}

TrainConfig train_config(const Config& cfg) {
  TrainConfig t = cfg.train;
  t.max_steps = cfg.max_steps;
  t.reward = cfg.reward;
  t.seed = derive_seed(cfg.seed, "train");
  return t;
}

EpisodeConfig episode_config(const Config& cfg) {
  EpisodeConfig e;
  e.max_steps = cfg.max_steps;
  e.beta = cfg.beta;
  e.reward = cfg.reward;
  e.gamma = cfg.train.gamma;
  return e;
}

TargetSpec make_target(const std::string& name, std::size_t n_topics, std::size_t n_levels,
                       double alpha, double beta, const std::vector<double>& tc,
                       const std::vector<double>& td) {
  TargetSpec spec;
  spec.alpha = alpha;
  spec.beta = beta;
  spec.td = uniform_distribution(n_levels);
  if (name == "uniform") {
    spec.tc = uniform_distribution(n_topics);
  } else if (name == "bias" || name == "bias_prime") {
    if (n_topics < 9) {
      throw Error(ErrorKind::kConfig, "target '" + name + "' needs at least 9 topics");
    }
    spec.tc.assign(n_topics, 0.0);
    spec.tc[5] = 0.5;
    spec.tc[8] = 0.5;
    if (name == "bias_prime") {
      // Fixed permutation of the biased coordinates onto a different support.
      Rng rng(derive_seed(0, "bias_prime"));
      std::vector<double> permuted;
      do {
        std::vector<std::size_t> order(n_topics);
        std::iota(order.begin(), order.end(), 0);
        for (std::size_t i = n_topics - 1; i > 0; --i) {
          std::swap(order[i], order[rng.uniform_index(i + 1)]);
        }
        permuted.assign(n_topics, 0.0);
        for (std::size_t i = 0; i < n_topics; ++i) {
          permuted[order[i]] = spec.tc[i];
        }
      } while (permuted == spec.tc);
      spec.tc = std::move(permuted);
    }
  } else if (name == "custom") {
    spec.tc = tc;
    spec.td = td;
  } else {
    throw Error(ErrorKind::kConfig, "unknown target '" + name + "'");
  }
  if (spec.tc.size() != n_topics || spec.td.size() != n_levels) {
    throw Error(ErrorKind::kConfig, "target '" + name + "' has " + std::to_string(spec.tc.size()) +
                                        "+" + std::to_string(spec.td.size()) +
                                        " entries, dataset has " + std::to_string(n_topics) + "+" +
                                        std::to_string(n_levels));
  }
  spec.validate();
  return spec;
}

TargetSpec target_from_config(const Config& cfg, std::size_t n_topics, std::size_t n_levels) {
  return make_target(cfg.target, n_topics, n_levels, cfg.alpha, cfg.beta, cfg.tc, cfg.td);
}

Dataset materialize_dataset(const DataConfig& data, std::uint64_t fallback_seed) {
  const std::uint64_t seed = data.seed.value_or(fallback_seed);
  Dataset ds;
  if (data.source == "csv") {
    ds = load_dataset(data.path);
  } else {
    DatasetSpec spec = data.synthetic;
    spec.seed = seed;
    ds = generate_synthetic(spec);
  }
  if (data.topic_subset > 0 && data.topic_subset < ds.n_topics()) {
    Rng rng(derive_seed(seed, "topics"));
    ds = filter_topics(ds, sample_topics(ds.n_topics(), data.topic_subset, rng));
  }
  return ds;
}

}  // namespace quizforge
