#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "quizforge/agents.hpp"
#include "quizforge/datagen.hpp"
#include "quizforge/environment.hpp"

namespace quizforge {

// Where a dataset comes from.
struct DataConfig {
  // "synthetic" or "csv".
  std::string source = "synthetic";
  std::filesystem::path path;
  DatasetSpec synthetic;
  // Keep only a random subset of this many topics (0 keeps all).
  std::size_t topic_subset = 0;
  // Generation/subsetting seed; derived from the run seed when unset.
  std::optional<std::uint64_t> seed;
};

// Every tunable of the toolkit. Files use INI syntax; see README for keys.
struct Config {
  std::uint64_t seed = 0;

  DataConfig data;
  // Extra datasets for experiment plans, from [data.NAME] sections.
  std::map<std::string, DataConfig> named_data;

  std::size_t quiz_size = 10;
  std::size_t universe_size = 10000;
  std::size_t max_steps = 100;
  RewardScheme reward = RewardScheme::kR2;

  // uniform, bias, bias_prime or custom (tc/td given explicitly).
  std::string target = "uniform";
  std::vector<double> tc;
  std::vector<double> td;
  double alpha = 0.5;
  double beta = 0.85;

  Algorithm algorithm = Algorithm::kDqn;
  TrainConfig train;

  std::vector<std::string> plan_datasets;
  std::vector<std::string> plan_targets = {"uniform"};
  std::vector<std::string> plan_algorithms = {"dqn", "oracle"};
  std::vector<double> plan_alphas = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::size_t plan_runs = 10;

  std::filesystem::path dataset_path;
  std::filesystem::path universe_path;
  std::filesystem::path checkpoint_path;
  std::filesystem::path source_checkpoint;
  std::filesystem::path out_dir = "out";

  // Sets one "section.key" entry from text. Throws Config naming the key.
  void set(const std::string& key, const std::string& value);
  // Cross-field checks. Throws Config naming the offending key.
  void validate() const;

  // Effective configuration as INI text and as JSON (for artifact headers).
  std::string to_ini() const;
  nlohmann::json to_json() const;

  // All recognised keys in the order they are echoed.
  static std::vector<std::string> keys();
};

Config parse_config(std::istream& in, const std::string& source_name = "<stream>");
Config load_config(const std::filesystem::path& path);
// QUIZFORGE_SEED, when set, replaces run.seed.
void apply_env_overrides(Config& cfg);

// TrainConfig with the run seed folded in.
TrainConfig train_config(const Config& cfg);
EpisodeConfig episode_config(const Config& cfg);

// Named target for a (topics, levels) shape. Knows uniform, bias and
// bias_prime; custom reads cfg.tc/cfg.td.
TargetSpec make_target(const std::string& name, std::size_t n_topics, std::size_t n_levels,
                       double alpha, double beta, const std::vector<double>& tc = {},
                       const std::vector<double>& td = {});
TargetSpec target_from_config(const Config& cfg, std::size_t n_topics, std::size_t n_levels);

// Builds the dataset a DataConfig describes (generation or CSV load plus
// optional topic subsetting). `fallback_seed` is used when data.seed is unset.
Dataset materialize_dataset(const DataConfig& data, std::uint64_t fallback_seed);

}  // namespace quizforge
