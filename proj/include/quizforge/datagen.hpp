#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "quizforge/core.hpp"
#include "quizforge/rng.hpp"

namespace quizforge {

// How the Dirichlet concentrations turn into per-MCQ labels.
enum class DirichletDraw {
  // One topic categorical and one level categorical per dataset; every MCQ
  // samples its labels from those two.
  kPerDataset,
  // Every MCQ draws its own topic and level categoricals and samples its
  // labels from them. Marginals are uniform for symmetric concentrations.
  kPerMcq,
};

struct DatasetSpec {
  std::size_t n_mcqs = 1500;
  std::size_t n_topics = 10;
  std::size_t n_levels = 5;
  double topic_concentration = 1.0;
  double level_concentration = 1.0;
  DirichletDraw draw = DirichletDraw::kPerDataset;
  std::uint64_t seed = 0;

  void validate() const;
};

// MCQs plus the dense vocabularies their indices refer to.
struct Dataset {
  std::vector<Mcq> mcqs;
  std::vector<std::string> topic_labels;
  std::vector<std::string> level_labels;
  // Categoricals drawn by generate_synthetic in kPerDataset mode; empty otherwise.
  std::vector<double> topic_categorical;
  std::vector<double> level_categorical;

  std::size_t n_topics() const { return topic_labels.size(); }
  std::size_t n_levels() const { return level_labels.size(); }
};

std::vector<double> sample_dirichlet(std::size_t dim, double concentration, Rng& rng);

Dataset generate_synthetic(const DatasetSpec& spec);

// Reads the `id,topic,difficulty,question,choice_a..choice_d,answer` schema.
// Only id, topic and difficulty are required; columns may come in any order.
// Labels are mapped to dense indices in sorted order (numeric when every
// label parses as a number).
Dataset load_dataset(const std::filesystem::path& path);
Dataset parse_dataset_csv(std::istream& in, const std::string& source_name = "<stream>");

void write_dataset_csv(const Dataset& dataset, std::ostream& out);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

// Keeps MCQs whose topic is in `topics`, re-indexing the survivors densely in
// ascending order of their original topic index.
Dataset filter_topics(const Dataset& pool, const std::set<std::size_t>& topics);

// `count` distinct topic indices drawn uniformly from [0, n_topics).
std::set<std::size_t> sample_topics(std::size_t n_topics, std::size_t count, Rng& rng);

std::string to_string(DirichletDraw draw);
DirichletDraw parse_dirichlet_draw(const std::string& text);

}  // namespace quizforge
