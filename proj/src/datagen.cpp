#include "quizforge/datagen.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <unordered_set>

#include "csv_util.hpp"
#include "quizforge/errors.hpp"

namespace quizforge {

namespace {

const std::vector<std::string> kColumns = {"id",       "topic",    "difficulty",
                                           "question", "choice_a", "choice_b",
                                           "choice_c", "choice_d", "answer"};

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) {
    return "";
  }
  auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::optional<double> as_number(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    return std::nullopt;
  }
  return v;
}

// Dense index per distinct label; numeric order when all labels are numbers.
std::vector<std::string> ordered_vocabulary(const std::vector<std::string>& raw) {
  std::vector<std::string> labels(raw);
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  bool numeric = std::all_of(labels.begin(), labels.end(),
                             [](const std::string& s) { return as_number(s).has_value(); });
  if (numeric) {
    std::stable_sort(labels.begin(), labels.end(), [](const std::string& a, const std::string& b) {
      return *as_number(a) < *as_number(b);
    });
  }
  return labels;
}

}  // namespace

void DatasetSpec::validate() const {
  if (n_mcqs == 0 || n_topics == 0 || n_levels == 0) {
    throw Error(ErrorKind::kInvalidArgument, "dataset needs at least one mcq, topic and level");
  }
  if (!(topic_concentration > 0.0) || !(level_concentration > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "Dirichlet concentrations must be positive");
  }
}

std::vector<double> sample_dirichlet(std::size_t dim, double concentration, Rng& rng) {
  std::vector<double> v(dim);
  double sum = 0.0;
  for (double& x : v) {
    x = rng.gamma(concentration);
    sum += x;
  }
  if (sum <= 0.0) {
    // Every gamma draw underflowed (tiny concentrations); fall back to a vertex.
    std::fill(v.begin(), v.end(), 0.0);
    v[rng.uniform_index(dim)] = 1.0;
    return v;
  }
  for (double& x : v) {
    x /= sum;
  }
  return v;
}

Dataset generate_synthetic(const DatasetSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  Dataset ds;
  for (std::size_t t = 0; t < spec.n_topics; ++t) {
    ds.topic_labels.push_back(std::to_string(t));
  }
  for (std::size_t l = 0; l < spec.n_levels; ++l) {
    ds.level_labels.push_back(std::to_string(l + 1));
  }
  if (spec.draw == DirichletDraw::kPerDataset) {
    ds.topic_categorical = sample_dirichlet(spec.n_topics, spec.topic_concentration, rng);
    ds.level_categorical = sample_dirichlet(spec.n_levels, spec.level_concentration, rng);
  }
  ds.mcqs.reserve(spec.n_mcqs);
  for (std::size_t i = 0; i < spec.n_mcqs; ++i) {
    Mcq m;
    m.id = static_cast<McqId>(i);
    if (spec.draw == DirichletDraw::kPerDataset) {
      m.topic = rng.categorical(ds.topic_categorical);
      m.level = rng.categorical(ds.level_categorical);
    } else {
      auto pt = sample_dirichlet(spec.n_topics, spec.topic_concentration, rng);
      auto pl = sample_dirichlet(spec.n_levels, spec.level_concentration, rng);
      m.topic = rng.categorical(pt);
      m.level = rng.categorical(pl);
    }
    ds.mcqs.push_back(std::move(m));
  }
  return ds;
}

Dataset parse_dataset_csv(std::istream& in, const std::string& source_name) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) {
    throw Error(ErrorKind::kEmptyDataset, source_name + " is empty");
  }
  ++line_no;
  auto header = split_csv_line(line);
  if (!header) {
    throw Error(ErrorKind::kParseError, source_name + ":1: unterminated quote in header");
  }
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header->size(); ++i) {
    std::string name = trim((*header)[i]);
    if (std::find(kColumns.begin(), kColumns.end(), name) == kColumns.end()) {
      throw Error(ErrorKind::kUnknownColumn, source_name + ": unknown column '" + name + "'");
    }
    col[name] = i;
  }
  for (const char* required : {"id", "topic", "difficulty"}) {
    if (!col.count(required)) {
      throw Error(ErrorKind::kParseError,
                  source_name + ": missing required column '" + required + "'");
    }
  }

  struct Row {
    McqId id;
    std::string topic;
    std::string level;
    McqText text;
  };
  std::vector<Row> rows;
  std::unordered_set<McqId> seen;
  auto field = [&](const std::vector<std::string>& f, const char* name) -> std::string {
    auto it = col.find(name);
    if (it == col.end() || it->second >= f.size()) {
      return "";
    }
    return f[it->second];
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      continue;
    }
    const std::string where = source_name + ":" + std::to_string(line_no);
    auto f = split_csv_line(line);
    if (!f) {
      throw Error(ErrorKind::kParseError, where + ": unterminated quote");
    }
    if (f->size() > header->size()) {
      throw Error(ErrorKind::kParseError, where + ": more fields than header columns");
    }
    Row r;
    std::string id_text = trim(field(*f, "id"));
    auto [ptr, ec] = std::from_chars(id_text.data(), id_text.data() + id_text.size(), r.id);
    if (id_text.empty() || ec != std::errc() || ptr != id_text.data() + id_text.size() ||
        r.id < 0) {
      throw Error(ErrorKind::kParseError, where + ": id must be a non-negative integer");
    }
    r.topic = trim(field(*f, "topic"));
    r.level = trim(field(*f, "difficulty"));
    if (r.topic.empty()) {
      throw Error(ErrorKind::kParseError, where + ": row " + id_text + " is missing topic");
    }
    if (r.level.empty()) {
      throw Error(ErrorKind::kParseError, where + ": row " + id_text + " is missing difficulty");
    }
    if (!seen.insert(r.id).second) {
      throw Error(ErrorKind::kDuplicateMcq, where + ": duplicate id " + id_text);
    }
    r.text.question = field(*f, "question");
    r.text.choice_a = field(*f, "choice_a");
    r.text.choice_b = field(*f, "choice_b");
    r.text.choice_c = field(*f, "choice_c");
    r.text.choice_d = field(*f, "choice_d");
    r.text.answer = field(*f, "answer");
    rows.push_back(std::move(r));
  }
  if (rows.empty()) {
    throw Error(ErrorKind::kEmptyDataset, source_name + " has no rows");
  }

  std::vector<std::string> topics;
  std::vector<std::string> levels;
  for (const Row& r : rows) {
    topics.push_back(r.topic);
    levels.push_back(r.level);
  }
  Dataset ds;
  ds.topic_labels = ordered_vocabulary(topics);
  ds.level_labels = ordered_vocabulary(levels);
  std::map<std::string, std::size_t> topic_index;
  std::map<std::string, std::size_t> level_index;
  for (std::size_t i = 0; i < ds.topic_labels.size(); ++i) {
    topic_index[ds.topic_labels[i]] = i;
  }
  for (std::size_t i = 0; i < ds.level_labels.size(); ++i) {
    level_index[ds.level_labels[i]] = i;
  }
  ds.mcqs.reserve(rows.size());
  for (Row& r : rows) {
    ds.mcqs.push_back(Mcq{r.id, topic_index.at(r.topic), level_index.at(r.level), std::move(r.text)});
  }
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::kIo, "cannot open dataset " + path.string());
  }
  return parse_dataset_csv(in, path.string());
}

void write_dataset_csv(const Dataset& dataset, std::ostream& out) {
  for (std::size_t i = 0; i < kColumns.size(); ++i) {
    out << (i ? "," : "") << kColumns[i];
  }
  out << '\n';
  for (const Mcq& m : dataset.mcqs) {
    out << m.id << ',' << csv_escape(dataset.topic_labels.at(m.topic)) << ','
        << csv_escape(dataset.level_labels.at(m.level)) << ',' << csv_escape(m.text.question)
        << ',' << csv_escape(m.text.choice_a) << ',' << csv_escape(m.text.choice_b) << ','
        << csv_escape(m.text.choice_c) << ',' << csv_escape(m.text.choice_d) << ','
        << csv_escape(m.text.answer) << '\n';
  }
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorKind::kIo, "cannot write dataset " + path.string());
  }
  write_dataset_csv(dataset, out);
}

Dataset filter_topics(const Dataset& pool, const std::set<std::size_t>& topics) {
  if (topics.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "filter_topics needs at least one topic");
  }
  std::map<std::size_t, std::size_t> remap;
  Dataset out;
  for (std::size_t t : topics) {
    if (t >= pool.n_topics()) {
      throw Error(ErrorKind::kInvalidArgument,
                  "topic index " + std::to_string(t) + " is outside the vocabulary");
    }
    remap[t] = out.topic_labels.size();
    out.topic_labels.push_back(pool.topic_labels[t]);
  }
  out.level_labels = pool.level_labels;
  for (const Mcq& m : pool.mcqs) {
    auto it = remap.find(m.topic);
    if (it != remap.end()) {
      Mcq copy = m;
      copy.topic = it->second;
      out.mcqs.push_back(std::move(copy));
    }
  }
  if (out.mcqs.empty()) {
    throw Error(ErrorKind::kEmptyResult, "no mcq survives the topic filter");
  }
  return out;
}

std::set<std::size_t> sample_topics(std::size_t n_topics, std::size_t count, Rng& rng) {
  if (count == 0 || count > n_topics) {
    throw Error(ErrorKind::kInvalidArgument, "cannot sample " + std::to_string(count) +
                                                 " topics out of " + std::to_string(n_topics));
  }
  std::vector<std::size_t> idx(n_topics);
  std::iota(idx.begin(), idx.end(), 0);
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t j = i + rng.uniform_index(n_topics - i);
    std::swap(idx[i], idx[j]);
  }
  return {idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(count)};
}

std::string to_string(DirichletDraw draw) {
  return draw == DirichletDraw::kPerDataset ? "dataset" : "mcq";
}

DirichletDraw parse_dirichlet_draw(const std::string& text) {
  if (text == "dataset") {
    return DirichletDraw::kPerDataset;
  }
  if (text == "mcq") {
    return DirichletDraw::kPerMcq;
  }
  throw Error(ErrorKind::kInvalidArgument, "Dirichlet draw must be 'dataset' or 'mcq', got '" +
                                               text + "'");
}

}  // namespace quizforge
