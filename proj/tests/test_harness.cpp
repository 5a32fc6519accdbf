#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "quizforge/errors.hpp"
#include "quizforge/harness.hpp"
#include "quizforge/oracle.hpp"

using namespace quizforge;
namespace fs = std::filesystem;

namespace {

DataConfig tiny_data() {
  DataConfig d;
  d.synthetic.n_mcqs = 60;
  d.synthetic.draw = DirichletDraw::kPerMcq;
  return d;
}

ExperimentPlan tiny_plan(std::vector<Method> methods, std::vector<double> alphas) {
  ExperimentPlan p;
  p.datasets = {{"tiny", tiny_data()}};
  p.targets = {"uniform"};
  p.methods = std::move(methods);
  p.alphas = std::move(alphas);
  p.runs = 10;
  p.seed = 21;
  p.universe_size = 300;
  p.train.episodes = 8;
  p.train.max_steps = 15;
  p.train.batch_size = 8;
  p.train.hidden = {16};
  p.train.probe_states = 16;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("quizforge_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<nlohmann::json> read_jsonl(const fs::path& p) {
  std::ifstream in(p);
  std::vector<nlohmann::json> out;
  std::string line;
  while (std::getline(in, line)) out.push_back(nlohmann::json::parse(line));
  return out;
}

}  // namespace

TEST(Harness, PlanCardinality) {
  const PlanResult r = run_plan(tiny_plan({Method::kDqn}, {0.0, 0.25, 0.5, 0.75, 1.0}));
  EXPECT_EQ(r.rows.size(), 50u);
  for (const MetricsRow& row : r.rows) {
    EXPECT_TRUE(row.ok()) << row.error;
    EXPECT_LE(row.mean_similarity, row.oracle_similarity);
  }
  EXPECT_EQ(aggregate(r.rows).size(), 5u);
  EXPECT_EQ(r.curves.size(), 5u);
  EXPECT_EQ(r.trajectories.size(), 50u);
}

TEST(Harness, OracleRowsReportScanCount) {
  const PlanResult r = run_plan(tiny_plan({Method::kOracle}, {0.5}));
  ASSERT_EQ(r.rows.size(), 10u);
  for (const MetricsRow& row : r.rows) {
    EXPECT_EQ(row.mean_iterations, 300.0);
    EXPECT_EQ(row.mean_similarity, row.oracle_similarity);
  }
}

TEST(Harness, AggregateIsArithmeticMean) {
  std::vector<MetricsRow> rows;
  Rng rng(4);
  for (std::size_t i = 0; i < 7; ++i) {
    MetricsRow r;
    r.dataset = "d";
    r.target = "t";
    r.algorithm = i % 2 ? "dqn" : "sarsa";
    r.run = i;
    r.mean_similarity = rng.uniform();
    r.mean_iterations = static_cast<double>(rng.uniform_index(50));
    r.success_rate = i % 3 == 0 ? 1.0 : 0.0;
    r.action_histogram = {i, 1, 2, 3};
    rows.push_back(r);
  }
  const auto agg = aggregate(rows);
  ASSERT_EQ(agg.size(), 2u);
  EXPECT_EQ(agg[0].algorithm, "sarsa");
  for (const MetricsRow& a : agg) {
    double sim = 0.0, it = 0.0;
    std::size_t n = 0, first = 0;
    for (const MetricsRow& r : rows) {
      if (r.algorithm != a.algorithm) continue;
      sim += r.mean_similarity;
      it += r.mean_iterations;
      first += r.action_histogram[0];
      ++n;
    }
    EXPECT_EQ(a.runs, n);
    EXPECT_NEAR(a.mean_similarity, sim / static_cast<double>(n), 1e-12);
    EXPECT_NEAR(a.mean_iterations, it / static_cast<double>(n), 1e-12);
    EXPECT_EQ(a.action_histogram[0], first);
  }
}

TEST(Harness, IdenticalPlansGiveIdenticalReports) {
  const ExperimentPlan plan = tiny_plan({Method::kDqn, Method::kA2c, Method::kOracle}, {0.0, 1.0});
  const nlohmann::json cfg = {{"seed", 21}};
  const fs::path a = scratch("repro_a");
  const fs::path b = scratch("repro_b");
  emit_report(run_plan(plan), a, cfg);
  emit_report(run_plan(plan), b, cfg);
  for (const char* f : {"report.csv", "runs.csv", "curves.jsonl", "trajectories.jsonl"}) {
    const std::string x = slurp(a / f);
    EXPECT_FALSE(x.empty()) << f;
    EXPECT_EQ(x, slurp(b / f)) << f;
  }
  EXPECT_TRUE(fs::exists(a / "timing.csv"));
}

TEST(Harness, ReportFilesCarryConfigAndCounts) {
  ExperimentPlan plan = tiny_plan({Method::kSarsa, Method::kOracle}, {0.5});
  plan.runs = 3;
  const nlohmann::json cfg = {{"marker", "abc"}};
  const fs::path dir = scratch("counts");
  const PlanResult res = run_plan(plan);
  emit_report(res, dir, cfg);

  const std::string report = slurp(dir / "report.csv");
  EXPECT_EQ(report.rfind("# config {\"marker\":\"abc\"}\n", 0), 0u);
  std::size_t lines = std::count(report.begin(), report.end(), '\n');
  EXPECT_EQ(lines, 2u + 2u);  // comment, header, one row per algorithm

  const auto curves = read_jsonl(dir / "curves.jsonl");
  ASSERT_FALSE(curves.empty());
  EXPECT_EQ(curves[0]["kind"], "config");
  EXPECT_EQ(curves[0]["config"]["marker"], "abc");
  std::size_t episodes = 0;
  for (const auto& j : curves) {
    if (j["kind"] == "episode") {
      EXPECT_EQ(j["schema"], "quizforge.curves/1");
      ++episodes;
    }
  }
  EXPECT_EQ(episodes, plan.train.episodes);

  std::istringstream runs(slurp(dir / "runs.csv"));
  const auto back = read_runs_csv(runs);
  ASSERT_EQ(back.size(), res.rows.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].algorithm, res.rows[i].algorithm);
    EXPECT_EQ(back[i].mean_similarity, res.rows[i].mean_similarity);
    EXPECT_EQ(back[i].action_histogram, res.rows[i].action_histogram);
  }
}

TEST(Harness, TrajectoriesRecomputeFromQuizIds) {
  ExperimentPlan plan = tiny_plan({Method::kDqn}, {0.3});
  plan.runs = 4;
  const fs::path dir = scratch("traj");
  emit_report(run_plan(plan), dir, nlohmann::json::object());
  const Dataset ds = materialize_dataset(tiny_data(), derive_seed(plan.seed, "data.tiny"));
  std::map<McqId, Mcq> by_id;
  for (const Mcq& m : ds.mcqs) by_id[m.id] = m;
  const TargetSpec spec = make_target("uniform", ds.n_topics(), ds.n_levels(), 0.3, plan.beta);
  std::size_t checked = 0;
  for (const auto& j : read_jsonl(dir / "trajectories.jsonl")) {
    if (j["kind"] != "step") continue;
    std::vector<Mcq> members;
    for (McqId id : j["mcq_ids"].get<std::vector<McqId>>()) members.push_back(by_id.at(id));
    const Quiz q = quiz_from_mcqs(members, plan.quiz_size, ds.n_topics(), ds.n_levels());
    EXPECT_NEAR(j["topic_match"].get<double>(), topic_match(q, spec.tc), 1e-12);
    EXPECT_NEAR(j["diff_match"].get<double>(), diff_match(q, spec.td), 1e-12);
    EXPECT_NEAR(j["target_match"].get<double>(), target_match(q, spec), 1e-12);
    EXPECT_EQ(j["alpha"].get<double>(), 0.3);
    ++checked;
  }
  EXPECT_GE(checked, plan.runs);
}

TEST(Harness, EmptyResultRejected) {
  try {
    emit_report(PlanResult{}, scratch("empty"), nlohmann::json::object());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kEmptyResult);
  }
}

TEST(Harness, FailingCellDoesNotStopPlan) {
  ExperimentPlan plan = tiny_plan({Method::kDqn, Method::kOracle}, {0.5});
  plan.runs = 2;
  DataConfig broken;
  broken.source = "csv";
  broken.path = "/nonexistent/quizforge.csv";
  plan.datasets.insert(plan.datasets.begin(), DatasetRef{"broken", broken});
  const PlanResult r = run_plan(plan);
  std::size_t failed = 0, ok = 0;
  for (const MetricsRow& row : r.rows) {
    if (row.ok()) {
      EXPECT_EQ(row.dataset, "tiny");
      ++ok;
    } else {
      EXPECT_EQ(row.dataset, "broken");
      EXPECT_EQ(row.runs, 0u);
      ++failed;
    }
  }
  EXPECT_EQ(failed, 2u);
  EXPECT_EQ(ok, 4u);
}

TEST(Transfer, IdentityReproducesOwnInference) {
  DatasetSpec ds;
  ds.n_mcqs = 60;
  ds.draw = DirichletDraw::kPerMcq;
  ds.seed = 2;
  const Universe u = Universe::build(generate_synthetic(ds), 10, 300, 3);
  const TargetSpec spec = make_target("uniform", 10, 5, 0.5, 0.85);
  TrainConfig c = tiny_plan({}, {}).train;
  c.seed = 4;
  const TrainResult tr = train_dqn(u, spec, c);
  const EpisodeConfig ec = episode_config(c, spec);
  const auto own = aggregate(evaluate_model(tr.params, u, spec, ec, 6, 77, {"d", "t", "dqn"}));
  const MetricsRow moved = transfer_run(tr.params, u, spec, ec, 6, 77, {"d", "t", "dqn"});
  EXPECT_EQ(moved.mean_similarity, own[0].mean_similarity);
  EXPECT_EQ(moved.mean_iterations, own[0].mean_iterations);
  EXPECT_EQ(moved.oracle_similarity, oracle_best(u, spec).match);
}

TEST(Transfer, DimensionMismatch) {
  DatasetSpec ds;
  ds.n_mcqs = 60;
  ds.n_topics = 12;
  ds.draw = DirichletDraw::kPerMcq;
  const Universe u = Universe::build(generate_synthetic(ds), 10, 100, 3);
  NetworkSpec s;  // 15 inputs; this universe has 17
  try {
    transfer_run(zero_params(s), u, make_target("uniform", 12, 5, 0.5, 0.85), EpisodeConfig{}, 3, 1,
                 {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimensionMismatch);
  }
}

TEST(ActionDistribution, SumsToOneAndRejectsEmptyWindows) {
  TrainLog log;
  for (std::size_t e = 0; e < 4; ++e) {
    EpisodeLog ep;
    ep.episode = e;
    ep.action_counts = {e, 2, 3, 4};
    ep.steps = e + 9;
    log.episodes.push_back(ep);
  }
  const auto d = action_distribution(log, 0, 4);
  EXPECT_NEAR(std::accumulate(d.begin(), d.end(), 0.0), 1.0, 1e-12);
  EXPECT_NEAR(d[0], 6.0 / 42.0, 1e-12);
  for (auto [a, b] : std::vector<std::pair<std::size_t, std::size_t>>{{2, 2}, {3, 1}, {0, 5}}) {
    try {
      action_distribution(log, a, b);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kEmptyWindow);
    }
  }
  TrainLog idle;
  idle.episodes.resize(2);
  EXPECT_THROW(action_distribution(idle, 0, 2), Error);
}

TEST(ActionDistribution, RandomWarmupIsNearUniform) {
  DatasetSpec ds;
  ds.n_mcqs = 60;
  ds.draw = DirichletDraw::kPerMcq;
  const Universe u = Universe::build(generate_synthetic(ds), 10, 300, 3);
  TrainConfig c = tiny_plan({}, {}).train;
  c.epsilon_decay = 1.0;  // epsilon stays at 1
  c.episodes = 20;
  c.max_steps = 50;
  const TrainResult r = train_sarsa(u, make_target("uniform", 10, 5, 0.5, 1.0), c);
  for (double share : action_distribution(r.log, 0, 20)) EXPECT_NEAR(share, 0.25, 0.05);
}
