#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <omp.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "predset/errors.hpp"
#include "predset/experiments.hpp"

using namespace predset;
namespace fs = std::filesystem;

namespace {

fs::path table_path() {
  static const fs::path p = [] {
    const fs::path dir = fs::temp_directory_path() / "predset_experiments_test";
    fs::create_directories(dir);
    std::ofstream f(dir / "class_sep.csv");
    f << "n,target,class_sep,task_seed,achieved\n"
         "4,0.5,0.5,1,0.5\n"
         "4,0.8,1.5,1,0.8\n";
    return dir / "class_sep.csv";
  }();
  return p;
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.n = 4;
  c.m = 150;
  c.samples = 2000;
  c.expert_accuracies = {0.5, 0.8};
  c.classifier_accuracies = {0.5, 0.8};
  c.repetitions = 2;
  c.seed = 3;
  c.class_sep_table = table_path();
  return c;
}

template <typename Run, typename Write>
std::string csv_of(Run run, Write write) {
  std::ostringstream out;
  write(out, run());
  return out.str();
}

}  // namespace

TEST_CASE("seeded streams") {
  auto a = make_rng(1, "split", {1, 2});
  auto b = make_rng(1, "split", {1, 2});
  auto c = make_rng(1, "split", {2, 1});
  auto d = make_rng(1, "expert", {1, 2});
  auto e = make_rng(2, "split", {1, 2});
  const auto va = a();
  CHECK(va == b());
  CHECK(va != c());
  CHECK(va != d());
  CHECK(va != e());
}

TEST_CASE("summaries") {
  const std::vector<double> v{1.0, 2.0, 3.0};
  const Stat s = summarize(v);
  CHECK(s.mean == 2.0);
  CHECK(s.se == doctest::Approx(1.0 / std::sqrt(3.0)));
  CHECK(s.count == 3);
  CHECK(summarize(std::vector<double>{0.4}).se == 0.0);
}

TEST_CASE("class_sep table") {
  std::istringstream in("n,target,class_sep,task_seed,achieved\n10,0.3,0.25,2,0.301\n");
  ClassSepTable t = ClassSepTable::parse(in, "t.csv");
  CHECK(t.lookup(10, 0.3).class_sep == 0.25);
  CHECK(t.lookup(10, 0.3).task_seed == 2);
  CHECK_THROWS_AS(t.lookup(10, 0.5), UsageError);
  t.upsert({10, 0.3, 0.5, 4, 0.3});
  t.upsert({50, 0.3, 1.5, 1, 0.3});
  CHECK(t.entries().size() == 2);
  CHECK(t.lookup(10, 0.3).class_sep == 0.5);
  std::stringstream ss;
  t.write(ss);
  const ClassSepTable back = ClassSepTable::parse(ss, "t.csv");
  CHECK(back.lookup(50, 0.3).class_sep == 1.5);
}

TEST_CASE("experiment config loading") {
  std::istringstream in("kind = grid\nn = 4\nm = 100\nexpert_accuracies = 0.5\noptimizer = gd\n");
  const ExperimentConfig c = load_experiment_config(Config::parse(in, "c.conf"));
  CHECK(c.n == 4);
  CHECK(c.m == 100);
  CHECK(c.expert_accuracies == std::vector<double>{0.5});
  CHECK(c.softmax.optimizer == Optimizer::kGradientDescent);
  CHECK(c.delta == 0.1);
  CHECK(c.repetitions == 10);
  CHECK(c.test_fraction == 0.2);
  CHECK(c.informative == 15);
  CHECK(c.redundant == 5);

  std::istringstream typo("n = 4\nrepetitons = 3\n");
  CHECK_THROWS_AS(load_experiment_config(Config::parse(typo, "c.conf")), UsageError);
  std::istringstream bad("optimizer = adam\n");
  CHECK_THROWS_AS(load_experiment_config(Config::parse(bad, "c.conf")), UsageError);
  std::istringstream acc("expert_accuracies = 0.5, 1.5\n");
  CHECK_THROWS_AS(load_experiment_config(Config::parse(acc, "c.conf")), UsageError);
}

TEST_CASE("trials are well formed") {
  const ExperimentConfig c = small_config();
  const ClassSepTable t = ClassSepTable::load(c.class_sep_table);
  const Dataset task = make_task(c, 4, t.lookup(4, 0.5));
  CHECK(task.rows() == 2000);
  const Trial trial = make_trial(c, task, 150, 0, 0);
  CHECK(trial.cal.size() == 150);
  CHECK(trial.est.size() == 150);
  CHECK(trial.test.size() == 400);
  CHECK(trial.class_weights.size() == 4);
  const ConfusionMatrix conf = make_expert(c, trial, 0);
  double diag = 0;
  for (std::size_t i = 0; i < trial.test.size(); ++i) {
    const auto y = static_cast<std::size_t>(trial.test.label(i));
    diag += conf.at(y, y);
  }
  CHECK(expert_alone(conf, trial.test) == doctest::Approx(diag / 400.0).epsilon(1e-12));
  // same indices, same draw
  const Trial again = make_trial(c, task, 150, 0, 0);
  CHECK(again.test.scores().values() == trial.test.scores().values());
  CHECK(make_expert(c, again, 0).entries() == conf.entries());
}

TEST_CASE("grid output is deterministic across runs and worker counts") {
  const ExperimentConfig c = small_config();
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const std::string one = csv_of([&] { return run_success_grid(c); }, write_grid_csv);
  omp_set_num_threads(3);
  const std::string three = csv_of([&] { return run_success_grid(c); }, write_grid_csv);
  const std::string again = csv_of([&] { return run_success_grid(c); }, write_grid_csv);
  omp_set_num_threads(saved);
  CHECK(one == three);
  CHECK(three == again);
}

TEST_CASE("grid cells are valid probabilities") {
  const GridResult r = run_success_grid(small_config());
  REQUIRE(r.cells.size() == 4);
  for (const auto& cell : r.cells) {
    CHECK(cell.error.empty());
    CHECK(cell.success.count == 2);
    CHECK(cell.success.mean >= 0.0);
    CHECK(cell.success.mean <= 1.0);
    CHECK(cell.success.se >= 0.0);
    CHECK(cell.expert_alone.mean <= 1.0);
    CHECK(cell.alpha_hat.mean > 0.0);
    CHECK(cell.alpha_hat.mean < 1.0);
  }
  CHECK(r.cells[0].expert_target == 0.5);
  CHECK(r.cells[1].classifier_target == 0.8);
}

TEST_CASE("a missing table entry marks cells and the run continues") {
  ExperimentConfig c = small_config();
  c.classifier_accuracies = {0.5, 0.6};
  const GridResult r = run_success_grid(c);
  CHECK(r.cells[0].error.empty());
  CHECK_FALSE(r.cells[1].error.empty());
  std::ostringstream out;
  write_grid_csv(out, r);
  CHECK(out.str().find("0.6") != std::string::npos);
}

TEST_CASE("zero IIA violation reproduces the grid") {
  ExperimentConfig c = small_config();
  c.p_grid = {0.0, 0.5, 1.0};
  const GridResult g = run_success_grid(c);
  const IiaResult r = run_iia_robustness(c);
  REQUIRE(r.points.size() == 12);
  for (std::size_t cell = 0; cell < 4; ++cell) {
    const IiaPoint& p0 = r.points[cell * 3];
    CHECK(p0.p == 0.0);
    CHECK(p0.success.mean == doctest::Approx(g.cells[cell].success.mean).epsilon(1e-10));
    CHECK(p0.expert_alone.mean == g.cells[cell].expert_alone.mean);
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(r.points[cell * 3 + k].success.mean >= 0.0);
      CHECK(r.points[cell * 3 + k].success.mean <= 1.0);
    }
  }
}

TEST_CASE("top-k extremes") {
  const ExperimentConfig c = small_config();
  const TopKResult r = run_topk_baseline(c);
  const GridResult g = run_success_grid(c);
  REQUIRE(r.cells.size() == 4);
  for (std::size_t cell = 0; cell < 4; ++cell) {
    const TopKCell& t = r.cells[cell];
    REQUIRE(t.ks.size() == 4);
    CHECK(t.success.back().mean == doctest::Approx(g.cells[cell].expert_alone.mean).epsilon(1e-9));
    CHECK(t.success.front().mean == doctest::Approx(g.cells[cell].classifier.mean).epsilon(1e-12));
    CHECK(t.success_alpha_hat.mean == g.cells[cell].success.mean);
    CHECK(t.success_best_k.mean >= t.success.front().mean);
  }
  ExperimentConfig bad = c;
  bad.k_grid = {5};
  CHECK_THROWS_AS(run_topk_baseline(bad), UsageError);
}

TEST_CASE("alpha sweep curves") {
  ExperimentConfig c = small_config();
  c.expert_accuracies = {0.5};
  c.classifier_accuracies = {0.8};
  const AlphaSweepResult r = run_alpha_sweep(c);
  REQUIRE(r.cells.size() == 1);
  const AlphaSweepCell& cell = r.cells[0];
  REQUIRE(cell.alphas.size() == 150);
  for (std::size_t i = 1; i < cell.alphas.size(); ++i) {
    CHECK(cell.alphas[i] < cell.alphas[i - 1]);
    CHECK(cell.mean_set_size[i] >= cell.mean_set_size[i - 1]);  // larger alpha, smaller sets
  }
  double hist = 0;
  for (double h : cell.size_histogram) hist += h;
  CHECK(hist == doctest::Approx(1.0));
  CHECK(cell.alpha_hat.size() == 2);
  std::ostringstream a, b, s;
  write_alpha_curve_csv(a, r);
  write_alpha_markers_csv(b, r);
  write_set_size_csv(s, r);
  CHECK_FALSE(a.str().empty());
}

TEST_CASE("coverage with a single split") {
  ExperimentConfig c = small_config();
  c.repetitions = 1;
  const CoverageResult r = run_coverage_sensitivity(c);
  REQUIRE(r.points.size() == 1);
  CHECK(r.points[0].target_coverage == doctest::Approx(1.0 - r.points[0].alpha_hat));
  CHECK(r.points[0].empirical_coverage >= 0.0);
  CHECK(r.points[0].empirical_coverage <= 1.0);
  CHECK(r.within(1.0) == 1);
}

TEST_CASE("scaling rows") {
  ExperimentConfig c = small_config();
  c.m_grid = {100, 150};
  c.n_grid = {4};
  c.scaling_n = 4;
  c.scaling_m = 150;
  const ScalingResult r = run_scaling_sweeps(c);
  REQUIRE(r.rows.size() == 3);
  CHECK(r.rows[0].sweep == "m");
  CHECK(r.rows[2].sweep == "n");
  for (const auto& row : r.rows) CHECK(row.error.empty());
}

TEST_CASE("real-format pipeline on simulated data") {
  ExperimentConfig c = small_config();
  c.samples = 900;
  c.m = 200;
  c.m_grid = {100, 200};
  c.expert_accuracies = {0.8};
  c.sim_train_sizes = {200, 600};
  c.predictions_per_sample = 10;
  c.sim_class_sep = 1.5;
  const RealData data = simulate_real_data(c);
  CHECK(data.size() == 900);
  CHECK(data.classifier_names == std::vector<std::string>{"clf200", "clf600"});
  for (const auto& p : data.predictions) CHECK(p.size() == 10);

  const RealResult r = run_real_data(c, data);
  REQUIRE(r.rows.size() == 2);
  for (const auto& row : r.rows) {
    CHECK(row.success_alpha_hat.mean >= 0.0);
    CHECK(row.success_alpha_hat.mean <= 1.0);
    CHECK(row.best_k >= 1);
  }

  c.difficulty_levels = 1;
  const DifficultyResult d1 = run_difficulty_variant(c, data);
  REQUIRE(d1.rows.size() == 4);
  for (const auto& row : d1.rows) {
    CHECK(row.success_base.mean == row.success_difficulty.mean);
    CHECK(row.gain_base.mean == row.gain_difficulty.mean);
  }
  c.difficulty_levels = 3;
  const DifficultyResult d3 = run_difficulty_variant(c, data);
  REQUIRE(d3.rows.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(d3.rows[i].success_base.mean == d1.rows[i].success_base.mean);
}

TEST_CASE("per-level tables are row-stochastic") {
  ExperimentConfig c = small_config();
  c.samples = 400;
  c.expert_accuracies = {0.7};
  c.sim_train_sizes = {200};
  c.predictions_per_sample = 8;
  const RealData data = simulate_real_data(c);
  const auto fractions = data.correct_fractions();
  const DifficultyAssignment a = assign_difficulty(fractions);
  const DifficultyExpert e = build_difficulty_expert(data, a.levels, a.thresholds);
  for (Difficulty level : {Difficulty::kEasy, Difficulty::kMedium, Difficulty::kHard}) {
    for (Label y = 0; y < 4; ++y) {
      // conditional success over the full set is the diagonal of a stochastic row
      const double full = conditional_success(e.table(level), y, PredictionSet::full(4));
      CHECK(full > 0.0);
      CHECK(full <= 1.0);
      double total = 0;
      for (Label j = 0; j < 4; ++j) total += choice_probability(e.table(level), y, j, PredictionSet::full(4));
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}
