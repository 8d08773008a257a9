#pragma once

// Configuration-driven experiment harness: synthetic success grids, alpha sweeps,
// IIA-robustness curves, top-k baselines, coverage sensitivity, scaling sweeps,
// the difficulty-conditioned expert and real-data runs.
//
// Every random draw comes from a stream derived from (master seed, stream name,
// indices), and repetitions are merged in configuration order, so a config plus a
// seed reproduces byte-identical CSV output for any worker count.

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <iosfwd>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "predset/config.hpp"
#include "predset/ingest.hpp"
#include "predset/search.hpp"
#include "predset/synthetic.hpp"

namespace predset {

std::mt19937_64 make_rng(std::uint64_t master, std::string_view stream,
                         std::initializer_list<std::uint64_t> indices = {});

struct ClassSepEntry {
  std::size_t n = 0;
  double target = 0.0;  // classifier accuracy the entry was tuned for
  double class_sep = 0.0;
  std::uint64_t task_seed = 0;
  double achieved = 0.0;  // accuracy measured by the tuner
};

/// CSV table n,target,class_sep,task_seed,achieved.
class ClassSepTable {
 public:
  static ClassSepTable parse(std::istream& in, const std::string& name);
  static ClassSepTable load(const std::filesystem::path& path);
  void write(std::ostream& out) const;

  /// Throws UsageError when (n, target) has no entry.
  const ClassSepEntry& lookup(std::size_t n, double target) const;
  void upsert(const ClassSepEntry& entry);
  const std::vector<ClassSepEntry>& entries() const noexcept { return entries_; }

 private:
  std::vector<ClassSepEntry> entries_;
};

struct ExperimentConfig {
  std::string kind = "grid";
  std::size_t n = 10;
  std::size_t m = 1200;
  std::size_t samples = 10000;
  double test_fraction = 0.2;
  std::size_t informative = 15;
  std::size_t redundant = 5;
  std::size_t clusters_per_class = 2;
  bool covariance_mixing = true;
  double flip_y = 0.01;
  std::vector<double> expert_accuracies{0.3, 0.5, 0.7, 0.9};
  std::vector<double> classifier_accuracies{0.3, 0.5, 0.7, 0.9};
  double delta = 0.1;
  std::size_t repetitions = 10;
  std::uint64_t seed = 0;
  std::filesystem::path class_sep_table;
  std::vector<double> p_grid{0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<std::size_t> k_grid;  // empty: 1..n
  std::vector<std::size_t> m_grid{160, 400, 800, 1200};
  std::vector<std::size_t> n_grid{10, 50, 100};
  std::size_t scaling_n = 10;   // n of the m-sweep
  std::size_t scaling_m = 400;  // m of the n-sweep
  double diagonal_noise = 0.25;
  SoftmaxHyperparams softmax;

  // Real-format data: "synthetic" simulates it, "files" ingests it.
  std::string source = "synthetic";
  RealDataPaths real;
  std::size_t difficulty_levels = 3;
  std::size_t predictions_per_sample = 50;
  double sim_class_sep = 1.6;
  std::uint64_t sim_task_seed = 1;
  std::vector<std::size_t> sim_train_sizes{400, 1200, 4000};
  /// Concentration of the per-sample Beta law of expert correctness (lower: more spread).
  double sim_concentration = 2.0;
};

/// Reads every known key, applying defaults; throws UsageError on invalid values and on
/// unknown keys.
ExperimentConfig load_experiment_config(const Config& config);

struct Stat {
  double mean = 0.0;
  double se = 0.0;  // sample standard deviation / sqrt(count); 0 for a single value
  std::size_t count = 0;
};
Stat summarize(std::span<const double> values);

/// One draw of the synthetic pipeline: a split of a fixed task, a classifier trained on
/// its training part, and the scored calibration, estimation and test parts.
struct Trial {
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t classifier_index = 0;
  std::size_t repetition = 0;
  LabeledScores cal;
  LabeledScores est;
  LabeledScores test;
  std::vector<double> class_weights;  // class frequencies of the whole task
  double classifier_accuracy = 0.0;   // argmax accuracy on the test part
  TrainingReport training;
};

Dataset make_task(const ExperimentConfig& config, std::size_t n, const ClassSepEntry& entry);
Trial make_trial(const ExperimentConfig& config, const Dataset& task, std::size_t m,
                 std::size_t classifier_index, std::size_t repetition);

/// Synthetic expert of the given accuracy for a trial (deterministic in the indices).
ConfusionMatrix make_expert(const ExperimentConfig& config, const Trial& trial,
                            std::size_t expert_index);

/// Mean of C[y][y] over the test labels.
double expert_alone(const ConfusionMatrix& confusion, const LabeledScores& test);

struct GridCell {
  std::size_t n = 0;
  std::size_t m = 0;
  double expert_target = 0.0;
  double classifier_target = 0.0;
  Stat expert_alone;
  Stat classifier;
  Stat success;
  Stat alpha_hat;
  Stat relative_gain;
  std::string error;  // non-empty when the cell could not be run
};

struct GridResult {
  std::vector<GridCell> cells;  // expert-major, config order
  /// Mean of the per-cell relative gains over the cells that ran; se across cells.
  Stat relative_gain;
};

GridResult run_success_grid(const ExperimentConfig& config, std::size_t n, std::size_t m);
GridResult run_success_grid(const ExperimentConfig& config);
void write_grid_csv(std::ostream& out, const GridResult& result);

struct AlphaSweepCell {
  double expert_target = 0.0;
  double classifier_target = 0.0;
  std::vector<double> alphas;       // grid order (largest alpha first)
  std::vector<double> mu_hat;       // mean over repetitions
  std::vector<double> success;      // test success, mean over repetitions
  std::vector<double> success_se;
  std::vector<double> mean_set_size;
  std::vector<double> alpha_hat;    // per repetition
  std::vector<double> size_histogram;  // fraction of test sets of size 0..n at alpha_hat
  Stat success_at_alpha_hat;
  Stat set_size_at_alpha_hat;
  std::string error;
};

struct AlphaSweepResult {
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<AlphaSweepCell> cells;
};

AlphaSweepResult run_alpha_sweep(const ExperimentConfig& config);
void write_alpha_curve_csv(std::ostream& out, const AlphaSweepResult& result);
void write_alpha_markers_csv(std::ostream& out, const AlphaSweepResult& result);
void write_set_size_csv(std::ostream& out, const AlphaSweepResult& result);

/// Mean set size on `data` at every grid rank (entry r-1 for rank r).
std::vector<double> set_size_curve(std::span<const double> sorted_cal, const LabeledScores& data);

struct IiaPoint {
  double expert_target = 0.0;
  double classifier_target = 0.0;
  double p = 0.0;
  Stat success;
  Stat expert_alone;
  std::string error;
};

struct IiaResult {
  std::vector<IiaPoint> points;
};

IiaResult run_iia_robustness(const ExperimentConfig& config);
void write_iia_csv(std::ostream& out, const IiaResult& result);

struct TopKCell {
  double expert_target = 0.0;
  double classifier_target = 0.0;
  std::vector<std::size_t> ks;
  std::vector<Stat> success;  // per k
  Stat success_alpha_hat;
  std::size_t best_k = 0;
  Stat success_best_k;
  std::string error;
};

struct TopKResult {
  std::vector<TopKCell> cells;
};

TopKResult run_topk_baseline(const ExperimentConfig& config);
void write_topk_curve_csv(std::ostream& out, const TopKResult& result);
void write_topk_summary_csv(std::ostream& out, const TopKResult& result);

struct CoveragePoint {
  std::size_t split = 0;
  double alpha_hat = 0.0;
  double target_coverage = 0.0;  // 1 - alpha_hat
  double empirical_coverage = 0.0;
};

struct CoverageResult {
  double expert_target = 0.0;
  double classifier_target = 0.0;
  std::vector<CoveragePoint> points;
  std::size_t within(double tolerance) const;
};

/// `repetitions` independent splits of the first (expert, classifier) cell.
CoverageResult run_coverage_sensitivity(const ExperimentConfig& config);
void write_coverage_csv(std::ostream& out, const CoverageResult& result);

struct ScalingRow {
  std::string sweep;  // "m" or "n"
  std::size_t n = 0;
  std::size_t m = 0;
  Stat relative_gain;
  std::size_t cells = 0;
  std::string error;
};

struct ScalingResult {
  std::vector<ScalingRow> rows;
};

ScalingResult run_scaling_sweeps(const ExperimentConfig& config);
void write_scaling_csv(std::ostream& out, const ScalingResult& result);

/// Real-format data drawn from the synthetic recipe: one task, several classifiers
/// trained on training pools of different sizes, and `predictions_per_sample`
/// expert predictions per sample whose per-sample correctness varies.
RealData simulate_real_data(const ExperimentConfig& config);

/// Ingested files or simulated data, depending on config.source.
RealData load_real_data(const ExperimentConfig& config);

struct RealRow {
  std::string classifier;
  std::size_t m = 0;
  Stat classifier_accuracy;
  Stat expert_alone;
  Stat success_alpha_hat;
  std::size_t best_k = 0;
  Stat success_best_k;
};

struct RealResult {
  std::vector<RealRow> rows;
};

/// Expert model from all predictions; per repetition the samples are split into
/// calibration (m), estimation (m) and test (rest).
RealResult run_real_data(const ExperimentConfig& config, const RealData& data);
void write_real_csv(std::ostream& out, const RealResult& result);

struct DifficultyRow {
  std::string classifier;
  std::size_t m = 0;
  std::size_t levels = 0;
  Stat classifier_accuracy;
  Stat expert_alone;
  Stat success_base;
  Stat success_difficulty;
  Stat gain_base;
  Stat gain_difficulty;
};

struct DifficultyResult {
  std::vector<DifficultyRow> rows;  // classifier-major, then m
};

/// Per-level confusion matrices (classes unobserved at a level fall back to the pooled
/// row). Levels come from thresholds frozen on the estimation split.
DifficultyExpert build_difficulty_expert(const RealData& data,
                                         std::span<const Difficulty> levels,
                                         const DifficultyThresholds& thresholds);

/// Runs base and difficulty-conditioned pipelines on the same splits for every m in
/// config.m_grid (or config.m when the grid is empty).
DifficultyResult run_difficulty_variant(const ExperimentConfig& config, const RealData& data);
void write_difficulty_csv(std::ostream& out, const DifficultyResult& result);

struct TuneOptions {
  std::size_t max_seed_tries = 200;
  double seed_margin = 0.03;   // require max class weight <= target - margin
  double tolerance = 0.005;    // accuracy tolerance of the bisection
  std::size_t iterations = 16;
  std::size_t probes = 3;      // splits averaged per accuracy measurement
  double sep_high = 6.0;
};

/// Mean test accuracy of the trained classifier over `probes` splits.
double measure_classifier_accuracy(const ExperimentConfig& config, std::size_t n,
                                   const ClassSepEntry& entry, std::size_t m,
                                   std::size_t probes);

/// Bisection on class_sep so the trained classifier hits `target`. Throws
/// CeilingReached when no seed admits the target or the bisection cannot reach it.
ClassSepEntry tune_class_sep(const ExperimentConfig& config, std::size_t n, double target,
                             const TuneOptions& options = {});

}  // namespace predset
