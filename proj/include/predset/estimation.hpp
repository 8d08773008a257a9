#pragma once

// Monte-Carlo estimates of an expert's success probability under a set-valued
// predictor, and the Hoeffding radius that bounds their error.

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "predset/conformal.hpp"
#include "predset/errors.hpp"
#include "predset/expert.hpp"

namespace predset {

/// Order-independent mean of values in [0,1]. Each value is rounded to a multiple of
/// 2^-60 and summed in 128-bit integers, so partial sums can be merged in any order
/// (threads, incremental sweeps) and still reproduce the serial result bit for bit.
class ExactMean {
 public:
  __extension__ using Accumulator = unsigned __int128;

  static std::uint64_t quantize(double value) {
    return static_cast<std::uint64_t>(std::llround(std::ldexp(value, kBits)));
  }
  static double to_mean(Accumulator sum, std::size_t count) {
    return std::ldexp(static_cast<double>(sum), -kBits) / static_cast<double>(count);
  }

  void add(double value) { sum_ += quantize(value); }
  void merge(const ExactMean& other) { sum_ += other.sum_; }
  Accumulator sum() const noexcept { return sum_; }
  double mean(std::size_t count) const { return to_mean(sum_, count); }

 private:
  static constexpr int kBits = 60;
  Accumulator sum_ = 0;
};

/// Resolves the MNL table that governs each sample of a split: a single table for
/// the label-only context, or the table of the sample's difficulty level.
class ExpertBinding {
 public:
  explicit ExpertBinding(const MnlExpert& expert) : single_(&expert) {}
  ExpertBinding(const DifficultyExpert& expert, std::span<const Difficulty> levels)
      : leveled_(&expert), levels_(levels) {}

  std::size_t num_labels() const { return single_ ? single_->size() : leveled_->size(); }

  const MnlExpert& table(std::size_t sample) const {
    return single_ ? *single_ : leveled_->table(levels_[sample]);
  }

  /// Throws UsageError when the binding cannot serve a split of the given shape.
  void check(std::size_t samples, std::size_t labels) const {
    if (num_labels() != labels) throw UsageError("expert label count does not match scores");
    if (leveled_ && levels_.size() != samples) {
      throw UsageError("difficulty levels do not cover every sample");
    }
  }

 private:
  const MnlExpert* single_ = nullptr;
  const DifficultyExpert* leveled_ = nullptr;
  std::span<const Difficulty> levels_;
};

/// sqrt(log(1/delta) / (2m)). Requires m >= 1 and delta in (0,1].
double hoeffding_epsilon(std::size_t m, double delta);

struct EstimateReport {
  double alpha = 0.0;
  double alpha2 = std::numeric_limits<double>::quiet_NaN();  // set for two-threshold candidates
  double mu_hat = 0.0;
  double epsilon = 0.0;
  std::size_t m = 0;
  double delta_used = 0.0;
  double lower_bound() const noexcept { return mu_hat - epsilon; }
};

/// CSV with header alpha,mu_hat,epsilon,lower_bound (alpha2 column added when present).
void write_reports_csv(std::ostream& out, std::span<const EstimateReport> reports);

/// mu_hat = (1/m) sum over covered samples of the exact MNL conditional success.
/// Uncovered samples contribute 0. Deterministic.
template <SetPredictor P>
double monte_carlo_success(const P& predictor, const LabeledScores& data,
                           const ExpertBinding& expert) {
  if (data.size() == 0) throw UsageError("estimation set is empty");
  expert.check(data.size(), data.num_labels());
  ExactMean acc;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const PredictionSet set = build_set(predictor, data.row(i));
    const Label y = data.label(i);
    if (set.contains(y)) acc.add(conditional_success(expert.table(i), y, set));
  }
  return acc.mean(data.size());
}

/// Plug-in success probability on a held-out test split (same computation as the estimator).
template <SetPredictor P>
double true_success_probability(const P& predictor, const LabeledScores& test,
                                const ExpertBinding& expert) {
  return monte_carlo_success(predictor, test, expert);
}

/// Simulation form: draw one prediction per test sample and count matches.
template <SetPredictor P>
double sampled_success_probability(const P& predictor, const LabeledScores& test,
                                   const ExpertBinding& expert, std::mt19937_64& rng) {
  if (test.size() == 0) throw UsageError("test set is empty");
  expert.check(test.size(), test.num_labels());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const PredictionSet set = build_set(predictor, test.row(i));
    if (set.empty()) continue;
    if (sample_prediction(expert.table(i), test.label(i), set, rng) == test.label(i)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

/// Test-time success when the expert's preferences depend on the offered set (IIA broken
/// with severity p).
template <SetPredictor P>
double violated_success_probability(const P& predictor, const LabeledScores& test,
                                    const ConfusionMatrix& confusion, double p) {
  if (test.size() == 0) throw UsageError("test set is empty");
  ExactMean acc;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const PredictionSet set = build_set(predictor, test.row(i));
    acc.add(violated_conditional_success(confusion, test.label(i), set, p));
  }
  return acc.mean(test.size());
}

template <SetPredictor P>
double empirical_coverage(const P& predictor, const LabeledScores& data) {
  if (data.size() == 0) throw UsageError("empty split");
  std::size_t covered = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (build_set(predictor, data.row(i)).contains(data.label(i))) ++covered;
  }
  return static_cast<double>(covered) / static_cast<double>(data.size());
}

/// counts[s] = number of samples whose set has size s, for s = 0..n.
template <SetPredictor P>
std::vector<std::size_t> set_size_histogram(const P& predictor, const LabeledScores& data) {
  std::vector<std::size_t> counts(data.num_labels() + 1, 0);
  for (std::size_t i = 0; i < data.size(); ++i) ++counts[build_set(predictor, data.row(i)).size()];
  return counts;
}

template <SetPredictor P>
double mean_set_size(const P& predictor, const LabeledScores& data) {
  const auto hist = set_size_histogram(predictor, data);
  double total = 0.0;
  for (std::size_t s = 0; s < hist.size(); ++s) total += static_cast<double>(s * hist[s]);
  return total / static_cast<double>(data.size());
}

/// Estimate and radius for one conformal predictor, with the radius at the given
/// per-candidate failure probability.
EstimateReport estimate(const ConformalPredictor& predictor, const LabeledScores& est,
                        const ExpertBinding& expert, double delta_used);

}  // namespace predset
