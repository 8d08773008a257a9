#pragma once

// Simulated experts that must pick a label from a recommended set. Choice follows
// a multinomial logit over utilities u[y][y'] = log C[y][y'] built from the
// expert's confusion matrix on the unassisted task.

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "predset/conformal.hpp"

namespace predset {

/// Lower clamp applied to confusion entries before taking logs.
inline constexpr double kConfusionFloor = 1e-12;

/// Row-stochastic n x n matrix; entry (y, y') = P[expert predicts y' | truth y].
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  /// Throws UsageError on negative entries or rows not summing to 1 within 1e-9.
  ConfusionMatrix(std::size_t n, std::vector<double> entries);

  static ConfusionMatrix identity(std::size_t n);

  std::size_t size() const noexcept { return n_; }
  double at(std::size_t y, std::size_t y_pred) const { return entries_[y * n_ + y_pred]; }
  std::span<const double> row(std::size_t y) const { return {entries_.data() + y * n_, n_}; }
  const std::vector<double>& entries() const noexcept { return entries_; }

  /// Sum_y w_y C[y][y]: unassisted success under class frequencies w.
  double weighted_diagonal(std::span<const double> class_weights) const;

 private:
  std::size_t n_ = 0;
  std::vector<double> entries_;
};

/// Multinomial-logit expert. Besides the real-valued utilities it keeps, per true
/// label, integer weights round(2^50 * exp(u - max_row u)); choice probabilities are
/// ratios of exact integer sums, so they do not depend on the order in which the
/// members of a set are visited.
class MnlExpert {
 public:
  MnlExpert() = default;
  MnlExpert(std::size_t n, std::vector<double> utilities);
  /// u = log(max(C, kConfusionFloor)).
  static MnlExpert from_confusion(const ConfusionMatrix& confusion);

  std::size_t size() const noexcept { return n_; }
  std::span<const double> utilities(Label y) const {
    return {utilities_.data() + static_cast<std::size_t>(y) * n_, n_};
  }
  std::span<const std::uint64_t> weights(Label y) const {
    return {weights_.data() + static_cast<std::size_t>(y) * n_, n_};
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> utilities_;
  std::vector<std::uint64_t> weights_;
};

/// e^{u_yy} / sum_{y' in set} e^{u_yy'}. Throws UsageError if the set is empty or misses y.
double conditional_success(const MnlExpert& expert, Label true_label, const PredictionSet& set);

/// Probability that the expert picks `choice` from the set (0 when choice is not a member).
double choice_probability(const MnlExpert& expert, Label true_label, Label choice,
                          const PredictionSet& set);

/// Draws the expert's prediction from the set. Throws UsageError on an empty set.
Label sample_prediction(const MnlExpert& expert, Label true_label, const PredictionSet& set,
                        std::mt19937_64& rng);

/// Softmax of an arbitrary utility row restricted to the set, evaluated at the true label.
double softmax_success(std::span<const double> utility_row, Label true_label,
                       const PredictionSet& set);

/// Set-dependent utilities that break IIA with severity p in [0,1]:
/// u_yy' = log(C_yy' + p [y' != y] / |set \ {y}| * sum_{y'' not in set} C_yy'').
/// Returns the full row; a singleton set {y} leaves log C unmodified.
std::vector<double> violated_utilities(const ConfusionMatrix& confusion, Label true_label,
                                       const PredictionSet& set, double p);

/// Conditional success under violated_utilities; 0 when the set misses y.
double violated_conditional_success(const ConfusionMatrix& confusion, Label true_label,
                                    const PredictionSet& set, double p);

Label sample_violated_prediction(const ConfusionMatrix& confusion, Label true_label,
                                 const PredictionSet& set, double p, std::mt19937_64& rng);

/// Empirical confusion matrix from (true, predicted) pairs, floored at kConfusionFloor and
/// renormalized. Throws UnobservedClass if some true label never appears.
ConfusionMatrix estimate_confusion(std::span<const std::pair<Label, Label>> predictions,
                                   std::size_t n);

enum class Difficulty : std::uint8_t { kEasy = 0, kMedium = 1, kHard = 2 };
inline constexpr std::size_t kDifficultyLevels = 3;
std::string to_string(Difficulty level);

struct DifficultyThresholds {
  double t50 = 0.5;  // median of per-sample correct fractions
  double t25 = 0.25; // lower quartile
};

/// Linear-interpolation quantiles (0.5 and 0.25) of the per-sample fractions.
DifficultyThresholds difficulty_thresholds(std::span<const double> correct_fractions);

/// fraction > t50 -> easy, fraction < t25 -> hard, otherwise medium.
Difficulty classify_difficulty(double correct_fraction, const DifficultyThresholds& thresholds);

struct DifficultyAssignment {
  std::vector<Difficulty> levels;
  DifficultyThresholds thresholds;
};

DifficultyAssignment assign_difficulty(std::span<const double> correct_fractions);
std::vector<Difficulty> assign_difficulty(std::span<const double> correct_fractions,
                                          const DifficultyThresholds& frozen);

/// One MNL table per difficulty level.
class DifficultyExpert {
 public:
  DifficultyExpert() = default;
  DifficultyExpert(std::array<MnlExpert, kDifficultyLevels> tables,
                   DifficultyThresholds thresholds);
  static DifficultyExpert uniform(const MnlExpert& expert, DifficultyThresholds thresholds = {});

  std::size_t size() const noexcept { return tables_[0].size(); }
  const MnlExpert& table(Difficulty level) const {
    return tables_[static_cast<std::size_t>(level)];
  }
  const DifficultyThresholds& thresholds() const noexcept { return thresholds_; }

 private:
  std::array<MnlExpert, kDifficultyLevels> tables_;
  DifficultyThresholds thresholds_;
};

double conditional_success_difficulty(const DifficultyExpert& expert, Label true_label,
                                      const PredictionSet& set, Difficulty level);

}  // namespace predset
