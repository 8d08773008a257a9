#pragma once

// Split-conformal prediction sets over classifier scores: conformal scores,
// calibrated quantile thresholds, single- and two-threshold set construction,
// and the Beta laws governing coverage conditional on the calibration set.

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace predset {

using Label = std::int32_t;

/// Threshold value meaning "no calibrated cut": every label is admitted.
inline constexpr double kFullSetThreshold = std::numeric_limits<double>::infinity();

/// Row-major matrix of classifier scores in [0,1], one row per sample, one column per label.
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  /// Throws UsageError unless rows >= 1, labels >= 2, values.size() == rows*labels
  /// and every entry lies in [0,1].
  ScoreMatrix(std::size_t rows, std::size_t labels, std::vector<double> values);

  static ScoreMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t labels() const noexcept { return labels_; }
  std::span<const double> row(std::size_t i) const;
  double at(std::size_t i, std::size_t label) const;
  const std::vector<double>& values() const noexcept { return values_; }

  ScoreMatrix select(std::span<const std::size_t> row_indices) const;

 private:
  std::size_t rows_ = 0;
  std::size_t labels_ = 0;
  std::vector<double> values_;
};

/// Scores paired with the true label of every row.
class LabeledScores {
 public:
  LabeledScores() = default;
  LabeledScores(ScoreMatrix scores, std::vector<Label> labels);

  const ScoreMatrix& scores() const noexcept { return scores_; }
  std::span<const Label> labels() const noexcept { return labels_; }
  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t num_labels() const noexcept { return scores_.labels(); }
  std::span<const double> row(std::size_t i) const { return scores_.row(i); }
  Label label(std::size_t i) const { return labels_[i]; }

  LabeledScores subset(std::span<const std::size_t> row_indices) const;

 private:
  ScoreMatrix scores_;
  std::vector<Label> labels_;
};

/// Sorted set of admitted label indices. May be empty (two-threshold bands).
class PredictionSet {
 public:
  PredictionSet() = default;
  /// Sorts and deduplicates.
  explicit PredictionSet(std::vector<Label> members);
  static PredictionSet full(std::size_t num_labels);

  bool contains(Label y) const noexcept;
  std::size_t size() const noexcept { return members_.size(); }
  bool empty() const noexcept { return members_.empty(); }
  std::span<const Label> members() const noexcept { return members_; }
  auto begin() const noexcept { return members_.begin(); }
  auto end() const noexcept { return members_.end(); }

  bool is_subset_of(const PredictionSet& other) const;
  friend bool operator==(const PredictionSet&, const PredictionSet&) = default;

 private:
  std::vector<Label> members_;
};

struct ConformalPredictor {
  double q_hat = kFullSetThreshold;
  double alpha = 0.5;
  std::size_t m = 0;
};

/// Admits labels whose conformal score lies in (q_low, q_high].
struct TwoThresholdPredictor {
  double q_low = 0.0;
  double q_high = kFullSetThreshold;
  double alpha1 = 0.0;  // produces q_high
  double alpha2 = 1.0;  // produces q_low
  std::size_t m = 0;
};

struct BetaParams {
  double a = 1.0;
  double b = 1.0;
  double mean() const noexcept { return a / (a + b); }
  double variance() const noexcept { return a * b / ((a + b) * (a + b) * (a + b + 1.0)); }
};

/// s(x, y) = 1 - f_y(x).
double conformal_score(const ScoreMatrix& scores, std::size_t row, std::size_t label);

/// Conformal scores of the true labels, in row order.
std::vector<double> calibration_scores(const LabeledScores& cal);

/// ceil((m+1)(1-alpha)), with products within 1e-9 of an integer snapped to it so that
/// grid values alpha_i = 1 - i/(m+1) map back to rank i exactly.
std::size_t quantile_rank(std::size_t m, double alpha);

/// floor((m+1) alpha) with the same snapping as quantile_rank.
std::size_t upper_tail_count(std::size_t m, double alpha);

/// k-th smallest calibration score with k = quantile_rank(m, alpha), or
/// kFullSetThreshold when k > m. Sorts a copy; O(m log m).
double empirical_quantile(std::span<const double> cal_scores, double alpha);

ConformalPredictor calibrate(std::span<const double> cal_scores, double alpha);
ConformalPredictor calibrate(const LabeledScores& cal, double alpha);

/// Requires alpha1 < alpha2.
TwoThresholdPredictor calibrate_two_threshold(std::span<const double> cal_scores, double alpha1,
                                              double alpha2);

PredictionSet build_set(const ConformalPredictor& predictor, std::span<const double> sample_scores);
PredictionSet build_two_threshold_set(const TwoThresholdPredictor& predictor,
                                      std::span<const double> sample_scores);
inline PredictionSet build_set(const TwoThresholdPredictor& predictor,
                               std::span<const double> sample_scores) {
  return build_two_threshold_set(predictor, sample_scores);
}

/// Anything that maps a score row to a prediction set.
template <typename P>
concept SetPredictor = requires(const P& p, std::span<const double> row) {
  { build_set(p, row) } -> std::same_as<PredictionSet>;
};

/// Law of P[Y in C_alpha(X) | D_cal]: Beta(ceil((m+1)(1-alpha)), floor((m+1)alpha)).
/// Requires 1 <= ceil((m+1)(1-alpha)) <= m.
BetaParams coverage_beta_params(std::size_t m, double alpha);

/// Law of the two-threshold coverage: Beta(l, m-l+1) with
/// l = ceil((m+1)(1-alpha1)) - ceil((m+1)(1-alpha2)). Requires alpha1 < alpha2 and l >= 1.
BetaParams two_threshold_beta_params(std::size_t m, double alpha1, double alpha2);

/// Probability mass a coverage law places on [lo, hi]. Handles the degenerate
/// full-set case (quantile rank beyond m) as a point mass at 1.
double coverage_band_mass(std::size_t m, double alpha, double lo, double hi);

/// Smallest m such that coverage lies in [1-alpha-epsilon, 1-alpha+epsilon] with
/// probability at least 1-delta over calibration draws. Throws CeilingReached past max_m.
std::size_t min_calibration_size(double alpha, double epsilon, double delta,
                                 std::size_t max_m = 1'000'000);

/// Number of adjacent equal pairs among the sorted scores.
std::size_t count_ties(std::span<const double> scores);

/// Diagnostic copy of the scores with every tied value perturbed by U(-magnitude, magnitude)
/// and clamped to [0,1]. Set construction itself never jitters.
std::vector<double> jitter_ties(std::span<const double> scores, std::mt19937_64& rng,
                                double magnitude = 1e-10);

}  // namespace predset
