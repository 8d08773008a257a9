#include "predset/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/math/special_functions/beta.hpp>

#include "predset/errors.hpp"

namespace predset {

namespace {

constexpr double kSnapTolerance = 1e-9;

double snapped(double x) {
  const double r = std::round(x);
  return std::abs(x - r) <= kSnapTolerance * std::max(1.0, std::abs(x)) ? r : x;
}

void require_alpha(double alpha, const char* name) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw UsageError(std::string(name) + " must lie in (0,1), got " + std::to_string(alpha));
  }
}

}  // namespace

ScoreMatrix::ScoreMatrix(std::size_t rows, std::size_t labels, std::vector<double> values)
    : rows_(rows), labels_(labels), values_(std::move(values)) {
  if (rows_ < 1) throw UsageError("score matrix needs at least one row");
  if (labels_ < 2) throw UsageError("score matrix needs at least two labels");
  if (values_.size() != rows_ * labels_) {
    throw UsageError("score matrix size mismatch: expected " + std::to_string(rows_ * labels_) +
                     " values, got " + std::to_string(values_.size()));
  }
  for (std::size_t k = 0; k < values_.size(); ++k) {
    const double v = values_[k];
    if (!(v >= 0.0 && v <= 1.0)) {
      throw UsageError("score at row " + std::to_string(k / labels_) + ", label " +
                       std::to_string(k % labels_) + " outside [0,1]: " + std::to_string(v));
    }
  }
}

ScoreMatrix ScoreMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw UsageError("score matrix needs at least one row");
  const std::size_t n = rows.front().size();
  std::vector<double> values;
  values.reserve(rows.size() * n);
  for (const auto& r : rows) {
    if (r.size() != n) throw UsageError("ragged score rows");
    values.insert(values.end(), r.begin(), r.end());
  }
  return ScoreMatrix(rows.size(), n, std::move(values));
}

std::span<const double> ScoreMatrix::row(std::size_t i) const {
  if (i >= rows_) throw UsageError("row index " + std::to_string(i) + " out of range");
  return {values_.data() + i * labels_, labels_};
}

double ScoreMatrix::at(std::size_t i, std::size_t label) const {
  if (i >= rows_ || label >= labels_) {
    throw UsageError("score index (" + std::to_string(i) + ", " + std::to_string(label) +
                     ") out of range");
  }
  return values_[i * labels_ + label];
}

ScoreMatrix ScoreMatrix::select(std::span<const std::size_t> row_indices) const {
  std::vector<double> out;
  out.reserve(row_indices.size() * labels_);
  for (std::size_t i : row_indices) {
    const auto r = row(i);
    out.insert(out.end(), r.begin(), r.end());
  }
  return ScoreMatrix(row_indices.size(), labels_, std::move(out));
}

LabeledScores::LabeledScores(ScoreMatrix scores, std::vector<Label> labels)
    : scores_(std::move(scores)), labels_(std::move(labels)) {
  if (labels_.size() != scores_.rows()) {
    throw UsageError("label count " + std::to_string(labels_.size()) + " != score rows " +
                     std::to_string(scores_.rows()));
  }
  const auto n = static_cast<Label>(scores_.labels());
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] < 0 || labels_[i] >= n) {
      throw UsageError("label " + std::to_string(labels_[i]) + " at row " + std::to_string(i) +
                       " outside [0," + std::to_string(n) + ")");
    }
  }
}

LabeledScores LabeledScores::subset(std::span<const std::size_t> row_indices) const {
  std::vector<Label> labels;
  labels.reserve(row_indices.size());
  for (std::size_t i : row_indices) labels.push_back(labels_.at(i));
  return LabeledScores(scores_.select(row_indices), std::move(labels));
}

PredictionSet::PredictionSet(std::vector<Label> members) : members_(std::move(members)) {
  std::sort(members_.begin(), members_.end());
  members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
}

PredictionSet PredictionSet::full(std::size_t num_labels) {
  std::vector<Label> all(num_labels);
  for (std::size_t y = 0; y < num_labels; ++y) all[y] = static_cast<Label>(y);
  return PredictionSet(std::move(all));
}

bool PredictionSet::contains(Label y) const noexcept {
  return std::binary_search(members_.begin(), members_.end(), y);
}

bool PredictionSet::is_subset_of(const PredictionSet& other) const {
  return std::includes(other.members_.begin(), other.members_.end(), members_.begin(),
                       members_.end());
}

double conformal_score(const ScoreMatrix& scores, std::size_t row, std::size_t label) {
  return 1.0 - scores.at(row, label);
}

std::vector<double> calibration_scores(const LabeledScores& cal) {
  std::vector<double> s(cal.size());
  for (std::size_t i = 0; i < cal.size(); ++i) {
    s[i] = conformal_score(cal.scores(), i, static_cast<std::size_t>(cal.label(i)));
  }
  return s;
}

std::size_t quantile_rank(std::size_t m, double alpha) {
  require_alpha(alpha, "alpha");
  const double x = snapped(static_cast<double>(m + 1) * (1.0 - alpha));
  return static_cast<std::size_t>(std::ceil(x));
}

std::size_t upper_tail_count(std::size_t m, double alpha) {
  require_alpha(alpha, "alpha");
  const double x = snapped(static_cast<double>(m + 1) * alpha);
  return static_cast<std::size_t>(std::floor(x));
}

double empirical_quantile(std::span<const double> cal_scores, double alpha) {
  if (cal_scores.empty()) throw UsageError("empty calibration scores");
  const std::size_t m = cal_scores.size();
  const std::size_t k = quantile_rank(m, alpha);
  if (k > m) return kFullSetThreshold;
  std::vector<double> sorted(cal_scores.begin(), cal_scores.end());
  std::sort(sorted.begin(), sorted.end());
  return sorted[k - 1];
}

ConformalPredictor calibrate(std::span<const double> cal_scores, double alpha) {
  return {empirical_quantile(cal_scores, alpha), alpha, cal_scores.size()};
}

ConformalPredictor calibrate(const LabeledScores& cal, double alpha) {
  return calibrate(calibration_scores(cal), alpha);
}

TwoThresholdPredictor calibrate_two_threshold(std::span<const double> cal_scores, double alpha1,
                                              double alpha2) {
  if (!(alpha1 < alpha2)) throw UsageError("two-threshold predictor requires alpha1 < alpha2");
  TwoThresholdPredictor p;
  p.q_high = empirical_quantile(cal_scores, alpha1);
  p.q_low = empirical_quantile(cal_scores, alpha2);
  p.alpha1 = alpha1;
  p.alpha2 = alpha2;
  p.m = cal_scores.size();
  return p;
}

PredictionSet build_set(const ConformalPredictor& predictor, std::span<const double> sample_scores) {
  std::vector<Label> members;
  for (std::size_t y = 0; y < sample_scores.size(); ++y) {
    if (1.0 - sample_scores[y] <= predictor.q_hat) members.push_back(static_cast<Label>(y));
  }
  return PredictionSet(std::move(members));
}

PredictionSet build_two_threshold_set(const TwoThresholdPredictor& predictor,
                                      std::span<const double> sample_scores) {
  if (!(predictor.alpha1 < predictor.alpha2)) {
    throw UsageError("two-threshold predictor requires alpha1 < alpha2");
  }
  std::vector<Label> members;
  for (std::size_t y = 0; y < sample_scores.size(); ++y) {
    const double s = 1.0 - sample_scores[y];
    if (s > predictor.q_low && s <= predictor.q_high) members.push_back(static_cast<Label>(y));
  }
  return PredictionSet(std::move(members));
}

BetaParams coverage_beta_params(std::size_t m, double alpha) {
  if (m < 1) throw UsageError("calibration size must be positive");
  const std::size_t k = quantile_rank(m, alpha);
  if (k < 1 || k > m) {
    throw UsageError("coverage law undefined: quantile rank " + std::to_string(k) +
                     " outside [1," + std::to_string(m) + "]");
  }
  return {static_cast<double>(k), static_cast<double>(upper_tail_count(m, alpha))};
}

BetaParams two_threshold_beta_params(std::size_t m, double alpha1, double alpha2) {
  if (!(alpha1 < alpha2)) throw UsageError("two-threshold law requires alpha1 < alpha2");
  const auto k1 = static_cast<long long>(quantile_rank(m, alpha1));
  const auto k2 = static_cast<long long>(quantile_rank(m, alpha2));
  const long long l = k1 - k2;
  if (l < 1) throw UsageError("empty band: l = " + std::to_string(l) + " has no Beta law");
  if (k1 > static_cast<long long>(m)) {
    throw UsageError("upper quantile rank exceeds calibration size");
  }
  return {static_cast<double>(l), static_cast<double>(static_cast<long long>(m) - l + 1)};
}

double coverage_band_mass(std::size_t m, double alpha, double lo, double hi) {
  lo = std::max(lo, 0.0);
  hi = std::min(hi, 1.0);
  if (lo > hi) return 0.0;
  const std::size_t k = quantile_rank(m, alpha);
  if (k > m) return hi >= 1.0 ? 1.0 : 0.0;
  const BetaParams beta = coverage_beta_params(m, alpha);
  const double upper = hi >= 1.0 ? 1.0 : boost::math::ibeta(beta.a, beta.b, hi);
  const double lower = lo <= 0.0 ? 0.0 : boost::math::ibeta(beta.a, beta.b, lo);
  return upper - lower;
}

std::size_t min_calibration_size(double alpha, double epsilon, double delta, std::size_t max_m) {
  require_alpha(alpha, "alpha");
  require_alpha(epsilon, "epsilon");
  require_alpha(delta, "delta");
  const double lo = 1.0 - alpha - epsilon;
  const double hi = 1.0 - alpha + epsilon;
  for (std::size_t m = 1; m <= max_m; ++m) {
    if (coverage_band_mass(m, alpha, lo, hi) >= 1.0 - delta) return m;
  }
  throw CeilingReached("no calibration size up to " + std::to_string(max_m) +
                       " reaches the requested coverage band");
}

std::size_t count_ties(std::span<const double> scores) {
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  std::size_t ties = 0;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i] == sorted[i - 1]) ++ties;
  }
  return ties;
}

std::vector<double> jitter_ties(std::span<const double> scores, std::mt19937_64& rng,
                                double magnitude) {
  std::vector<double> out(scores.begin(), scores.end());
  std::vector<std::size_t> order(out.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::uniform_real_distribution<double> noise(-magnitude, magnitude);
  for (std::size_t r = 0; r < order.size(); ++r) {
    const bool tied = (r > 0 && scores[order[r]] == scores[order[r - 1]]) ||
                      (r + 1 < order.size() && scores[order[r]] == scores[order[r + 1]]);
    if (tied) out[order[r]] = std::clamp(out[order[r]] + noise(rng), 0.0, 1.0);
  }
  return out;
}

}  // namespace predset
