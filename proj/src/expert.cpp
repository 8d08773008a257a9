#include "predset/expert.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "predset/errors.hpp"

namespace predset {

namespace {

constexpr int kWeightBits = 50;
// Integer weight sums stay below 2^64 as long as n * 2^50 does.
constexpr std::size_t kMaxLabels = std::size_t{1} << 13;

void require_nonempty_member(const PredictionSet& set, Label y, std::size_t n) {
  if (set.empty()) throw UsageError("prediction set is empty");
  if (y < 0 || static_cast<std::size_t>(y) >= n) {
    throw UsageError("true label " + std::to_string(y) + " out of range");
  }
  if (!set.contains(y)) {
    throw UsageError("true label " + std::to_string(y) + " is not in the prediction set");
  }
}

double linear_quantile(std::vector<double> sorted, double q) {
  std::sort(sorted.begin(), sorted.end());
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(std::size_t n, std::vector<double> entries)
    : n_(n), entries_(std::move(entries)) {
  if (n_ < 2) throw UsageError("confusion matrix needs at least two labels");
  if (entries_.size() != n_ * n_) throw UsageError("confusion matrix must be n x n");
  for (std::size_t y = 0; y < n_; ++y) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n_; ++k) {
      const double v = entries_[y * n_ + k];
      if (!(v >= 0.0)) {
        throw UsageError("confusion entry (" + std::to_string(y) + "," + std::to_string(k) +
                         ") is negative or NaN");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw UsageError("confusion row " + std::to_string(y) + " sums to " + std::to_string(sum));
    }
  }
}

ConfusionMatrix ConfusionMatrix::identity(std::size_t n) {
  std::vector<double> e(n * n, 0.0);
  for (std::size_t y = 0; y < n; ++y) e[y * n + y] = 1.0;
  return ConfusionMatrix(n, std::move(e));
}

double ConfusionMatrix::weighted_diagonal(std::span<const double> class_weights) const {
  if (class_weights.size() != n_) throw UsageError("class weight vector has wrong length");
  double acc = 0.0;
  for (std::size_t y = 0; y < n_; ++y) acc += class_weights[y] * at(y, y);
  return acc;
}

MnlExpert::MnlExpert(std::size_t n, std::vector<double> utilities)
    : n_(n), utilities_(std::move(utilities)), weights_(n * n) {
  if (n_ < 2) throw UsageError("expert needs at least two labels");
  if (n_ > kMaxLabels) throw UsageError("expert supports at most 8192 labels");
  if (utilities_.size() != n_ * n_) throw UsageError("utility table must be n x n");
  for (std::size_t y = 0; y < n_; ++y) {
    const auto first = utilities_.begin() + static_cast<std::ptrdiff_t>(y * n_);
    const double top = *std::max_element(first, first + static_cast<std::ptrdiff_t>(n_));
    if (!std::isfinite(top)) throw UsageError("utilities must be finite");
    for (std::size_t k = 0; k < n_; ++k) {
      const double u = utilities_[y * n_ + k];
      if (!std::isfinite(u)) throw UsageError("utilities must be finite");
      const double scaled = std::ldexp(std::exp(u - top), kWeightBits);
      weights_[y * n_ + k] = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(scaled)));
    }
  }
}

MnlExpert MnlExpert::from_confusion(const ConfusionMatrix& confusion) {
  const std::size_t n = confusion.size();
  std::vector<double> u(n * n);
  for (std::size_t k = 0; k < n * n; ++k) {
    u[k] = std::log(std::max(confusion.entries()[k], kConfusionFloor));
  }
  return MnlExpert(n, std::move(u));
}

double conditional_success(const MnlExpert& expert, Label true_label, const PredictionSet& set) {
  require_nonempty_member(set, true_label, expert.size());
  const auto w = expert.weights(true_label);
  std::uint64_t total = 0;
  for (Label y : set) total += w[static_cast<std::size_t>(y)];
  return static_cast<double>(w[static_cast<std::size_t>(true_label)]) /
         static_cast<double>(total);
}

double choice_probability(const MnlExpert& expert, Label true_label, Label choice,
                          const PredictionSet& set) {
  if (set.empty()) throw UsageError("prediction set is empty");
  if (!set.contains(choice)) return 0.0;
  const auto w = expert.weights(true_label);
  std::uint64_t total = 0;
  for (Label y : set) total += w[static_cast<std::size_t>(y)];
  return static_cast<double>(w[static_cast<std::size_t>(choice)]) / static_cast<double>(total);
}

Label sample_prediction(const MnlExpert& expert, Label true_label, const PredictionSet& set,
                        std::mt19937_64& rng) {
  if (set.empty()) throw UsageError("cannot sample from an empty prediction set");
  const auto w = expert.weights(true_label);
  std::uint64_t total = 0;
  for (Label y : set) total += w[static_cast<std::size_t>(y)];
  std::uniform_int_distribution<std::uint64_t> pick(0, total - 1);
  std::uint64_t ticket = pick(rng);
  for (Label y : set) {
    const std::uint64_t wy = w[static_cast<std::size_t>(y)];
    if (ticket < wy) return y;
    ticket -= wy;
  }
  return set.members().back();
}

double softmax_success(std::span<const double> utility_row, Label true_label,
                       const PredictionSet& set) {
  if (set.empty()) throw UsageError("prediction set is empty");
  if (!set.contains(true_label)) return 0.0;
  double top = -std::numeric_limits<double>::infinity();
  for (Label y : set) top = std::max(top, utility_row[static_cast<std::size_t>(y)]);
  double total = 0.0;
  for (Label y : set) total += std::exp(utility_row[static_cast<std::size_t>(y)] - top);
  return std::exp(utility_row[static_cast<std::size_t>(true_label)] - top) / total;
}

std::vector<double> violated_utilities(const ConfusionMatrix& confusion, Label true_label,
                                       const PredictionSet& set, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw UsageError("violation severity p must lie in [0,1]");
  const std::size_t n = confusion.size();
  const auto row = confusion.row(static_cast<std::size_t>(true_label));
  const std::size_t others = set.size() - (set.contains(true_label) ? 1 : 0);
  double outside = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (!set.contains(static_cast<Label>(k))) outside += row[k];
  }
  const double bump = others == 0 ? 0.0 : p * outside / static_cast<double>(others);
  std::vector<double> u(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double c = static_cast<Label>(k) == true_label ? row[k] : row[k] + bump;
    u[k] = std::log(std::max(c, kConfusionFloor));
  }
  return u;
}

double violated_conditional_success(const ConfusionMatrix& confusion, Label true_label,
                                    const PredictionSet& set, double p) {
  if (set.empty() || !set.contains(true_label)) return 0.0;
  return softmax_success(violated_utilities(confusion, true_label, set, p), true_label, set);
}

Label sample_violated_prediction(const ConfusionMatrix& confusion, Label true_label,
                                 const PredictionSet& set, double p, std::mt19937_64& rng) {
  if (set.empty()) throw UsageError("cannot sample from an empty prediction set");
  const auto u = violated_utilities(confusion, true_label, set, p);
  std::vector<double> probs;
  probs.reserve(set.size());
  double top = -std::numeric_limits<double>::infinity();
  for (Label y : set) top = std::max(top, u[static_cast<std::size_t>(y)]);
  for (Label y : set) probs.push_back(std::exp(u[static_cast<std::size_t>(y)] - top));
  std::discrete_distribution<std::size_t> pick(probs.begin(), probs.end());
  return set.members()[pick(rng)];
}

ConfusionMatrix estimate_confusion(std::span<const std::pair<Label, Label>> predictions,
                                   std::size_t n) {
  if (n < 2) throw UsageError("confusion matrix needs at least two labels");
  std::vector<double> counts(n * n, 0.0);
  std::vector<std::size_t> totals(n, 0);
  for (const auto& [truth, pred] : predictions) {
    if (truth < 0 || static_cast<std::size_t>(truth) >= n || pred < 0 ||
        static_cast<std::size_t>(pred) >= n) {
      throw UsageError("prediction pair (" + std::to_string(truth) + "," + std::to_string(pred) +
                       ") outside label range");
    }
    counts[static_cast<std::size_t>(truth) * n + static_cast<std::size_t>(pred)] += 1.0;
    ++totals[static_cast<std::size_t>(truth)];
  }
  for (std::size_t y = 0; y < n; ++y) {
    if (totals[y] == 0) throw UnobservedClass(static_cast<int>(y), "no expert predictions");
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      double& c = counts[y * n + k];
      c = std::max(c / static_cast<double>(totals[y]), kConfusionFloor);
      sum += c;
    }
    for (std::size_t k = 0; k < n; ++k) counts[y * n + k] /= sum;
  }
  return ConfusionMatrix(n, std::move(counts));
}

std::string to_string(Difficulty level) {
  switch (level) {
    case Difficulty::kEasy: return "easy";
    case Difficulty::kMedium: return "medium";
    case Difficulty::kHard: return "hard";
  }
  return "unknown";
}

DifficultyThresholds difficulty_thresholds(std::span<const double> correct_fractions) {
  if (correct_fractions.empty()) return {};
  std::vector<double> v(correct_fractions.begin(), correct_fractions.end());
  for (double f : v) {
    if (!(f >= 0.0 && f <= 1.0)) throw UsageError("correct fractions must lie in [0,1]");
  }
  return {linear_quantile(v, 0.5), linear_quantile(v, 0.25)};
}

Difficulty classify_difficulty(double correct_fraction, const DifficultyThresholds& thresholds) {
  if (correct_fraction > thresholds.t50) return Difficulty::kEasy;
  if (correct_fraction < thresholds.t25) return Difficulty::kHard;
  return Difficulty::kMedium;
}

DifficultyAssignment assign_difficulty(std::span<const double> correct_fractions) {
  DifficultyAssignment out;
  out.thresholds = difficulty_thresholds(correct_fractions);
  out.levels = assign_difficulty(correct_fractions, out.thresholds);
  return out;
}

std::vector<Difficulty> assign_difficulty(std::span<const double> correct_fractions,
                                          const DifficultyThresholds& frozen) {
  std::vector<Difficulty> levels;
  levels.reserve(correct_fractions.size());
  for (double f : correct_fractions) levels.push_back(classify_difficulty(f, frozen));
  return levels;
}

DifficultyExpert::DifficultyExpert(std::array<MnlExpert, kDifficultyLevels> tables,
                                   DifficultyThresholds thresholds)
    : tables_(std::move(tables)), thresholds_(thresholds) {
  if (thresholds_.t25 > thresholds_.t50) throw UsageError("difficulty thresholds need t25 <= t50");
  for (const auto& t : tables_) {
    if (t.size() != tables_[0].size()) throw UsageError("difficulty tables disagree on n");
  }
}

DifficultyExpert DifficultyExpert::uniform(const MnlExpert& expert, DifficultyThresholds thresholds) {
  return DifficultyExpert({expert, expert, expert}, thresholds);
}

double conditional_success_difficulty(const DifficultyExpert& expert, Label true_label,
                                      const PredictionSet& set, Difficulty level) {
  return conditional_success(expert.table(level), true_label, set);
}

}  // namespace predset
