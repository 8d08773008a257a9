#pragma once

// Synthetic multiclass tasks (Gaussian clusters on hypercube vertices), a softmax
// regression classifier trained on them, and synthetic expert confusion matrices.

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "predset/conformal.hpp"
#include "predset/expert.hpp"

namespace predset {

struct TaskSpec {
  std::size_t n = 10;
  std::size_t informative = 15;
  std::size_t redundant = 5;
  double class_sep = 1.0;
  /// Empty: drawn from a flat Dirichlet by generate_task.
  std::vector<double> class_weights;
  std::size_t samples = 10000;
  std::uint64_t seed = 0;
  std::size_t clusters_per_class = 2;
  /// Multiply each cluster by a random U(-1,1) matrix (correlated, non-unit variance).
  bool covariance_mixing = true;
  /// Fraction of labels reassigned uniformly at random after generation.
  double flip_y = 0.01;
};

struct Dataset {
  std::size_t features = 0;
  std::size_t num_labels = 0;
  std::vector<double> x;  // row-major, rows() x features
  std::vector<Label> y;

  std::size_t rows() const noexcept { return y.size(); }
  std::span<const double> row(std::size_t i) const { return {x.data() + i * features, features}; }
  Dataset select(std::span<const std::size_t> rows) const;
  std::vector<double> class_frequencies() const;
};

std::vector<double> dirichlet_weights(std::size_t n, std::mt19937_64& rng);

/// Per cluster: standard normal points (optionally mixed by a random matrix) shifted to a
/// distinct vertex of the hypercube {-class_sep, +class_sep}^informative; redundant
/// features are random linear combinations of the informative ones. Throws UsageError
/// when n < 2 or there are more clusters than vertices.
Dataset generate_task(const TaskSpec& spec, std::mt19937_64& rng);

void write_dataset_csv(std::ostream& out, const Dataset& data);
Dataset read_dataset_csv(std::istream& in, const std::string& name, std::size_t num_labels);

struct SplitSpec {
  std::size_t m_cal = 1200;
  std::size_t m_est = 1200;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
};

/// Disjoint, exhaustive index sets; training gets whatever remains.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> cal;
  std::vector<std::size_t> est;
  std::vector<std::size_t> test;
};

/// Shuffles rows, takes the test fraction first, then m_cal and m_est from the rest.
/// Throws UsageError if the remainder leaves no training rows.
Split make_split(std::size_t rows, const SplitSpec& spec, std::mt19937_64& rng);

/// Verifies disjointness and coverage; throws UsageError otherwise.
void check_split(const Split& split, std::size_t rows);

enum class Optimizer { kGradientDescent, kLbfgs };

struct SoftmaxHyperparams {
  double l2 = 1e-4;
  std::size_t max_epochs = 2000;
  double tolerance = 1e-6;
  Optimizer optimizer = Optimizer::kLbfgs;
  /// Gradient-descent step; 0 selects 1/L from a bound on the loss curvature.
  double step = 0.0;
  std::size_t lbfgs_memory = 10;
  bool standardize = true;
};

struct TrainingReport {
  std::size_t epochs = 0;
  double loss = 0.0;
  double gradient_norm = 0.0;
  bool converged = false;
  std::vector<double> loss_history;
  std::string warning;
};

/// Mean cross-entropy of a linear softmax model plus (l2/2)||W||^2 (intercepts excluded).
/// Parameters are laid out label-major: params[y*(d+1) + j], column d is the intercept.
class SoftmaxObjective {
 public:
  SoftmaxObjective(std::vector<double> design, std::size_t features, std::vector<Label> labels,
                   std::size_t num_labels, double l2);

  std::size_t num_params() const noexcept { return num_labels_ * (features_ + 1); }
  std::size_t rows() const noexcept { return labels_.size(); }
  std::size_t features() const noexcept { return features_; }
  std::size_t num_labels() const noexcept { return num_labels_; }
  std::span<const double> design() const noexcept { return design_; }
  std::span<const Label> labels() const noexcept { return labels_; }
  double l2() const noexcept { return l2_; }

  /// Parallel over fixed row blocks, reduced in block order: the result does not depend
  /// on the thread count.
  double value_and_gradient(std::span<const double> params, std::span<double> gradient) const;
  double value(std::span<const double> params) const;

  /// Upper bound on the largest Hessian eigenvalue: 0.5 * mean ||[x, 1]||^2 + l2
  /// (the per-row logit Hessian has spectral norm at most 1/2).
  double curvature_bound() const;

 private:
  std::vector<double> design_;  // rows x features (standardized, no intercept column)
  std::size_t features_;
  std::vector<Label> labels_;
  std::size_t num_labels_;
  double l2_;
};

class SoftmaxClassifier {
 public:
  SoftmaxClassifier() = default;
  SoftmaxClassifier(std::size_t features, std::size_t num_labels, std::vector<double> params,
                    std::vector<double> mean, std::vector<double> scale);

  std::size_t features() const noexcept { return features_; }
  std::size_t num_labels() const noexcept { return num_labels_; }
  std::span<const double> params() const noexcept { return params_; }

  void predict_proba(std::span<const double> x, std::span<double> out) const;
  std::vector<double> predict_proba(std::span<const double> x) const;
  /// Argmax with ties to the lower label.
  Label predict(std::span<const double> x) const;
  ScoreMatrix score(const Dataset& data) const;
  double accuracy(const Dataset& data) const;

 private:
  std::size_t features_ = 0;
  std::size_t num_labels_ = 0;
  std::vector<double> params_;
  std::vector<double> mean_;
  std::vector<double> scale_;
};

/// Builds the standardized objective for the given rows (all rows when `rows` is empty).
SoftmaxObjective make_objective(const Dataset& data, std::span<const std::size_t> rows,
                                double l2, std::vector<double>* mean = nullptr,
                                std::vector<double>* scale = nullptr);

/// Full-batch training from zero weights. Stops when the gradient norm falls below the
/// tolerance or after max_epochs; on non-convergence the report carries a warning and the
/// best iterate is returned.
SoftmaxClassifier train_softmax(const Dataset& data, std::span<const std::size_t> rows,
                                const SoftmaxHyperparams& hyper = {},
                                TrainingReport* report = nullptr);

struct SynthConfusionOptions {
  /// Scale of the random perturbation U(0, min(1 - pi/n, pi/n)) applied to the diagonal.
  double diagonal_noise = 0.25;
  /// Gaussian jitter with std (1 - C_yy)/(6n) on the off-diagonal entries.
  bool off_diagonal_noise = true;
};

/// Confusion matrix whose class-weighted diagonal equals `target_accuracy`. The diagonal
/// is pi/n perturbed per row, off-diagonals (1 - C_yy)/n perturbed, clamped at 0 and
/// rescaled so each row sums to 1; pi is found by bisection. Throws UsageError when the
/// target lies outside (0, 1] or cannot be reached within 0.02.
ConfusionMatrix synth_confusion(std::size_t n, double target_accuracy,
                                std::span<const double> class_weights, std::mt19937_64& rng,
                                const SynthConfusionOptions& options = {});

}  // namespace predset
