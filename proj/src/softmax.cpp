#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include "predset/errors.hpp"
#include "predset/synthetic.hpp"

namespace predset {
namespace {

constexpr std::size_t kBlockRows = 256;

// Loss and gradient contribution of rows [begin, end), unnormalized.
double block_loss(const SoftmaxObjective& obj, std::span<const double> params, std::size_t begin,
                  std::size_t end, double* grad, std::vector<double>& logits) {
  const std::size_t d = obj.features();
  const std::size_t n = obj.num_labels();
  const std::size_t stride = d + 1;
  const auto design = obj.design();
  const auto labels = obj.labels();
  double loss = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    const double* x = design.data() + i * d;
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t y = 0; y < n; ++y) {
      const double* w = params.data() + y * stride;
      double z = w[d];
      for (std::size_t j = 0; j < d; ++j) z += w[j] * x[j];
      logits[y] = z;
      top = std::max(top, z);
    }
    double total = 0.0;
    for (std::size_t y = 0; y < n; ++y) {
      logits[y] = std::exp(logits[y] - top);
      total += logits[y];
    }
    const auto truth = static_cast<std::size_t>(labels[i]);
    loss += std::log(total) - std::log(logits[truth]);
    for (std::size_t y = 0; y < n; ++y) {
      const double r = logits[y] / total - (y == truth ? 1.0 : 0.0);
      double* g = grad + y * stride;
      for (std::size_t j = 0; j < d; ++j) g[j] += r * x[j];
      g[d] += r;
    }
  }
  return loss;
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

SoftmaxObjective::SoftmaxObjective(std::vector<double> design, std::size_t features,
                                   std::vector<Label> labels, std::size_t num_labels, double l2)
    : design_(std::move(design)), features_(features), labels_(std::move(labels)),
      num_labels_(num_labels), l2_(l2) {
  if (num_labels_ < 2) throw UsageError("softmax needs at least two labels");
  if (labels_.empty()) throw UsageError("no training rows");
  if (design_.size() != labels_.size() * features_) throw UsageError("design matrix shape mismatch");
  if (!(l2_ >= 0.0)) throw UsageError("l2 penalty must be non-negative");
  for (Label y : labels_) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_labels_) throw UsageError("label out of range");
  }
}

double SoftmaxObjective::value_and_gradient(std::span<const double> params,
                                            std::span<double> gradient) const {
  const std::size_t p = num_params();
  if (params.size() != p || gradient.size() != p) throw UsageError("parameter size mismatch");
  const std::size_t rows = labels_.size();
  const std::size_t blocks = (rows + kBlockRows - 1) / kBlockRows;
  std::vector<double> partial_grad(blocks * p, 0.0);
  std::vector<double> partial_loss(blocks, 0.0);

#pragma omp parallel
  {
    std::vector<double> logits(num_labels_);
#pragma omp for schedule(static)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(blocks); ++b) {
      const auto ub = static_cast<std::size_t>(b);
      const std::size_t begin = ub * kBlockRows;
      const std::size_t end = std::min(rows, begin + kBlockRows);
      partial_loss[ub] = block_loss(*this, params, begin, end, partial_grad.data() + ub * p, logits);
    }
  }

  const double inv = 1.0 / static_cast<double>(rows);
  double loss = 0.0;
  std::fill(gradient.begin(), gradient.end(), 0.0);
  for (std::size_t b = 0; b < blocks; ++b) {
    loss += partial_loss[b];
    const double* g = partial_grad.data() + b * p;
    for (std::size_t k = 0; k < p; ++k) gradient[k] += g[k];
  }
  loss *= inv;
  const std::size_t stride = features_ + 1;
  double penalty = 0.0;
  for (std::size_t k = 0; k < p; ++k) {
    gradient[k] *= inv;
    if (k % stride != features_) {
      penalty += params[k] * params[k];
      gradient[k] += l2_ * params[k];
    }
  }
  return loss + 0.5 * l2_ * penalty;
}

double SoftmaxObjective::value(std::span<const double> params) const {
  std::vector<double> scratch(num_params());
  return value_and_gradient(params, scratch);
}

double SoftmaxObjective::curvature_bound() const {
  double total = 0.0;
  for (double v : design_) total += v * v;
  const double mean_norm = total / static_cast<double>(labels_.size()) + 1.0;
  return 0.5 * mean_norm + l2_;
}

SoftmaxClassifier::SoftmaxClassifier(std::size_t features, std::size_t num_labels,
                                     std::vector<double> params, std::vector<double> mean,
                                     std::vector<double> scale)
    : features_(features), num_labels_(num_labels), params_(std::move(params)),
      mean_(std::move(mean)), scale_(std::move(scale)) {
  if (params_.size() != num_labels_ * (features_ + 1)) throw UsageError("parameter size mismatch");
  if (mean_.empty()) mean_.assign(features_, 0.0);
  if (scale_.empty()) scale_.assign(features_, 1.0);
  if (mean_.size() != features_ || scale_.size() != features_) {
    throw UsageError("standardization vectors have wrong length");
  }
}

void SoftmaxClassifier::predict_proba(std::span<const double> x, std::span<double> out) const {
  if (x.size() != features_) throw UsageError("feature count mismatch");
  if (out.size() != num_labels_) throw UsageError("output size mismatch");
  const std::size_t stride = features_ + 1;
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t y = 0; y < num_labels_; ++y) {
    const double* w = params_.data() + y * stride;
    double z = w[features_];
    for (std::size_t j = 0; j < features_; ++j) z += w[j] * (x[j] - mean_[j]) / scale_[j];
    out[y] = z;
    top = std::max(top, z);
  }
  double total = 0.0;
  for (double& v : out) {
    v = std::exp(v - top);
    total += v;
  }
  for (double& v : out) v /= total;
}

std::vector<double> SoftmaxClassifier::predict_proba(std::span<const double> x) const {
  std::vector<double> out(num_labels_);
  predict_proba(x, out);
  return out;
}

Label SoftmaxClassifier::predict(std::span<const double> x) const {
  const auto p = predict_proba(x);
  return static_cast<Label>(std::max_element(p.begin(), p.end()) - p.begin());
}

ScoreMatrix SoftmaxClassifier::score(const Dataset& data) const {
  std::vector<double> values(data.rows() * num_labels_);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    predict_proba(data.row(i), std::span<double>(values.data() + i * num_labels_, num_labels_));
  }
  return ScoreMatrix(data.rows(), num_labels_, std::move(values));
}

double SoftmaxClassifier::accuracy(const Dataset& data) const {
  if (data.rows() == 0) throw UsageError("empty dataset");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.rows(); ++i) hits += predict(data.row(i)) == data.y[i];
  return static_cast<double>(hits) / static_cast<double>(data.rows());
}

SoftmaxObjective make_objective(const Dataset& data, std::span<const std::size_t> rows, double l2,
                                std::vector<double>* mean_out, std::vector<double>* scale_out) {
  std::vector<std::size_t> all;
  if (rows.empty()) {
    all.resize(data.rows());
    std::iota(all.begin(), all.end(), 0);
    rows = all;
  }
  const std::size_t d = data.features;
  std::vector<double> mean(d, 0.0), scale(d, 0.0);
  for (std::size_t i : rows) {
    const auto r = data.row(i);
    for (std::size_t j = 0; j < d; ++j) mean[j] += r[j];
  }
  for (double& v : mean) v /= static_cast<double>(rows.size());
  for (std::size_t i : rows) {
    const auto r = data.row(i);
    for (std::size_t j = 0; j < d; ++j) scale[j] += (r[j] - mean[j]) * (r[j] - mean[j]);
  }
  for (double& v : scale) {
    v = std::sqrt(v / static_cast<double>(rows.size()));
    if (!(v > 0.0)) v = 1.0;
  }
  std::vector<double> design;
  design.reserve(rows.size() * d);
  std::vector<Label> labels;
  labels.reserve(rows.size());
  for (std::size_t i : rows) {
    const auto r = data.row(i);
    for (std::size_t j = 0; j < d; ++j) design.push_back((r[j] - mean[j]) / scale[j]);
    labels.push_back(data.y[i]);
  }
  if (mean_out) *mean_out = mean;
  if (scale_out) *scale_out = scale;
  return SoftmaxObjective(std::move(design), d, std::move(labels), data.num_labels, l2);
}

namespace {

struct Iterate {
  std::vector<double> w;
  std::vector<double> g;
  double f = 0.0;
};

void train_gd(const SoftmaxObjective& obj, const SoftmaxHyperparams& hyper, Iterate& it,
              TrainingReport& rep) {
  const double step = hyper.step > 0.0 ? hyper.step : 1.0 / obj.curvature_bound();
  std::vector<double> next(it.w.size()), next_g(it.w.size());
  for (rep.epochs = 0; rep.epochs < hyper.max_epochs; ++rep.epochs) {
    rep.gradient_norm = norm2(it.g);
    if (rep.gradient_norm < hyper.tolerance) {
      rep.converged = true;
      return;
    }
    for (std::size_t k = 0; k < next.size(); ++k) next[k] = it.w[k] - step * it.g[k];
    const double f = obj.value_and_gradient(next, next_g);
    it.w.swap(next);
    it.g.swap(next_g);
    it.f = f;
    rep.loss_history.push_back(f);
  }
  rep.gradient_norm = norm2(it.g);
  rep.converged = rep.gradient_norm < hyper.tolerance;
}

void train_lbfgs(const SoftmaxObjective& obj, const SoftmaxHyperparams& hyper, Iterate& it,
                 TrainingReport& rep) {
  const std::size_t p = it.w.size();
  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;
  std::vector<double> dir(p), trial(p), trial_g(p), alpha_buf;
  const double first_step = 1.0 / obj.curvature_bound();
  for (rep.epochs = 0; rep.epochs < hyper.max_epochs; ++rep.epochs) {
    rep.gradient_norm = norm2(it.g);
    if (rep.gradient_norm < hyper.tolerance) {
      rep.converged = true;
      return;
    }
    // Two-loop recursion.
    for (std::size_t k = 0; k < p; ++k) dir[k] = -it.g[k];
    alpha_buf.assign(s_hist.size(), 0.0);
    for (std::size_t h = s_hist.size(); h-- > 0;) {
      alpha_buf[h] = rho_hist[h] * dot(s_hist[h], dir);
      for (std::size_t k = 0; k < p; ++k) dir[k] -= alpha_buf[h] * y_hist[h][k];
    }
    double gamma = first_step;
    if (!s_hist.empty()) gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
    for (double& v : dir) v *= gamma;
    for (std::size_t h = 0; h < s_hist.size(); ++h) {
      const double beta = rho_hist[h] * dot(y_hist[h], dir);
      for (std::size_t k = 0; k < p; ++k) dir[k] += (alpha_buf[h] - beta) * s_hist[h][k];
    }
    double slope = dot(it.g, dir);
    if (!(slope < 0.0)) {
      for (std::size_t k = 0; k < p; ++k) dir[k] = -first_step * it.g[k];
      slope = dot(it.g, dir);
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }
    // Backtracking Armijo search.
    double t = 1.0;
    double f = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      for (std::size_t k = 0; k < p; ++k) trial[k] = it.w[k] + t * dir[k];
      f = obj.value_and_gradient(trial, trial_g);
      if (f <= it.f + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      rep.warning = "line search failed to decrease the loss";
      break;
    }
    std::vector<double> s(p), y(p);
    for (std::size_t k = 0; k < p; ++k) {
      s[k] = trial[k] - it.w[k];
      y[k] = trial_g[k] - it.g[k];
    }
    const double sy = dot(s, y);
    if (sy > 1e-12 * dot(y, y)) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (s_hist.size() > hyper.lbfgs_memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    it.w.swap(trial);
    it.g.swap(trial_g);
    it.f = f;
    rep.loss_history.push_back(f);
  }
  rep.gradient_norm = norm2(it.g);
  rep.converged = rep.gradient_norm < hyper.tolerance;
}

}  // namespace

SoftmaxClassifier train_softmax(const Dataset& data, std::span<const std::size_t> rows,
                                const SoftmaxHyperparams& hyper, TrainingReport* report) {
  std::vector<double> mean, scale;
  SoftmaxObjective obj = make_objective(data, rows, hyper.l2, &mean, &scale);
  if (!hyper.standardize) {
    // Re-run on raw features: identity standardization.
    std::vector<std::size_t> all;
    if (rows.empty()) {
      all.resize(data.rows());
      std::iota(all.begin(), all.end(), 0);
      rows = all;
    }
    std::vector<double> design;
    std::vector<Label> labels;
    for (std::size_t i : rows) {
      const auto r = data.row(i);
      design.insert(design.end(), r.begin(), r.end());
      labels.push_back(data.y[i]);
    }
    obj = SoftmaxObjective(std::move(design), data.features, std::move(labels), data.num_labels, hyper.l2);
    mean.assign(data.features, 0.0);
    scale.assign(data.features, 1.0);
  }

  Iterate it;
  it.w.assign(obj.num_params(), 0.0);
  it.g.assign(obj.num_params(), 0.0);
  it.f = obj.value_and_gradient(it.w, it.g);
  TrainingReport rep;
  rep.loss_history.push_back(it.f);
  if (hyper.optimizer == Optimizer::kGradientDescent) {
    train_gd(obj, hyper, it, rep);
  } else {
    train_lbfgs(obj, hyper, it, rep);
  }
  rep.loss = it.f;
  if (!rep.converged && rep.warning.empty()) {
    rep.warning = "did not converge in " + std::to_string(hyper.max_epochs) +
                  " epochs (gradient norm " + std::to_string(rep.gradient_norm) + ")";
  }
  if (report) *report = std::move(rep);
  return SoftmaxClassifier(data.features, data.num_labels, std::move(it.w), std::move(mean),
                           std::move(scale));
}

}  // namespace predset
