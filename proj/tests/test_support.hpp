#pragma once

// Small random instances shared by the unit tests.

#include <random>
#include <vector>

#include "predset/conformal.hpp"
#include "predset/expert.hpp"

namespace testing {

inline std::vector<double> dirichlet_row(std::size_t n, double concentration, std::mt19937_64& rng) {
  std::gamma_distribution<double> g(concentration, 1.0);
  std::vector<double> r(n);
  double t = 0;
  for (double& v : r) t += (v = g(rng) + 1e-300);
  for (double& v : r) v /= t;
  return r;
}

/// Rows from a Dirichlet; labels drawn from the row itself, so scores are calibrated.
inline predset::LabeledScores random_scores(std::size_t rows, std::size_t n, std::mt19937_64& rng,
                                            double concentration = 0.5) {
  std::vector<double> values;
  values.reserve(rows * n);
  std::vector<predset::Label> labels(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto r = dirichlet_row(n, concentration, rng);
    std::discrete_distribution<int> pick(r.begin(), r.end());
    labels[i] = pick(rng);
    values.insert(values.end(), r.begin(), r.end());
  }
  return {predset::ScoreMatrix(rows, n, std::move(values)), std::move(labels)};
}

inline predset::ConfusionMatrix random_confusion(std::size_t n, std::mt19937_64& rng,
                                                 double diagonal_boost = 0.0) {
  std::vector<double> e(n * n);
  for (std::size_t y = 0; y < n; ++y) {
    auto r = dirichlet_row(n, 1.0, rng);
    r[y] += diagonal_boost;
    double t = 0;
    for (double v : r) t += v;
    for (std::size_t j = 0; j < n; ++j) e[y * n + j] = r[j] / t;
  }
  return predset::ConfusionMatrix(n, e);
}

}  // namespace testing
