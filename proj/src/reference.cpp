#include "predset/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "predset/errors.hpp"

namespace predset::reference {

std::vector<double> success_curve(std::span<const double> sorted_cal, const LabeledScores& data,
                                  const ExpertBinding& expert) {
  const std::size_t m = sorted_cal.size();
  const CandidateGrid grid(m);
  std::vector<double> curve(m);
  for (std::size_t rank = 1; rank <= m; ++rank) {
    const ConformalPredictor predictor{sorted_cal[rank - 1], grid.alpha(rank), m};
    curve[rank - 1] = monte_carlo_success(predictor, data, expert);
  }
  return curve;
}

SearchResult find_near_optimal_alpha(const LabeledScores& cal, const LabeledScores& est,
                                     const ExpertBinding& expert, double delta) {
  const std::size_t m = cal.size();
  const CandidateGrid grid(m);
  const double delta_used = delta / static_cast<double>(m);
  SearchResult result;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t rank = 1; rank <= m; ++rank) {
    // Calibrate exactly as a user would, from alpha alone.
    const ConformalPredictor predictor = calibrate(cal, grid.alpha(rank));
    const EstimateReport r = estimate(predictor, est, expert, delta_used);
    if (r.lower_bound() >= best) {
      best = r.lower_bound();
      result.rank_hat = rank;
      result.alpha_hat = r.alpha;
      result.predictor = predictor;
    }
    result.reports.push_back(r);
  }
  result.lower_bound_hat = best;
  return result;
}

PairSearchResult find_near_optimal_pair(const LabeledScores& cal, const LabeledScores& est,
                                        const ExpertBinding& expert, double delta) {
  const std::size_t m = cal.size();
  if (m < 2) throw UsageError("pairwise search needs m >= 2");
  const CandidateGrid grid(m);
  PairSearchResult result;
  result.delta_used = 2.0 * delta / (static_cast<double>(m) * static_cast<double>(m - 1));
  result.epsilon = hoeffding_epsilon(est.size(), result.delta_used);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t low = 1; low < m; ++low) {
    for (std::size_t high = low + 1; high <= m; ++high) {
      const TwoThresholdPredictor predictor =
          calibrate_two_threshold(calibration_scores(cal), grid.alpha(high), grid.alpha(low));
      const double mu = monte_carlo_success(predictor, est, expert);
      ++result.pairs_evaluated;
      if (mu - result.epsilon >= best) {
        best = mu - result.epsilon;
        result.low_rank = low;
        result.high_rank = high;
        result.mu_hat = mu;
        result.predictor = predictor;
      }
    }
  }
  result.lower_bound_hat = best;
  result.alpha1_hat = grid.alpha(result.high_rank);
  result.alpha2_hat = grid.alpha(result.low_rank);
  return result;
}

double value_and_gradient(const SoftmaxObjective& objective, std::span<const double> params,
                          std::span<double> gradient) {
  const std::size_t d = objective.features();
  const std::size_t n = objective.num_labels();
  const std::size_t rows = objective.rows();
  const auto x = objective.design();
  const auto labels = objective.labels();
  std::fill(gradient.begin(), gradient.end(), 0.0);
  double loss = 0.0;
  std::vector<double> prob(n);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t y = 0; y < n; ++y) {
      double z = params[y * (d + 1) + d];
      for (std::size_t j = 0; j < d; ++j) z += params[y * (d + 1) + j] * x[i * d + j];
      prob[y] = z;
    }
    const double top = *std::max_element(prob.begin(), prob.end());
    double total = 0.0;
    for (double& p : prob) total += (p = std::exp(p - top));
    for (double& p : prob) p /= total;
    const auto truth = static_cast<std::size_t>(labels[i]);
    loss -= std::log(prob[truth]);
    for (std::size_t y = 0; y < n; ++y) {
      const double r = (prob[y] - (y == truth ? 1.0 : 0.0)) / static_cast<double>(rows);
      for (std::size_t j = 0; j < d; ++j) gradient[y * (d + 1) + j] += r * x[i * d + j];
      gradient[y * (d + 1) + d] += r;
    }
  }
  loss /= static_cast<double>(rows);
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t j = 0; j < d; ++j) {
      const double w = params[y * (d + 1) + j];
      loss += 0.5 * objective.l2() * w * w;
      gradient[y * (d + 1) + j] += objective.l2() * w;
    }
  }
  return loss;
}

}  // namespace predset::reference
