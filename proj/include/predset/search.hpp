#pragma once

// Search over the m conformal predictors a calibration set of size m can induce,
// selecting the one whose estimated success lower bound is largest.

#include <cstddef>
#include <span>
#include <vector>

#include "predset/conformal.hpp"
#include "predset/estimation.hpp"

namespace predset {

/// alpha_i = 1 - i/(m+1) for i = 1..m, visited in that order (largest alpha first).
/// Candidate i thresholds at the i-th smallest calibration score.
class CandidateGrid {
 public:
  explicit CandidateGrid(std::size_t m);

  std::size_t size() const noexcept { return m_; }
  /// rank in [1, m].
  double alpha(std::size_t rank) const;
  std::vector<double> alphas() const;

 private:
  std::size_t m_;
};

struct SearchResult {
  double alpha_hat = 0.0;
  std::size_t rank_hat = 0;  // position of alpha_hat in the grid, 1-based
  ConformalPredictor predictor;
  std::vector<EstimateReport> reports;  // grid order
  double lower_bound_hat = 0.0;
};

/// Estimated success of every grid candidate on `data`: entry i-1 belongs to rank i and
/// uses threshold sorted_cal[i-1]. Each sample's conformal scores are sorted once and its
/// contribution is recorded only at the ranks where its set grows, so the cost is
/// O(m log m + |data| n log(nm)). Samples are split across OpenMP threads; partial sums
/// are exact, so the result does not depend on the thread count.
std::vector<double> success_curve(std::span<const double> sorted_cal, const LabeledScores& data,
                                  const ExpertBinding& expert);

/// Success of the two-threshold predictors (q_low = sorted_cal[low_rank-1],
/// q_high = sorted_cal[r-1]) for r = low_rank+1..m; entry r-low_rank-1 belongs to rank r.
std::vector<double> band_success_curve(std::span<const double> sorted_cal, std::size_t low_rank,
                                       const LabeledScores& data, const ExpertBinding& expert);

/// Evaluates every grid candidate with failure probability delta/m and keeps the largest
/// mu_hat - epsilon; ties go to the later (smaller alpha) candidate.
SearchResult find_near_optimal_alpha(const LabeledScores& cal, const LabeledScores& est,
                                     const ExpertBinding& expert, double delta = 0.1);

struct BruteForceResult {
  double alpha_star = 0.0;
  std::size_t rank_star = 0;
  std::vector<double> curve;  // test success per grid rank
};

/// Rebuilds every candidate's sets from scratch on the test split and returns the
/// maximizer of the plug-in success (ties to the later candidate).
BruteForceResult brute_force_best_alpha(const LabeledScores& cal, const LabeledScores& test,
                                        const ExpertBinding& expert);

struct PairSearchOptions {
  std::size_t max_m = 2000;
  bool keep_reports = false;
};

struct PairSearchResult {
  double alpha1_hat = 0.0;  // sets q_high
  double alpha2_hat = 0.0;  // sets q_low
  std::size_t high_rank = 0;
  std::size_t low_rank = 0;
  TwoThresholdPredictor predictor;
  double mu_hat = 0.0;
  double epsilon = 0.0;
  double delta_used = 0.0;
  double lower_bound_hat = 0.0;
  std::size_t pairs_evaluated = 0;
  std::vector<EstimateReport> reports;  // only with keep_reports
};

/// Searches every pair alpha1 < alpha2 of grid values with per-pair failure probability
/// 2 delta / (m (m-1)). Visits low ranks 1..m-1 in order and, for each, high ranks
/// low+1..m; ties go to the later pair. Throws UsageError when m < 2 or m > max_m.
PairSearchResult find_near_optimal_pair(const LabeledScores& cal, const LabeledScores& est,
                                        const ExpertBinding& expert, double delta = 0.1,
                                        const PairSearchOptions& options = {});

void write_search_csv(std::ostream& out, const SearchResult& result);

}  // namespace predset
