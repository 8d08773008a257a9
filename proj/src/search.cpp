#include "predset/search.hpp"

#include <algorithm>
#include <limits>
#include <ostream>
#include <string>

#include <omp.h>

#include "predset/errors.hpp"

namespace predset {

namespace {

__extension__ using Diff = __int128;

/// Conformal scores of every sample, sorted ascending per sample (ties by label).
struct SortedSamples {
  std::size_t n = 0;
  std::vector<double> scores;
  std::vector<Label> labels;

  explicit SortedSamples(const LabeledScores& data) : n(data.num_labels()) {
    const std::size_t rows = data.size();
    scores.resize(rows * n);
    labels.resize(rows * n);
    std::vector<std::pair<double, Label>> tmp(n);
    for (std::size_t i = 0; i < rows; ++i) {
      const auto row = data.row(i);
      for (std::size_t y = 0; y < n; ++y) tmp[y] = {1.0 - row[y], static_cast<Label>(y)};
      std::sort(tmp.begin(), tmp.end());
      for (std::size_t k = 0; k < n; ++k) {
        scores[i * n + k] = tmp[k].first;
        labels[i * n + k] = tmp[k].second;
      }
    }
  }
};

/// Adds one sample's quantized contribution, as a difference array over ranks, for the
/// sets {y : lower < s_y <= sorted_cal[r-1]}, r >= first_rank.
void accumulate_sample(std::span<const double> sorted_cal, std::size_t first_rank, double lower,
                       const SortedSamples& sorted, std::size_t sample, Label truth,
                       const MnlExpert& expert, std::vector<Diff>& diff) {
  const std::size_t n = sorted.n;
  const auto weights = expert.weights(truth);
  const double truth_weight = static_cast<double>(weights[static_cast<std::size_t>(truth)]);
  const double* s = sorted.scores.data() + sample * n;
  const Label* lab = sorted.labels.data() + sample * n;
  const auto cal_begin = sorted_cal.begin() + static_cast<std::ptrdiff_t>(first_rank - 1);

  std::uint64_t total = 0;
  bool covered = false;
  std::int64_t previous = 0;
  std::size_t k = static_cast<std::size_t>(std::upper_bound(s, s + n, lower) - s);
  for (; k < n; ++k) {
    const auto pos = std::lower_bound(cal_begin, sorted_cal.end(), s[k]);
    if (pos == sorted_cal.end()) break;
    const auto join_rank = static_cast<std::size_t>(pos - sorted_cal.begin()) + 1;
    total += weights[static_cast<std::size_t>(lab[k])];
    covered = covered || lab[k] == truth;
    const auto q = covered ? static_cast<std::int64_t>(
                                 ExactMean::quantize(truth_weight / static_cast<double>(total)))
                           : std::int64_t{0};
    diff[join_rank] += q - previous;
    previous = q;
  }
}

std::vector<double> finish_curve(const std::vector<Diff>& diff, std::size_t first_rank,
                                 std::size_t m, std::size_t count) {
  std::vector<double> curve;
  curve.reserve(m + 1 - first_rank);
  Diff running = 0;
  for (std::size_t r = first_rank; r <= m; ++r) {
    running += diff[r];
    curve.push_back(ExactMean::to_mean(static_cast<ExactMean::Accumulator>(running), count));
  }
  return curve;
}

std::vector<double> sorted_copy(std::span<const double> values) {
  std::vector<double> out(values.begin(), values.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> band_curve_serial(std::span<const double> sorted_cal, std::size_t low_rank,
                                      const SortedSamples& sorted, const LabeledScores& data,
                                      const ExpertBinding& expert, std::vector<Diff>& diff) {
  const std::size_t m = sorted_cal.size();
  std::fill(diff.begin(), diff.end(), Diff{0});
  const double lower = sorted_cal[low_rank - 1];
  for (std::size_t i = 0; i < data.size(); ++i) {
    accumulate_sample(sorted_cal, low_rank + 1, lower, sorted, i, data.label(i),
                      expert.table(i), diff);
  }
  return finish_curve(diff, low_rank + 1, m, data.size());
}

}  // namespace

CandidateGrid::CandidateGrid(std::size_t m) : m_(m) {
  if (m < 1) throw UsageError("candidate grid needs m >= 1");
}

double CandidateGrid::alpha(std::size_t rank) const {
  if (rank < 1 || rank > m_) throw UsageError("grid rank out of range");
  return 1.0 - static_cast<double>(rank) / static_cast<double>(m_ + 1);
}

std::vector<double> CandidateGrid::alphas() const {
  std::vector<double> out(m_);
  for (std::size_t i = 1; i <= m_; ++i) out[i - 1] = alpha(i);
  return out;
}

std::vector<double> success_curve(std::span<const double> sorted_cal, const LabeledScores& data,
                                  const ExpertBinding& expert) {
  if (sorted_cal.empty()) throw UsageError("calibration set is empty");
  if (data.size() == 0) throw UsageError("estimation set is empty");
  expert.check(data.size(), data.num_labels());
  const std::size_t m = sorted_cal.size();
  const SortedSamples sorted(data);
  const auto rows = static_cast<std::ptrdiff_t>(data.size());
  const double lower = -std::numeric_limits<double>::infinity();

  std::vector<Diff> total(m + 2, Diff{0});
#pragma omp parallel
  {
    std::vector<Diff> local(m + 2, Diff{0});
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < rows; ++i) {
      const auto row = static_cast<std::size_t>(i);
      accumulate_sample(sorted_cal, 1, lower, sorted, row, data.label(row), expert.table(row),
                        local);
    }
#pragma omp critical
    for (std::size_t r = 0; r < total.size(); ++r) total[r] += local[r];
  }
  return finish_curve(total, 1, m, data.size());
}

std::vector<double> band_success_curve(std::span<const double> sorted_cal, std::size_t low_rank,
                                       const LabeledScores& data, const ExpertBinding& expert) {
  const std::size_t m = sorted_cal.size();
  if (low_rank < 1 || low_rank >= m) throw UsageError("band lower rank must lie in [1, m-1]");
  if (data.size() == 0) throw UsageError("estimation set is empty");
  expert.check(data.size(), data.num_labels());
  const SortedSamples sorted(data);
  std::vector<Diff> diff(m + 2);
  return band_curve_serial(sorted_cal, low_rank, sorted, data, expert, diff);
}

SearchResult find_near_optimal_alpha(const LabeledScores& cal, const LabeledScores& est,
                                     const ExpertBinding& expert, double delta) {
  if (cal.size() == 0 || est.size() == 0) throw UsageError("calibration and estimation sets must be nonempty");
  if (cal.num_labels() != est.num_labels()) throw UsageError("calibration and estimation label counts differ");
  const std::size_t m = cal.size();
  const CandidateGrid grid(m);
  const std::vector<double> sorted_cal = sorted_copy(calibration_scores(cal));
  const std::vector<double> mu = success_curve(sorted_cal, est, expert);

  const double delta_used = delta / static_cast<double>(m);
  const double epsilon = hoeffding_epsilon(est.size(), delta_used);

  SearchResult result;
  result.reports.reserve(m);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t rank = 1; rank <= m; ++rank) {
    EstimateReport r;
    r.alpha = grid.alpha(rank);
    r.mu_hat = mu[rank - 1];
    r.epsilon = epsilon;
    r.m = est.size();
    r.delta_used = delta_used;
    if (best <= r.lower_bound()) {
      best = r.lower_bound();
      result.rank_hat = rank;
      result.alpha_hat = r.alpha;
    }
    result.reports.push_back(r);
  }
  result.lower_bound_hat = best;
  result.predictor = {sorted_cal[result.rank_hat - 1], result.alpha_hat, m};
  return result;
}

BruteForceResult brute_force_best_alpha(const LabeledScores& cal, const LabeledScores& test,
                                        const ExpertBinding& expert) {
  if (cal.size() == 0 || test.size() == 0) throw UsageError("calibration and test sets must be nonempty");
  const std::size_t m = cal.size();
  const CandidateGrid grid(m);
  const std::vector<double> sorted_cal = sorted_copy(calibration_scores(cal));
  BruteForceResult out;
  out.curve.resize(m);
  const auto ranks = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < ranks; ++i) {
    const auto rank = static_cast<std::size_t>(i) + 1;
    const ConformalPredictor predictor{sorted_cal[rank - 1], grid.alpha(rank), m};
    out.curve[rank - 1] = true_success_probability(predictor, test, expert);
  }
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t rank = 1; rank <= m; ++rank) {
    if (best <= out.curve[rank - 1]) {
      best = out.curve[rank - 1];
      out.rank_star = rank;
    }
  }
  out.alpha_star = grid.alpha(out.rank_star);
  return out;
}

PairSearchResult find_near_optimal_pair(const LabeledScores& cal, const LabeledScores& est,
                                        const ExpertBinding& expert, double delta,
                                        const PairSearchOptions& options) {
  if (cal.size() == 0 || est.size() == 0) throw UsageError("calibration and estimation sets must be nonempty");
  const std::size_t m = cal.size();
  if (m < 2) throw UsageError("pairwise search needs m >= 2");
  if (m > options.max_m) {
    throw UsageError("pairwise search capped at m=" + std::to_string(options.max_m) + ", got " +
                     std::to_string(m));
  }
  expert.check(est.size(), est.num_labels());
  const CandidateGrid grid(m);
  const std::vector<double> sorted_cal = sorted_copy(calibration_scores(cal));
  const SortedSamples sorted(est);

  // rows[a-1] holds high ranks a+1..m for low rank a.
  std::vector<std::vector<double>> rows(m - 1);
  const auto lows = static_cast<std::ptrdiff_t>(m - 1);
#pragma omp parallel
  {
    std::vector<Diff> diff(m + 2);
#pragma omp for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < lows; ++i) {
      const auto low = static_cast<std::size_t>(i) + 1;
      rows[low - 1] = band_curve_serial(sorted_cal, low, sorted, est, expert, diff);
    }
  }

  PairSearchResult result;
  result.delta_used = 2.0 * delta / (static_cast<double>(m) * static_cast<double>(m - 1));
  result.epsilon = hoeffding_epsilon(est.size(), result.delta_used);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t low = 1; low < m; ++low) {
    const auto& row = rows[low - 1];
    for (std::size_t high = low + 1; high <= m; ++high) {
      const double mu = row[high - low - 1];
      const double lb = mu - result.epsilon;
      ++result.pairs_evaluated;
      if (best <= lb) {
        best = lb;
        result.low_rank = low;
        result.high_rank = high;
        result.mu_hat = mu;
      }
      if (options.keep_reports) {
        EstimateReport r;
        r.alpha = grid.alpha(high);
        r.alpha2 = grid.alpha(low);
        r.mu_hat = mu;
        r.epsilon = result.epsilon;
        r.m = est.size();
        r.delta_used = result.delta_used;
        result.reports.push_back(r);
      }
    }
  }
  result.lower_bound_hat = best;
  result.alpha1_hat = grid.alpha(result.high_rank);
  result.alpha2_hat = grid.alpha(result.low_rank);
  result.predictor.q_high = sorted_cal[result.high_rank - 1];
  result.predictor.q_low = sorted_cal[result.low_rank - 1];
  result.predictor.alpha1 = result.alpha1_hat;
  result.predictor.alpha2 = result.alpha2_hat;
  result.predictor.m = m;
  return result;
}

void write_search_csv(std::ostream& out, const SearchResult& result) {
  out << "alpha,mu_hat,epsilon,lower_bound,selected\n";
  const auto old_precision = out.precision(17);
  for (std::size_t i = 0; i < result.reports.size(); ++i) {
    const auto& r = result.reports[i];
    out << r.alpha << ',' << r.mu_hat << ',' << r.epsilon << ',' << r.lower_bound() << ','
        << (i + 1 == result.rank_hat ? 1 : 0) << '\n';
  }
  out.precision(old_precision);
}

}  // namespace predset
