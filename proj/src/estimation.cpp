#include "predset/estimation.hpp"

#include <cmath>
#include <ostream>
#include <string>

namespace predset {

double hoeffding_epsilon(std::size_t m, double delta) {
  if (m < 1) throw UsageError("Hoeffding radius needs m >= 1");
  if (!(delta > 0.0 && delta <= 1.0)) {
    throw UsageError("delta must lie in (0,1], got " + std::to_string(delta));
  }
  return std::sqrt(std::log(1.0 / delta) / (2.0 * static_cast<double>(m)));
}

void write_reports_csv(std::ostream& out, std::span<const EstimateReport> reports) {
  bool pairs = false;
  for (const auto& r : reports) pairs = pairs || !std::isnan(r.alpha2);
  out << (pairs ? "alpha1,alpha2,mu_hat,epsilon,lower_bound\n" : "alpha,mu_hat,epsilon,lower_bound\n");
  const auto old_precision = out.precision(17);
  for (const auto& r : reports) {
    out << r.alpha << ',';
    if (pairs) out << r.alpha2 << ',';
    out << r.mu_hat << ',' << r.epsilon << ',' << r.lower_bound() << '\n';
  }
  out.precision(old_precision);
}

EstimateReport estimate(const ConformalPredictor& predictor, const LabeledScores& est,
                        const ExpertBinding& expert, double delta_used) {
  EstimateReport r;
  r.alpha = predictor.alpha;
  r.mu_hat = monte_carlo_success(predictor, est, expert);
  r.m = est.size();
  r.delta_used = delta_used;
  r.epsilon = hoeffding_epsilon(est.size(), delta_used);
  return r;
}

}  // namespace predset
