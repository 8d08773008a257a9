#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "predset/conformal.hpp"
#include "predset/errors.hpp"

using namespace predset;

namespace {

// Independent oracle: sort and index with the rank written out longhand.
double quantile_oracle(std::vector<double> scores, std::size_t m, double alpha) {
  std::sort(scores.begin(), scores.end());
  const double pos = (static_cast<double>(m) + 1.0) * (1.0 - alpha);
  std::size_t k = static_cast<std::size_t>(pos);
  if (static_cast<double>(k) < pos - 1e-9) ++k;
  if (k > m) return kFullSetThreshold;
  return scores[k - 1];
}

// Beta(a,b) mass on [lo,hi] by composite Simpson on the log-density.
double beta_mass_simpson(double a, double b, double lo, double hi) {
  lo = std::max(lo, 0.0);
  hi = std::min(hi, 1.0);
  if (hi <= lo) return 0.0;
  const double logB = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  auto pdf = [&](double x) {
    if (x <= 0.0 || x >= 1.0) {
      if (x <= 0.0) return a == 1.0 ? std::exp(-logB) : 0.0;
      return b == 1.0 ? std::exp(-logB) : 0.0;
    }
    return std::exp((a - 1) * std::log(x) + (b - 1) * std::log1p(-x) - logB);
  };
  const int steps = 20000;
  const double h = (hi - lo) / steps;
  double s = pdf(lo) + pdf(hi);
  for (int i = 1; i < steps; ++i) s += pdf(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

std::vector<double> random_row(std::size_t n, std::mt19937_64& rng) {
  std::gamma_distribution<double> g(1.0, 1.0);
  std::vector<double> r(n);
  double t = 0;
  for (double& v : r) t += (v = g(rng));
  for (double& v : r) v /= t;
  return r;
}

}  // namespace

TEST_CASE("conformal score is one minus the label score") {
  const ScoreMatrix s = ScoreMatrix::from_rows({{1.0, 0.0}, {0.35, 0.65}});
  CHECK(conformal_score(s, 0, 0) == 0.0);
  CHECK(conformal_score(s, 0, 1) == 1.0);
  CHECK(conformal_score(s, 1, 0) == doctest::Approx(1.0 - 0.35).epsilon(1e-15));
  CHECK_THROWS_AS(conformal_score(s, 2, 0), UsageError);
  CHECK_THROWS_AS(conformal_score(s, 0, 2), UsageError);
}

TEST_CASE("score matrix validation") {
  CHECK_THROWS_AS(ScoreMatrix(1, 1, {1.0}), UsageError);
  CHECK_THROWS_AS(ScoreMatrix(0, 2, {}), UsageError);
  CHECK_THROWS_AS(ScoreMatrix(1, 2, {0.5, 1.5}), UsageError);
  CHECK_THROWS_AS(ScoreMatrix(1, 2, {0.5}), UsageError);
  CHECK_THROWS_AS(LabeledScores(ScoreMatrix::from_rows({{0.5, 0.5}}), {2}), UsageError);
}

TEST_CASE("empirical quantile examples") {
  const std::vector<double> s{0.1, 0.2, 0.3, 0.4};
  CHECK(empirical_quantile(s, 0.2) == quantile_oracle(s, 4, 0.2));
  CHECK(empirical_quantile(std::vector<double>{0.3, 0.1, 0.4, 0.2}, 0.2) == 0.4);
  CHECK(empirical_quantile(s, 0.2) == 0.4);
  CHECK(empirical_quantile(s, 0.8) == 0.1);
  CHECK(empirical_quantile(std::vector<double>{0.5}, 0.1) == kFullSetThreshold);
  CHECK_THROWS_AS(empirical_quantile(std::vector<double>{}, 0.1), UsageError);
  CHECK_THROWS_AS(empirical_quantile(s, 0.0), UsageError);
  CHECK_THROWS_AS(empirical_quantile(s, 1.0), UsageError);
}

TEST_CASE("empirical quantile agrees with the sort-and-index oracle") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t m = 1 + rng() % 60;
    std::vector<double> s(m);
    for (double& v : s) v = u(rng);
    const double alpha = 0.01 + 0.98 * u(rng);
    CHECK(empirical_quantile(s, alpha) == quantile_oracle(s, m, alpha));
  }
}

TEST_CASE("grid values map back to their rank") {
  for (std::size_t m : {1u, 2u, 3u, 9u, 99u, 160u, 400u, 1200u, 1500u}) {
    for (std::size_t i = 1; i <= m; ++i) {
      const double alpha = 1.0 - static_cast<double>(i) / static_cast<double>(m + 1);
      REQUIRE(quantile_rank(m, alpha) == i);
    }
  }
}

TEST_CASE("single-threshold set construction") {
  const std::vector<double> f{0.9, 0.05, 0.05};
  CHECK(build_set(ConformalPredictor{0.5, 0.1, 10}, f) == PredictionSet({0}));
  CHECK(build_set(ConformalPredictor{kFullSetThreshold, 0.1, 10}, f) == PredictionSet::full(3));
  const double boundary = 1.0 - 0.05;
  CHECK(build_set(ConformalPredictor{boundary, 0.1, 10}, f) == PredictionSet({0, 1, 2}));
  CHECK(build_set(ConformalPredictor{0.95, 0.1, 10}, f) == PredictionSet({0, 1, 2}));
}

TEST_CASE("two-threshold set construction") {
  const std::vector<double> f{0.9, 0.5, 0.05};
  CHECK(build_two_threshold_set(TwoThresholdPredictor{0.0, kFullSetThreshold, 0.1, 0.5, 10},
                                std::vector<double>{0.3, 0.3, 0.4}) == PredictionSet::full(3));
  CHECK(build_two_threshold_set(TwoThresholdPredictor{0.2, 0.6, 0.1, 0.5, 10}, f) == PredictionSet({1}));
  CHECK(build_two_threshold_set(TwoThresholdPredictor{0.3, 0.3, 0.1, 0.5, 10}, f).empty());
  const std::vector<double> cal{0.1, 0.2, 0.3, 0.4};
  CHECK_THROWS_AS(calibrate_two_threshold(cal, 0.5, 0.5), UsageError);
  CHECK_THROWS_AS(calibrate_two_threshold(cal, 0.6, 0.5), UsageError);
  const auto p = calibrate_two_threshold(cal, 0.2, 0.8);
  CHECK(p.q_low == 0.1);
  CHECK(p.q_high == 0.4);
  CHECK(p.q_low <= p.q_high);
}

TEST_CASE("coverage Beta parameters") {
  auto b = coverage_beta_params(9, 0.2);
  CHECK(b.a == 8);
  CHECK(b.b == 2);
  CHECK(b.mean() == doctest::Approx(0.8));
  b = coverage_beta_params(9, 0.25);
  CHECK(b.a == 8);
  CHECK(b.b == 2);
  CHECK(b.mean() >= 0.75);
  CHECK(b.mean() <= 0.85);
  b = coverage_beta_params(1, 0.5);
  CHECK(b.a == 1);
  CHECK(b.b == 1);
  CHECK_THROWS_AS(coverage_beta_params(1, 0.1), UsageError);  // rank 2 > m
  CHECK_THROWS_AS(coverage_beta_params(9, 1.2), UsageError);
}

TEST_CASE("coverage mean lies within the marginal bounds") {
  for (std::size_t m : {5u, 50u, 101u, 1200u}) {
    for (double alpha : {0.05, 0.1, 0.2, 0.37, 0.5, 0.8}) {
      if (quantile_rank(m, alpha) > m) continue;
      const auto b = coverage_beta_params(m, alpha);
      CHECK(b.mean() >= 1.0 - alpha - 1e-12);
      CHECK(b.mean() <= 1.0 - alpha + 1.0 / static_cast<double>(m + 1) + 1e-12);
    }
  }
}

TEST_CASE("two-threshold Beta parameters") {
  auto b = two_threshold_beta_params(9, 0.2, 0.8);
  CHECK(b.a == 6);
  CHECK(b.b == 4);
  b = two_threshold_beta_params(9, 0.1, 0.9);
  CHECK(b.a == 8);
  CHECK(b.b == 2);
  b = two_threshold_beta_params(9, 0.5, 0.6);  // adjacent grid points
  CHECK(b.a == 1);
  CHECK(b.b == 9);
  CHECK_THROWS_AS(two_threshold_beta_params(9, 0.51, 0.55), UsageError);  // l = 0
  CHECK_THROWS_AS(two_threshold_beta_params(9, 0.6, 0.5), UsageError);
}

TEST_CASE("minimum calibration size is minimal and sufficient") {
  struct Case {
    double alpha, eps, delta;
  };
  for (const Case c : {Case{0.1, 0.05, 0.1}, Case{0.2, 0.03, 0.05}, Case{0.5, 0.1, 0.2}}) {
    const std::size_t m = min_calibration_size(c.alpha, c.eps, c.delta);
    auto mass = [&](std::size_t mm) {
      if (quantile_rank(mm, c.alpha) > mm) return (1.0 >= 1 - c.alpha - c.eps && 1.0 <= 1 - c.alpha + c.eps) ? 1.0 : 0.0;
      const auto b = coverage_beta_params(mm, c.alpha);
      return beta_mass_simpson(b.a, b.b, 1 - c.alpha - c.eps, 1 - c.alpha + c.eps);
    };
    CAPTURE(m);
    CHECK(mass(m) >= 1.0 - c.delta - 1e-6);
    if (m > 1) CHECK(mass(m - 1) < 1.0 - c.delta + 1e-6);

    // Monte-Carlo: 10,000 Beta draws place at least 1 - delta in the band (3 sigma slack).
    const auto b = coverage_beta_params(m, c.alpha);
    std::mt19937_64 rng(11);
    std::gamma_distribution<double> ga(b.a, 1.0), gb(b.b, 1.0);
    int inside = 0;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
      const double x = ga(rng), y = gb(rng);
      const double v = x / (x + y);
      inside += v >= 1 - c.alpha - c.eps && v <= 1 - c.alpha + c.eps;
    }
    const double sd = std::sqrt(c.delta * (1 - c.delta) / draws);
    CHECK(static_cast<double>(inside) / draws >= 1.0 - c.delta - 3 * sd);
  }
  CHECK(min_calibration_size(0.3, 0.7, 0.1) == 1);
  CHECK_THROWS_AS(min_calibration_size(0.1, 1e-4, 1e-6, 1000), CeilingReached);
  CHECK_THROWS_AS(min_calibration_size(0.1, 0.0, 0.1), UsageError);
  CHECK_THROWS_AS(min_calibration_size(0.1, 0.1, 1.0), UsageError);
}

TEST_CASE("sets are nested in alpha") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> cal(40);
    for (double& v : cal) v = u(rng);
    const auto row = random_row(8, rng);
    const double a1 = 0.02 + 0.96 * u(rng), a2 = 0.02 + 0.96 * u(rng);
    const double lo = std::min(a1, a2), hi = std::max(a1, a2);
    CHECK(build_set(calibrate(cal, hi), row).is_subset_of(build_set(calibrate(cal, lo), row)));
  }
}

TEST_CASE("marginal coverage over joint redraws") {
  // m = 100, alpha = 0.1, 600 joint redraws of calibration set and test point.
  std::mt19937_64 rng(5);
  const std::size_t n = 6, m = 100, reps = 600;
  const double alpha = 0.1;
  std::size_t covered = 0;
  std::vector<double> cal(m);
  for (std::size_t r = 0; r < reps; ++r) {
    for (std::size_t i = 0; i < m; ++i) {
      const auto f = random_row(n, rng);
      std::discrete_distribution<int> pick(f.begin(), f.end());
      cal[i] = 1.0 - f[static_cast<std::size_t>(pick(rng))];
    }
    const auto f = random_row(n, rng);
    std::discrete_distribution<int> pick(f.begin(), f.end());
    covered += build_set(calibrate(cal, alpha), f).contains(pick(rng));
  }
  const double cov = static_cast<double>(covered) / reps;
  const double sd = std::sqrt(0.9 * 0.1 / reps);
  CHECK(cov >= 1 - alpha - 3 * sd);
  CHECK(cov <= 1 - alpha + 1.0 / (m + 1) + 3 * sd);
}

TEST_CASE("prediction sets") {
  const PredictionSet s({3, 1, 1, 2});
  CHECK(s.size() == 3);
  CHECK(s.contains(2));
  CHECK_FALSE(s.contains(0));
  CHECK(PredictionSet({1, 2}).is_subset_of(s));
  CHECK_FALSE(PredictionSet({0}).is_subset_of(s));
  CHECK(PredictionSet::full(3) == PredictionSet({0, 1, 2}));
}

TEST_CASE("build_set is pure") {
  std::mt19937_64 rng(1);
  const auto row = random_row(10, rng);
  const ConformalPredictor p{0.8, 0.2, 50};
  CHECK(build_set(p, row) == build_set(p, row));
}

TEST_CASE("tie detection and diagnostic jitter") {
  const std::vector<double> s{0.2, 0.5, 0.2, 0.7, 0.5, 0.5};
  CHECK(count_ties(s) == 3);
  std::mt19937_64 rng(2);
  const auto j = jitter_ties(s, rng);
  CHECK(count_ties(j) == 0);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::abs(j[i] - s[i]) <= 1e-10);
  CHECK(j[3] == 0.7);
}
