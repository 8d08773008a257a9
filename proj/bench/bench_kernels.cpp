// Serial vs OpenMP vs naive reference for the two hot kernels.
//
//   BM_success_curve/<threads>      incremental sweep over all m thresholds
//   BM_success_curve_reference      one pass per threshold
//   BM_softmax_gradient/<threads>   blocked objective + gradient
//   BM_softmax_gradient_reference   straightforward serial loop

#include <benchmark/benchmark.h>

#include <omp.h>

#include <algorithm>
#include <random>
#include <vector>

#include "predset/conformal.hpp"
#include "predset/estimation.hpp"
#include "predset/expert.hpp"
#include "predset/reference.hpp"
#include "predset/search.hpp"
#include "predset/synthetic.hpp"

using namespace predset;

namespace {

std::vector<double> dirichlet(std::size_t n, std::mt19937_64& rng) {
  std::gamma_distribution<double> g(0.5, 1.0);
  std::vector<double> r(n);
  double t = 0;
  for (double& v : r) t += (v = g(rng) + 1e-300);
  for (double& v : r) v /= t;
  return r;
}

LabeledScores scores(std::size_t rows, std::size_t n, std::mt19937_64& rng) {
  std::vector<double> v;
  std::vector<Label> y;
  for (std::size_t i = 0; i < rows; ++i) {
    const auto r = dirichlet(n, rng);
    std::discrete_distribution<Label> pick(r.begin(), r.end());
    y.push_back(pick(rng));
    v.insert(v.end(), r.begin(), r.end());
  }
  return {ScoreMatrix(rows, n, std::move(v)), std::move(y)};
}

struct SweepFixture {
  std::vector<double> sorted;
  LabeledScores est;
  MnlExpert expert;

  SweepFixture() {
    std::mt19937_64 rng(7);
    const std::size_t n = 10, m = 1200;
    sorted = calibration_scores(scores(m, n, rng));
    std::sort(sorted.begin(), sorted.end());
    est = scores(m, n, rng);
    std::vector<double> e;
    for (std::size_t y = 0; y < n; ++y) {
      auto r = dirichlet(n, rng);
      r[y] += 1.0;
      for (double& v : r) v /= 2.0;
      e.insert(e.end(), r.begin(), r.end());
    }
    expert = MnlExpert::from_confusion(ConfusionMatrix(n, std::move(e)));
  }
};

const SweepFixture& sweep() {
  static const SweepFixture f;
  return f;
}

struct ObjectiveFixture {
  SoftmaxObjective objective;
  std::vector<double> params;

  static SoftmaxObjective build() {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd(0.0, 1.0);
    const std::size_t rows = 20000, d = 20, n = 10;
    std::vector<double> x(rows * d);
    for (double& v : x) v = nd(rng);
    std::vector<Label> y(rows);
    for (Label& v : y) v = static_cast<Label>(rng() % n);
    return {std::move(x), d, std::move(y), n, 1e-3};
  }

  ObjectiveFixture() : objective(build()), params(objective.num_params(), 0.01) {}
};

const ObjectiveFixture& objective() {
  static const ObjectiveFixture f;
  return f;
}

void BM_success_curve(benchmark::State& state) {
  const auto& f = sweep();
  const ExpertBinding bind(f.expert);
  omp_set_num_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(success_curve(f.sorted, f.est, bind));
}
BENCHMARK(BM_success_curve)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_success_curve_reference(benchmark::State& state) {
  const auto& f = sweep();
  const ExpertBinding bind(f.expert);
  for (auto _ : state) benchmark::DoNotOptimize(reference::success_curve(f.sorted, f.est, bind));
}
BENCHMARK(BM_success_curve_reference)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_softmax_gradient(benchmark::State& state) {
  const auto& f = objective();
  std::vector<double> grad(f.params.size());
  omp_set_num_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(f.objective.value_and_gradient(f.params, grad));
}
BENCHMARK(BM_softmax_gradient)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_softmax_gradient_reference(benchmark::State& state) {
  const auto& f = objective();
  std::vector<double> grad(f.params.size());
  for (auto _ : state) benchmark::DoNotOptimize(reference::value_and_gradient(f.objective, f.params, grad));
}
BENCHMARK(BM_softmax_gradient_reference)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
