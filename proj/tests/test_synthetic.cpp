#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "predset/errors.hpp"
#include "predset/reference.hpp"
#include "predset/synthetic.hpp"

using namespace predset;

namespace {

TaskSpec small_spec(std::size_t n, double sep, std::uint64_t seed) {
  TaskSpec s;
  s.n = n;
  s.class_sep = sep;
  s.samples = 3000;
  s.seed = seed;
  return s;
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

SoftmaxObjective random_objective(std::size_t rows, std::size_t d, std::size_t n, double l2,
                                  std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> x(rows * d);
  for (double& v : x) v = g(rng);
  std::vector<Label> y(rows);
  for (Label& v : y) v = static_cast<Label>(rng() % n);
  return SoftmaxObjective(x, d, y, n, l2);
}

double held_out_accuracy(const TaskSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  const Dataset data = generate_task(spec, rng);
  const auto all = iota(data.rows());
  const std::vector<std::size_t> train(all.begin(), all.begin() + static_cast<long>(all.size() * 4 / 5));
  const std::vector<std::size_t> test(all.begin() + static_cast<long>(all.size() * 4 / 5), all.end());
  const SoftmaxClassifier clf = train_softmax(data, train);
  return clf.accuracy(data.select(test));
}

}  // namespace

TEST_CASE("generation is reproducible") {
  const TaskSpec spec = small_spec(5, 1.0, 42);
  std::mt19937_64 a(7), b(7);
  const Dataset d1 = generate_task(spec, a);
  const Dataset d2 = generate_task(spec, b);
  CHECK(d1.x == d2.x);
  CHECK(d1.y == d2.y);
  CHECK(d1.features == 20);
  CHECK(d1.rows() == 3000);
  std::ostringstream o1, o2;
  write_dataset_csv(o1, d1);
  write_dataset_csv(o2, d2);
  CHECK(o1.str() == o2.str());
}

TEST_CASE("class frequencies follow the class weights") {
  TaskSpec spec = small_spec(6, 1.0, 3);
  spec.samples = 20000;
  spec.flip_y = 0.0;
  spec.class_weights = {0.05, 0.1, 0.15, 0.2, 0.2, 0.3};
  std::mt19937_64 rng(3);
  const Dataset d = generate_task(spec, rng);
  const auto freq = d.class_frequencies();
  for (std::size_t c = 0; c < 6; ++c) {
    const double w = spec.class_weights[c];
    CHECK(std::abs(freq[c] - w) <= 3 * std::sqrt(w * (1 - w) / 20000.0));
  }
}

TEST_CASE("dirichlet weights lie on the simplex") {
  std::mt19937_64 rng(4);
  const auto w = dirichlet_weights(10, rng);
  double t = 0;
  for (double v : w) {
    CHECK(v > 0.0);
    t += v;
  }
  CHECK(t == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("generator preconditions") {
  std::mt19937_64 rng(5);
  TaskSpec spec = small_spec(3, 1.0, 1);
  spec.informative = 2;  // four vertices, six clusters
  CHECK_THROWS_AS(generate_task(spec, rng), UsageError);
  CHECK_THROWS_AS(generate_task(small_spec(1, 1.0, 1), rng), UsageError);
}

TEST_CASE("class separation extremes") {
  TaskSpec easy = small_spec(4, 8.0, 11);
  easy.flip_y = 0.0;
  CHECK(held_out_accuracy(easy) >= 0.97);

  TaskSpec flat = small_spec(4, 0.0, 12);
  flat.flip_y = 0.0;
  flat.covariance_mixing = false;
  flat.samples = 6000;
  std::mt19937_64 rng(12);
  const double majority = [&] {
    std::mt19937_64 r(12);
    const auto f = generate_task(flat, r).class_frequencies();
    return *std::max_element(f.begin(), f.end());
  }();
  const double acc = held_out_accuracy(flat);
  CHECK(acc <= majority + 0.04);
  CHECK(acc >= majority - 0.06);
}

TEST_CASE("splits are disjoint and exhaustive") {
  std::mt19937_64 rng(6);
  const Split s = make_split(1000, SplitSpec{150, 150, 0.2, 0}, rng);
  CHECK(s.test.size() == 200);
  CHECK(s.cal.size() == 150);
  CHECK(s.est.size() == 150);
  CHECK(s.train.size() == 500);
  check_split(s, 1000);
  std::set<std::size_t> all;
  for (const auto* part : {&s.train, &s.cal, &s.est, &s.test}) all.insert(part->begin(), part->end());
  CHECK(all.size() == 1000);
  CHECK(*all.rbegin() == 999);
  CHECK_THROWS_AS(make_split(1000, SplitSpec{400, 400, 0.2, 0}, rng), UsageError);
  Split bad = s;
  bad.cal[0] = bad.test[0];
  CHECK_THROWS_AS(check_split(bad, 1000), UsageError);
}

TEST_CASE("dataset CSV round trip") {
  std::mt19937_64 rng(8);
  TaskSpec spec = small_spec(3, 1.0, 2);
  spec.samples = 50;
  const Dataset d = generate_task(spec, rng);
  std::stringstream ss;
  write_dataset_csv(ss, d);
  const Dataset back = read_dataset_csv(ss, "d.csv", 3);
  CHECK(back.x == d.x);
  CHECK(back.y == d.y);
  CHECK(back.features == d.features);
}

TEST_CASE("analytic gradient matches central differences") {
  std::mt19937_64 rng(9);
  for (int rep = 0; rep < 5; ++rep) {
    const SoftmaxObjective obj = random_objective(40, 4, 3, 0.01, rng);
    std::normal_distribution<double> g(0.0, 0.5);
    std::vector<double> w(obj.num_params());
    for (double& v : w) v = g(rng);
    std::vector<double> grad(w.size());
    obj.value_and_gradient(w, grad);
    double diff = 0, norm = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double h = 1e-6;
      auto wp = w, wm = w;
      wp[i] += h;
      wm[i] -= h;
      const double fd = (obj.value(wp) - obj.value(wm)) / (2 * h);
      diff += (fd - grad[i]) * (fd - grad[i]);
      norm += fd * fd;
      CHECK(std::abs(fd - grad[i]) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
    CHECK(std::sqrt(diff) <= 1e-5 * std::sqrt(norm));
  }
}

TEST_CASE("intercepts are not penalized") {
  std::mt19937_64 rng(10);
  const SoftmaxObjective a = random_objective(30, 3, 3, 0.0, rng);
  const SoftmaxObjective b(std::vector<double>(a.design().begin(), a.design().end()), 3,
                           std::vector<Label>(a.labels().begin(), a.labels().end()), 3, 5.0);
  std::vector<double> w(a.num_params(), 0.0);
  w[3] = 2.0;  // intercept of label 0
  CHECK(a.value(w) == doctest::Approx(b.value(w)).epsilon(1e-14));
  w[0] = 1.0;
  CHECK(b.value(w) == doctest::Approx(a.value(w) + 0.5 * 5.0).epsilon(1e-12));
}

TEST_CASE("blocked gradient equals the serial reference and ignores thread count") {
  std::mt19937_64 rng(11);
  const SoftmaxObjective obj = random_objective(2000, 6, 5, 1e-3, rng);
  std::normal_distribution<double> g(0.0, 0.3);
  std::vector<double> w(obj.num_params());
  for (double& v : w) v = g(rng);
  std::vector<double> g1(w.size()), g4(w.size()), gr(w.size());
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const double v1 = obj.value_and_gradient(w, g1);
  omp_set_num_threads(4);
  const double v4 = obj.value_and_gradient(w, g4);
  omp_set_num_threads(saved);
  const double vr = reference::value_and_gradient(obj, w, gr);
  CHECK(v1 == v4);
  CHECK(g1 == g4);
  CHECK(v1 == doctest::Approx(vr).epsilon(1e-12));
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(g1[i] == doctest::Approx(gr[i]).epsilon(1e-9));
}

TEST_CASE("softmax objective validation") {
  CHECK_THROWS_AS(SoftmaxObjective({1.0, 2.0}, 1, {0, 3}, 2, 0.0), UsageError);
  CHECK_THROWS_AS(SoftmaxObjective({1.0}, 1, {0, 1}, 2, 0.0), UsageError);
  CHECK_THROWS_AS(SoftmaxObjective({1.0}, 1, {0}, 1, 0.0), UsageError);
}

TEST_CASE("separable toy problem is learned exactly") {
  Dataset d;
  d.features = 2;
  d.num_labels = 2;
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  for (int i = 0; i < 200; ++i) {
    const bool pos = i % 2;
    d.x.push_back(pos ? u(rng) : -u(rng));
    d.x.push_back(u(rng) - 0.5);
    d.y.push_back(pos ? 1 : 0);
  }
  TrainingReport report;
  const SoftmaxClassifier clf = train_softmax(d, {}, {}, &report);
  CHECK(clf.accuracy(d) == 1.0);
  const auto p = clf.predict_proba(d.row(0));
  CHECK(p[0] + p[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("label permutation permutes the scores") {
  std::mt19937_64 rng(13);
  TaskSpec spec = small_spec(3, 1.5, 5);
  spec.samples = 600;
  Dataset d = generate_task(spec, rng);
  const SoftmaxClassifier a = train_softmax(d, {});
  const std::vector<Label> perm{2, 0, 1};
  for (Label& y : d.y) y = perm[static_cast<std::size_t>(y)];
  const SoftmaxClassifier b = train_softmax(d, {});
  for (std::size_t i = 0; i < 20; ++i) {
    const auto pa = a.predict_proba(d.row(i));
    const auto pb = b.predict_proba(d.row(i));
    for (std::size_t c = 0; c < 3; ++c) CHECK(pb[static_cast<std::size_t>(perm[c])] == doctest::Approx(pa[c]).epsilon(1e-4));
  }
}

TEST_CASE("score rows are probability vectors") {
  std::mt19937_64 rng(14);
  TaskSpec spec = small_spec(10, 1.0, 6);
  spec.samples = 2000;
  const Dataset d = generate_task(spec, rng);
  const ScoreMatrix s = train_softmax(d, {}).score(d);
  for (std::size_t i = 0; i < s.rows(); ++i) {
    double t = 0;
    for (double v : s.row(i)) t += v;
    REQUIRE(std::abs(t - 1.0) <= 1e-9);
  }
}

TEST_CASE("gradient descent decreases the loss monotonically") {
  std::mt19937_64 rng(15);
  TaskSpec spec = small_spec(4, 1.0, 7);
  spec.samples = 800;
  const Dataset d = generate_task(spec, rng);
  SoftmaxHyperparams h;
  h.optimizer = Optimizer::kGradientDescent;
  h.max_epochs = 200;
  TrainingReport report;
  train_softmax(d, {}, h, &report);
  REQUIRE(report.loss_history.size() >= 2);
  for (std::size_t i = 1; i < report.loss_history.size(); ++i) {
    CHECK(report.loss_history[i] <= report.loss_history[i - 1] + 1e-15);
  }
  // 200 epochs of GD are not enough to reach 1e-6: the best iterate comes with a warning
  CHECK_FALSE(report.converged);
  CHECK_FALSE(report.warning.empty());
}

TEST_CASE("L-BFGS converges on a small task") {
  std::mt19937_64 rng(16);
  TaskSpec spec = small_spec(4, 1.0, 8);
  spec.samples = 800;
  const Dataset d = generate_task(spec, rng);
  TrainingReport report;
  train_softmax(d, {}, {}, &report);
  CHECK(report.converged);
  CHECK(report.gradient_norm <= 1e-6);
}

TEST_CASE("synthetic confusion matrices hit their targets") {
  std::mt19937_64 rng(17);
  const std::vector<double> w = dirichlet_weights(10, rng);
  for (double target : {0.3, 0.5, 0.7, 0.9}) {
    const ConfusionMatrix c = synth_confusion(10, target, w, rng);
    for (std::size_t y = 0; y < 10; ++y) {
      double t = 0;
      for (double v : c.row(y)) {
        CHECK(v >= 0.0);
        t += v;
      }
      CHECK(t == doctest::Approx(1.0).epsilon(1e-12));
    }
    // Monte-Carlo: labels from the class weights, expert answers from the rows
    std::discrete_distribution<int> label(w.begin(), w.end());
    const int draws = 200000;
    int hits = 0;
    for (int i = 0; i < draws; ++i) {
      const auto y = static_cast<std::size_t>(label(rng));
      std::discrete_distribution<int> answer(c.row(y).begin(), c.row(y).end());
      hits += static_cast<std::size_t>(answer(rng)) == y;
    }
    CHECK(std::abs(static_cast<double>(hits) / draws - target) <= 0.02);
    CHECK(std::abs(c.weighted_diagonal(w) - target) <= 0.02);
  }
}

TEST_CASE("synthetic confusion extremes") {
  std::mt19937_64 rng(18);
  const std::vector<double> w(5, 0.2);
  const ConfusionMatrix perfect = synth_confusion(5, 1.0, w, rng);
  for (std::size_t y = 0; y < 5; ++y) CHECK(perfect.at(y, y) >= 0.999);

  SynthConfusionOptions quiet;
  quiet.diagonal_noise = 0.0;
  quiet.off_diagonal_noise = false;
  const ConfusionMatrix chance = synth_confusion(5, 0.2, w, rng, quiet);
  for (double v : chance.entries()) CHECK(v == doctest::Approx(0.2).epsilon(1e-12));

  CHECK_THROWS_AS(synth_confusion(5, 0.0, w, rng), UsageError);
  CHECK_THROWS_AS(synth_confusion(5, 1.2, w, rng), UsageError);
  CHECK_THROWS_AS(synth_confusion(5, 0.5, std::vector<double>(4, 0.25), rng), UsageError);
}
