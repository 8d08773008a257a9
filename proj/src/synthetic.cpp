#include "predset/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "predset/csv.hpp"
#include "predset/errors.hpp"

namespace predset {

Dataset Dataset::select(std::span<const std::size_t> rows) const {
  Dataset out;
  out.features = features;
  out.num_labels = num_labels;
  out.x.reserve(rows.size() * features);
  out.y.reserve(rows.size());
  for (std::size_t i : rows) {
    const auto r = row(i);
    out.x.insert(out.x.end(), r.begin(), r.end());
    out.y.push_back(y[i]);
  }
  return out;
}

std::vector<double> Dataset::class_frequencies() const {
  std::vector<double> freq(num_labels, 0.0);
  for (Label label : y) freq[static_cast<std::size_t>(label)] += 1.0;
  for (double& f : freq) f /= static_cast<double>(std::max<std::size_t>(1, y.size()));
  return freq;
}

std::vector<double> dirichlet_weights(std::size_t n, std::mt19937_64& rng) {
  std::gamma_distribution<double> gamma(1.0, 1.0);
  std::vector<double> w(n);
  double total = 0.0;
  for (double& v : w) {
    v = gamma(rng);
    total += v;
  }
  for (double& v : w) v /= total;
  return w;
}

Dataset generate_task(const TaskSpec& spec, std::mt19937_64& rng) {
  const std::size_t n = spec.n;
  if (n < 2) throw UsageError("task needs at least two labels");
  if (spec.informative < 1 || spec.informative > 62) {
    throw UsageError("informative feature count must lie in [1, 62]");
  }
  if (spec.clusters_per_class < 1) throw UsageError("need at least one cluster per class");
  if (spec.samples < 1) throw UsageError("sample count must be positive");
  if (!(spec.flip_y >= 0.0 && spec.flip_y <= 1.0)) throw UsageError("flip_y must lie in [0,1]");
  const std::size_t clusters = n * spec.clusters_per_class;
  const std::uint64_t vertices = std::uint64_t{1} << spec.informative;
  if (clusters > vertices) {
    throw UsageError(std::to_string(clusters) + " clusters exceed the " +
                     std::to_string(vertices) + " hypercube vertices");
  }

  std::vector<double> weights = spec.class_weights;
  if (weights.empty()) weights = dirichlet_weights(n, rng);
  if (weights.size() != n) throw UsageError("class weight vector has wrong length");
  const double weight_sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(weight_sum - 1.0) > 1e-6) throw UsageError("class weights must sum to 1");

  std::vector<std::size_t> per_cluster(clusters);
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < clusters; ++k) {
    per_cluster[k] = static_cast<std::size_t>(static_cast<double>(spec.samples) * weights[k % n] /
                                              static_cast<double>(spec.clusters_per_class));
    assigned += per_cluster[k];
  }
  for (std::size_t i = 0; assigned < spec.samples; ++i, ++assigned) ++per_cluster[i % clusters];

  std::uniform_int_distribution<std::uint64_t> vertex_pick(0, vertices - 1);
  std::unordered_set<std::uint64_t> used;
  std::vector<std::uint64_t> centroid_bits;
  while (centroid_bits.size() < clusters) {
    const std::uint64_t v = vertex_pick(rng);
    if (used.insert(v).second) centroid_bits.push_back(v);
  }

  const std::size_t inf = spec.informative;
  const std::size_t d = inf + spec.redundant;
  Dataset data;
  data.features = d;
  data.num_labels = n;
  data.x.assign(spec.samples * d, 0.0);
  data.y.assign(spec.samples, 0);

  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<double> z(inf);
  std::vector<double> mix(inf * inf);
  std::size_t row = 0;
  for (std::size_t k = 0; k < clusters; ++k) {
    if (spec.covariance_mixing) {
      for (double& a : mix) a = unit(rng);
    }
    for (std::size_t p = 0; p < per_cluster[k]; ++p, ++row) {
      for (double& v : z) v = normal(rng);
      double* out = data.x.data() + row * d;
      for (std::size_t j = 0; j < inf; ++j) {
        double v = 0.0;
        if (spec.covariance_mixing) {
          for (std::size_t i = 0; i < inf; ++i) v += z[i] * mix[i * inf + j];
        } else {
          v = z[j];
        }
        const bool bit = (centroid_bits[k] >> j) & 1U;
        out[j] = v + (bit ? spec.class_sep : -spec.class_sep);
      }
      data.y[row] = static_cast<Label>(k % n);
    }
  }

  std::vector<double> combo(inf * spec.redundant);
  for (double& b : combo) b = unit(rng);
  for (std::size_t r = 0; r < spec.samples; ++r) {
    double* out = data.x.data() + r * d;
    for (std::size_t j = 0; j < spec.redundant; ++j) {
      double v = 0.0;
      for (std::size_t i = 0; i < inf; ++i) v += out[i] * combo[i * spec.redundant + j];
      out[inf + j] = v;
    }
  }

  if (spec.flip_y > 0.0) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_int_distribution<Label> any_label(0, static_cast<Label>(n - 1));
    for (Label& y : data.y) {
      if (coin(rng) < spec.flip_y) y = any_label(rng);
    }
  }

  std::vector<std::size_t> order(spec.samples);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  return data.select(order);
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  for (std::size_t j = 0; j < data.features; ++j) out << 'f' << j << ',';
  out << "label\n";
  const auto old_precision = out.precision(17);
  for (std::size_t i = 0; i < data.rows(); ++i) {
    for (double v : data.row(i)) out << v << ',';
    out << data.y[i] << '\n';
  }
  out.precision(old_precision);
}

Dataset read_dataset_csv(std::istream& in, const std::string& name, std::size_t num_labels) {
  CsvReader reader(in, name);
  const auto header = reader.header();
  if (header.size() < 2 || header.back() != "label") {
    throw ParseError(name, 1, "expected feature columns followed by 'label'");
  }
  Dataset data;
  data.features = header.size() - 1;
  data.num_labels = num_labels;
  std::vector<std::string> fields;
  while (reader.next(fields)) {
    if (fields.size() != header.size()) reader.fail("expected " + std::to_string(header.size()) + " fields");
    for (std::size_t j = 0; j < data.features; ++j) data.x.push_back(reader.to_double(fields[j]));
    const long label = reader.to_int(fields.back());
    if (label < 0 || static_cast<std::size_t>(label) >= num_labels) reader.fail("label out of range");
    data.y.push_back(static_cast<Label>(label));
  }
  return data;
}

Split make_split(std::size_t rows, const SplitSpec& spec, std::mt19937_64& rng) {
  if (!(spec.test_fraction >= 0.0 && spec.test_fraction < 1.0)) {
    throw UsageError("test fraction must lie in [0,1)");
  }
  const auto test = static_cast<std::size_t>(std::llround(spec.test_fraction * static_cast<double>(rows)));
  if (test + spec.m_cal + spec.m_est >= rows) {
    throw UsageError("split of " + std::to_string(rows) + " rows leaves nothing for training");
  }
  std::vector<std::size_t> order(rows);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  Split s;
  auto it = order.begin();
  auto take = [&](std::size_t count, std::vector<std::size_t>& dst) {
    dst.assign(it, it + static_cast<std::ptrdiff_t>(count));
    it += static_cast<std::ptrdiff_t>(count);
  };
  take(test, s.test);
  take(spec.m_cal, s.cal);
  take(spec.m_est, s.est);
  s.train.assign(it, order.end());
  return s;
}

void check_split(const Split& split, std::size_t rows) {
  std::vector<unsigned char> seen(rows, 0);
  for (const auto* part : {&split.train, &split.cal, &split.est, &split.test}) {
    for (std::size_t i : *part) {
      if (i >= rows) throw UsageError("split index out of range");
      if (seen[i]++) throw UsageError("split parts overlap at row " + std::to_string(i));
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw UsageError("split does not cover every row");
  }
}

ConfusionMatrix synth_confusion(std::size_t n, double target_accuracy,
                                std::span<const double> class_weights, std::mt19937_64& rng,
                                const SynthConfusionOptions& options) {
  if (n < 2) throw UsageError("confusion matrix needs at least two labels");
  if (class_weights.size() != n) throw UsageError("class weight vector has wrong length");
  if (!(target_accuracy > 0.0 && target_accuracy <= 1.0)) {
    throw UsageError("expert accuracy target must lie in (0,1]");
  }
  const double nd = static_cast<double>(n);

  // Randomness is drawn once so the achieved accuracy is a monotone function of pi.
  std::bernoulli_distribution coin(0.5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> sign(n), spread(n), jitter(n * n);
  for (std::size_t y = 0; y < n; ++y) {
    sign[y] = coin(rng) ? 1.0 : -1.0;
    spread[y] = unit(rng);
    for (std::size_t k = 0; k < n; ++k) jitter[y * n + k] = normal(rng);
  }

  auto diagonal = [&](double base, std::size_t y) {
    const double eps = spread[y] * std::min(1.0 - base, base);
    return std::clamp(base + options.diagonal_noise * sign[y] * eps, 0.0, 1.0);
  };
  auto achieved = [&](double base) {
    double acc = 0.0;
    for (std::size_t y = 0; y < n; ++y) acc += class_weights[y] * diagonal(base, y);
    return acc;
  };

  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (achieved(mid) < target_accuracy ? lo : hi) = mid;
  }
  const double base = std::abs(achieved(lo) - target_accuracy) <= std::abs(achieved(hi) - target_accuracy) ? lo : hi;
  if (std::abs(achieved(base) - target_accuracy) > 0.02) {
    throw UsageError("expert accuracy target " + std::to_string(target_accuracy) +
                     " is not reachable with these class weights");
  }

  std::vector<double> c(n * n, 0.0);
  for (std::size_t y = 0; y < n; ++y) {
    const double d = diagonal(base, y);
    const double rest = 1.0 - d;
    double off_total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == y) continue;
      double v = rest / nd;
      if (options.off_diagonal_noise) v += jitter[y * n + k] * rest / (6.0 * nd);
      c[y * n + k] = std::max(v, 0.0);
      off_total += c[y * n + k];
    }
    for (std::size_t k = 0; k < n; ++k) {
      if (k == y) continue;
      c[y * n + k] = off_total > 0.0 ? c[y * n + k] * rest / off_total : rest / (nd - 1.0);
    }
    c[y * n + y] = d;
    double row_sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) row_sum += c[y * n + k];
    for (std::size_t k = 0; k < n; ++k) c[y * n + k] /= row_sum;
  }
  return ConfusionMatrix(n, std::move(c));
}

}  // namespace predset
