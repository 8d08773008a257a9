#include "predset/experiments.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

#include "predset/csv.hpp"
#include "predset/errors.hpp"
#include "predset/topk.hpp"

namespace predset {

// ---------------------------------------------------------------------------
// Seeds, tables, config

std::mt19937_64 make_rng(std::uint64_t master, std::string_view stream,
                         std::initializer_list<std::uint64_t> indices) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (char c : stream) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  std::vector<std::uint32_t> words;
  auto push = [&](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(master);
  push(h);
  for (std::uint64_t i : indices) push(i);
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

ClassSepTable ClassSepTable::parse(std::istream& in, const std::string& name) {
  CsvReader reader(in, name);
  const auto header = reader.header();
  if (header != std::vector<std::string>{"n", "target", "class_sep", "task_seed", "achieved"}) {
    throw ParseError(name, reader.line(), "expected header 'n,target,class_sep,task_seed,achieved'");
  }
  ClassSepTable table;
  std::vector<std::string> f;
  while (reader.next(f)) {
    if (f.size() != 5) reader.fail("expected 5 fields");
    ClassSepEntry e;
    const long n = reader.to_int(f[0]);
    if (n < 2) reader.fail("n must be at least 2");
    e.n = static_cast<std::size_t>(n);
    e.target = reader.to_double(f[1]);
    e.class_sep = reader.to_double(f[2]);
    const long seed = reader.to_int(f[3]);
    if (seed < 0) reader.fail("task seed must be non-negative");
    e.task_seed = static_cast<std::uint64_t>(seed);
    e.achieved = reader.to_double(f[4]);
    table.entries_.push_back(e);
  }
  return table;
}

ClassSepTable ClassSepTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open class_sep table " + path.string());
  return parse(in, path.string());
}

void ClassSepTable::write(std::ostream& out) const {
  CsvWriter w(out, {"n", "target", "class_sep", "task_seed", "achieved"});
  for (const auto& e : entries_) {
    w << e.n << e.target << e.class_sep << static_cast<std::size_t>(e.task_seed) << e.achieved;
    w.end_row();
  }
}

const ClassSepEntry& ClassSepTable::lookup(std::size_t n, double target) const {
  for (const auto& e : entries_) {
    if (e.n == n && std::abs(e.target - target) < 1e-9) return e;
  }
  throw UsageError("class_sep table has no entry for n=" + std::to_string(n) +
                   ", classifier accuracy " + format_double(target));
}

void ClassSepTable::upsert(const ClassSepEntry& entry) {
  for (auto& e : entries_) {
    if (e.n == entry.n && std::abs(e.target - entry.target) < 1e-9) {
      e = entry;
      return;
    }
  }
  entries_.push_back(entry);
  std::sort(entries_.begin(), entries_.end(), [](const auto& a, const auto& b) {
    return a.n != b.n ? a.n < b.n : a.target < b.target;
  });
}

namespace {

void check_unit_list(const std::vector<double>& values, const std::string& key, bool closed_low) {
  for (double v : values) {
    const bool ok = closed_low ? (v >= 0.0 && v <= 1.0) : (v > 0.0 && v <= 1.0);
    if (!ok) throw UsageError(key + " entries must lie in " + (closed_low ? "[0,1]" : "(0,1]"));
  }
}

}  // namespace

ExperimentConfig load_experiment_config(const Config& c) {
  ExperimentConfig e;
  e.kind = c.get_string("kind", e.kind);
  e.n = c.get_size("n", e.n);
  e.m = c.get_size("m", e.m);
  e.samples = c.get_size("samples", e.samples);
  e.test_fraction = c.get_double("test_fraction", e.test_fraction);
  e.informative = c.get_size("informative", e.informative);
  e.redundant = c.get_size("redundant", e.redundant);
  e.clusters_per_class = c.get_size("clusters_per_class", e.clusters_per_class);
  e.covariance_mixing = c.get_bool("covariance_mixing", e.covariance_mixing);
  e.flip_y = c.get_double("flip_y", e.flip_y);
  e.expert_accuracies = c.get_doubles("expert_accuracies", e.expert_accuracies);
  e.classifier_accuracies = c.get_doubles("classifier_accuracies", e.classifier_accuracies);
  e.delta = c.get_double("delta", e.delta);
  e.repetitions = c.get_size("repetitions", e.repetitions);
  e.seed = c.get_u64("seed", e.seed);
  e.class_sep_table = c.get_path("class_sep_table", std::filesystem::path(PREDSET_CONFIG_DIR) / "class_sep.csv");
  e.p_grid = c.get_doubles("p_grid", e.p_grid);
  e.k_grid = c.get_sizes("k_grid", e.k_grid);
  e.m_grid = c.get_sizes("m_grid", e.m_grid);
  e.n_grid = c.get_sizes("n_grid", e.n_grid);
  e.scaling_n = c.get_size("scaling_n", e.scaling_n);
  e.scaling_m = c.get_size("scaling_m", e.scaling_m);
  e.diagonal_noise = c.get_double("diagonal_noise", e.diagonal_noise);
  e.softmax.l2 = c.get_double("l2", e.softmax.l2);
  e.softmax.max_epochs = c.get_size("max_epochs", e.softmax.max_epochs);
  e.softmax.tolerance = c.get_double("tolerance", e.softmax.tolerance);
  const std::string optimizer = c.get_string("optimizer", "lbfgs");
  if (optimizer == "lbfgs") {
    e.softmax.optimizer = Optimizer::kLbfgs;
  } else if (optimizer == "gd") {
    e.softmax.optimizer = Optimizer::kGradientDescent;
  } else {
    throw UsageError("optimizer must be 'lbfgs' or 'gd'");
  }
  e.softmax.step = c.get_double("step", e.softmax.step);
  e.source = c.get_string("source", e.source);
  e.real.labels = c.get_path("labels", {});
  if (c.has("scores")) {
    e.real.scores.clear();
    for (const auto& s : c.get_strings("scores", {})) {
      std::filesystem::path p(s);
      e.real.scores.push_back(p.is_absolute() ? p : c.base_dir() / p);
    }
  }
  e.real.classifier_names = c.get_strings("classifier_names", {});
  e.real.predictions = c.get_path("predictions", {});
  e.difficulty_levels = c.get_size("difficulty_levels", e.difficulty_levels);
  e.predictions_per_sample = c.get_size("predictions_per_sample", e.predictions_per_sample);
  e.sim_class_sep = c.get_double("sim_class_sep", e.sim_class_sep);
  e.sim_task_seed = c.get_u64("sim_task_seed", e.sim_task_seed);
  e.sim_train_sizes = c.get_sizes("sim_train_sizes", e.sim_train_sizes);
  e.sim_concentration = c.get_double("sim_concentration", e.sim_concentration);

  const auto unused = c.unused_keys();
  if (!unused.empty()) throw UsageError("unknown config key '" + unused.front() + "'");

  if (e.n < 2) throw UsageError("n must be at least 2");
  if (e.m < 1) throw UsageError("m must be positive");
  if (e.repetitions < 1) throw UsageError("repetitions must be positive");
  if (!(e.delta > 0.0 && e.delta <= 1.0)) throw UsageError("delta must lie in (0,1]");
  check_unit_list(e.expert_accuracies, "expert_accuracies", false);
  check_unit_list(e.classifier_accuracies, "classifier_accuracies", false);
  check_unit_list(e.p_grid, "p_grid", true);
  if (e.source != "synthetic" && e.source != "files") {
    throw UsageError("source must be 'synthetic' or 'files'");
  }
  if (e.source == "files") {
    if (e.real.labels.empty() || e.real.scores.empty()) {
      throw UsageError("source = files needs 'labels' and 'scores'");
    }
    for (const auto& p : e.real.scores) {
      if (!std::filesystem::exists(p)) throw UsageError("missing score file " + p.string());
    }
    if (!std::filesystem::exists(e.real.labels)) throw UsageError("missing labels file " + e.real.labels.string());
  }
  if (e.difficulty_levels != 1 && e.difficulty_levels != 3) {
    throw UsageError("difficulty_levels must be 1 or 3");
  }
  if (e.sim_train_sizes.empty()) throw UsageError("sim_train_sizes must not be empty");
  return e;
}

Stat summarize(std::span<const double> values) {
  Stat s;
  s.count = values.size();
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.se = std::sqrt(ss / static_cast<double>(values.size() - 1)) /
           std::sqrt(static_cast<double>(values.size()));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Trials

Dataset make_task(const ExperimentConfig& config, std::size_t n, const ClassSepEntry& entry) {
  TaskSpec spec;
  spec.n = n;
  spec.informative = config.informative;
  spec.redundant = config.redundant;
  spec.class_sep = entry.class_sep;
  spec.samples = config.samples;
  spec.seed = entry.task_seed;
  spec.clusters_per_class = config.clusters_per_class;
  spec.covariance_mixing = config.covariance_mixing;
  spec.flip_y = config.flip_y;
  auto rng = make_rng(entry.task_seed, "task", {n});
  return generate_task(spec, rng);
}

Trial make_trial(const ExperimentConfig& config, const Dataset& task, std::size_t m,
                 std::size_t classifier_index, std::size_t repetition) {
  Trial t;
  t.n = task.num_labels;
  t.m = m;
  t.classifier_index = classifier_index;
  t.repetition = repetition;
  auto rng = make_rng(config.seed, "split", {t.n, m, classifier_index, repetition});
  const SplitSpec spec{m, m, config.test_fraction, config.seed};
  const Split split = make_split(task.rows(), spec, rng);
  check_split(split, task.rows());
  const SoftmaxClassifier clf = train_softmax(task, split.train, config.softmax, &t.training);
  auto scored = [&](const std::vector<std::size_t>& rows) {
    const Dataset part = task.select(rows);
    return LabeledScores(clf.score(part), part.y);
  };
  t.cal = scored(split.cal);
  t.est = scored(split.est);
  t.test = scored(split.test);
  t.class_weights = task.class_frequencies();
  std::size_t hits = 0;
  for (std::size_t i = 0; i < t.test.size(); ++i) {
    const auto row = t.test.row(i);
    hits += static_cast<Label>(std::max_element(row.begin(), row.end()) - row.begin()) == t.test.label(i);
  }
  t.classifier_accuracy = static_cast<double>(hits) / static_cast<double>(t.test.size());
  return t;
}

ConfusionMatrix make_expert(const ExperimentConfig& config, const Trial& trial,
                            std::size_t expert_index) {
  auto rng = make_rng(config.seed, "expert",
                      {trial.n, trial.m, trial.classifier_index, expert_index, trial.repetition});
  SynthConfusionOptions options;
  options.diagonal_noise = config.diagonal_noise;
  return synth_confusion(trial.n, config.expert_accuracies.at(expert_index), trial.class_weights,
                         rng, options);
}

double expert_alone(const ConfusionMatrix& confusion, const LabeledScores& test) {
  ExactMean acc;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto y = static_cast<std::size_t>(test.label(i));
    acc.add(confusion.at(y, y));
  }
  return acc.mean(test.size());
}

namespace {

/// Per (classifier, repetition) slot: the body runs once per slot on a worker thread.
/// Tasks are generated once per classifier accuracy; failures are recorded per slot.
template <typename Body>
std::vector<std::string> for_each_trial(const ExperimentConfig& config, std::size_t n,
                                        std::size_t m, std::size_t repetitions, Body&& body) {
  const std::size_t classifiers = config.classifier_accuracies.size();
  std::vector<std::string> errors(classifiers * repetitions);
  std::vector<Dataset> tasks(classifiers);
  std::vector<std::string> task_errors(classifiers);
  ClassSepTable table;
  std::string table_error;
  try {
    table = ClassSepTable::load(config.class_sep_table);
  } catch (const std::exception& e) {
    table_error = e.what();
  }
  for (std::size_t c = 0; c < classifiers; ++c) {
    if (!table_error.empty()) {
      task_errors[c] = table_error;
      continue;
    }
    try {
      tasks[c] = make_task(config, n, table.lookup(n, config.classifier_accuracies[c]));
    } catch (const std::exception& e) {
      task_errors[c] = e.what();
    }
  }
  const auto jobs = static_cast<std::ptrdiff_t>(classifiers * repetitions);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t j = 0; j < jobs; ++j) {
    const auto job = static_cast<std::size_t>(j);
    const std::size_t c = job / repetitions;
    const std::size_t r = job % repetitions;
    if (!task_errors[c].empty()) {
      errors[job] = task_errors[c];
      continue;
    }
    try {
      const Trial trial = make_trial(config, tasks[c], m, c, r);
      body(trial);
    } catch (const std::exception& e) {
      errors[job] = e.what();
    }
  }
  return errors;
}

/// Per (expert, classifier, repetition) storage.
template <typename T>
struct CellSlots {
  std::size_t experts, classifiers, reps;
  std::vector<T> values;
  std::vector<std::string> errors;
  CellSlots(std::size_t e, std::size_t c, std::size_t r)
      : experts(e), classifiers(c), reps(r), values(e * c * r), errors(e * c * r) {}
  std::size_t index(std::size_t e, std::size_t c, std::size_t r) const { return (e * classifiers + c) * reps + r; }
  T& at(std::size_t e, std::size_t c, std::size_t r) { return values[index(e, c, r)]; }
  /// First error of the cell, including trial-level errors.
  std::string cell_error(std::size_t e, std::size_t c, const std::vector<std::string>& trial_errors) const {
    for (std::size_t r = 0; r < reps; ++r) {
      if (!trial_errors[c * reps + r].empty()) return trial_errors[c * reps + r];
      if (!errors[index(e, c, r)].empty()) return errors[index(e, c, r)];
    }
    return {};
  }
};

struct GridSample {
  double alone = 0.0, classifier = 0.0, success = 0.0, alpha_hat = 0.0;
};

template <typename T, typename F>
std::vector<double> collect(CellSlots<T>& slots, std::size_t e, std::size_t c, F&& field) {
  std::vector<double> out;
  for (std::size_t r = 0; r < slots.reps; ++r) out.push_back(field(slots.at(e, c, r)));
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Success grid

GridResult run_success_grid(const ExperimentConfig& config, std::size_t n, std::size_t m) {
  const std::size_t E = config.expert_accuracies.size();
  const std::size_t C = config.classifier_accuracies.size();
  const std::size_t R = config.repetitions;
  CellSlots<GridSample> slots(E, C, R);
  const auto trial_errors = for_each_trial(config, n, m, R, [&](const Trial& t) {
    for (std::size_t e = 0; e < E; ++e) {
      const std::size_t idx = slots.index(e, t.classifier_index, t.repetition);
      try {
        const ConfusionMatrix confusion = make_expert(config, t, e);
        const MnlExpert expert = MnlExpert::from_confusion(confusion);
        const ExpertBinding binding(expert);
        const SearchResult sr = find_near_optimal_alpha(t.cal, t.est, binding, config.delta);
        GridSample& s = slots.values[idx];
        s.alone = expert_alone(confusion, t.test);
        s.classifier = t.classifier_accuracy;
        s.success = true_success_probability(sr.predictor, t.test, binding);
        s.alpha_hat = sr.alpha_hat;
      } catch (const std::exception& ex) {
        slots.errors[idx] = ex.what();
      }
    }
  });

  GridResult result;
  std::vector<double> gains;
  for (std::size_t e = 0; e < E; ++e) {
    for (std::size_t c = 0; c < C; ++c) {
      GridCell cell;
      cell.n = n;
      cell.m = m;
      cell.expert_target = config.expert_accuracies[e];
      cell.classifier_target = config.classifier_accuracies[c];
      cell.error = slots.cell_error(e, c, trial_errors);
      if (cell.error.empty()) {
        cell.expert_alone = summarize(collect(slots, e, c, [](auto& s) { return s.alone; }));
        cell.classifier = summarize(collect(slots, e, c, [](auto& s) { return s.classifier; }));
        cell.success = summarize(collect(slots, e, c, [](auto& s) { return s.success; }));
        cell.alpha_hat = summarize(collect(slots, e, c, [](auto& s) { return s.alpha_hat; }));
        cell.relative_gain = summarize(collect(slots, e, c, [](auto& s) {
          return (s.success - s.alone) / s.alone;
        }));
        gains.push_back(cell.relative_gain.mean);
      }
      result.cells.push_back(cell);
    }
  }
  result.relative_gain = summarize(gains);
  return result;
}

GridResult run_success_grid(const ExperimentConfig& config) {
  return run_success_grid(config, config.n, config.m);
}

void write_grid_csv(std::ostream& out, const GridResult& result) {
  CsvWriter w(out, {"n", "m", "expert_accuracy", "classifier_accuracy", "expert_alone",
                    "expert_alone_se", "classifier", "classifier_se", "success", "success_se",
                    "alpha_hat", "alpha_hat_se", "relative_gain", "relative_gain_se", "error"});
  for (const auto& c : result.cells) {
    w << c.n << c.m << c.expert_target << c.classifier_target << c.expert_alone.mean
      << c.expert_alone.se << c.classifier.mean << c.classifier.se << c.success.mean
      << c.success.se << c.alpha_hat.mean << c.alpha_hat.se << c.relative_gain.mean
      << c.relative_gain.se << c.error;
    w.end_row();
  }
}

// ---------------------------------------------------------------------------
// Alpha sweep

std::vector<double> set_size_curve(std::span<const double> sorted_cal, const LabeledScores& data) {
  const std::size_t m = sorted_cal.size();
  std::vector<long long> diff(m + 2, 0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto row = data.row(i);
    for (double f : row) {
      const auto pos = std::lower_bound(sorted_cal.begin(), sorted_cal.end(), 1.0 - f);
      if (pos == sorted_cal.end()) continue;
      ++diff[static_cast<std::size_t>(pos - sorted_cal.begin()) + 1];
    }
  }
  std::vector<double> curve(m);
  long long running = 0;
  for (std::size_t r = 1; r <= m; ++r) {
    running += diff[r];
    curve[r - 1] = static_cast<double>(running) / static_cast<double>(data.size());
  }
  return curve;
}

namespace {

struct SweepSample {
  std::vector<double> mu, success, sizes, histogram;
  double alpha_hat = 0.0, success_hat = 0.0, size_hat = 0.0;
};

std::vector<double> sorted_cal_scores(const LabeledScores& cal) {
  auto s = calibration_scores(cal);
  std::sort(s.begin(), s.end());
  return s;
}

}  // namespace

AlphaSweepResult run_alpha_sweep(const ExperimentConfig& config) {
  const std::size_t E = config.expert_accuracies.size();
  const std::size_t C = config.classifier_accuracies.size();
  const std::size_t R = config.repetitions;
  CellSlots<SweepSample> slots(E, C, R);
  const auto trial_errors = for_each_trial(config, config.n, config.m, R, [&](const Trial& t) {
    const auto sorted_cal = sorted_cal_scores(t.cal);
    const auto sizes = set_size_curve(sorted_cal, t.test);
    for (std::size_t e = 0; e < E; ++e) {
      const std::size_t idx = slots.index(e, t.classifier_index, t.repetition);
      try {
        const MnlExpert expert = MnlExpert::from_confusion(make_expert(config, t, e));
        const ExpertBinding binding(expert);
        const SearchResult sr = find_near_optimal_alpha(t.cal, t.est, binding, config.delta);
        SweepSample& s = slots.values[idx];
        for (const auto& rep : sr.reports) s.mu.push_back(rep.mu_hat);
        s.success = success_curve(sorted_cal, t.test, binding);
        s.sizes = sizes;
        s.alpha_hat = sr.alpha_hat;
        s.success_hat = s.success[sr.rank_hat - 1];
        s.size_hat = sizes[sr.rank_hat - 1];
        const auto hist = set_size_histogram(sr.predictor, t.test);
        for (std::size_t h : hist) s.histogram.push_back(static_cast<double>(h) / static_cast<double>(t.test.size()));
      } catch (const std::exception& ex) {
        slots.errors[idx] = ex.what();
      }
    }
  });

  AlphaSweepResult result;
  result.n = config.n;
  result.m = config.m;
  const CandidateGrid grid(config.m);
  for (std::size_t e = 0; e < E; ++e) {
    for (std::size_t c = 0; c < C; ++c) {
      AlphaSweepCell cell;
      cell.expert_target = config.expert_accuracies[e];
      cell.classifier_target = config.classifier_accuracies[c];
      cell.error = slots.cell_error(e, c, trial_errors);
      if (cell.error.empty()) {
        cell.alphas = grid.alphas();
        const std::size_t m = config.m;
        cell.mu_hat.assign(m, 0.0);
        cell.success.assign(m, 0.0);
        cell.success_se.assign(m, 0.0);
        cell.mean_set_size.assign(m, 0.0);
        cell.size_histogram.assign(config.n + 1, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
          std::vector<double> succ;
          for (std::size_t r = 0; r < R; ++r) {
            const auto& s = slots.at(e, c, r);
            cell.mu_hat[i] += s.mu[i] / static_cast<double>(R);
            cell.mean_set_size[i] += s.sizes[i] / static_cast<double>(R);
            succ.push_back(s.success[i]);
          }
          const Stat st = summarize(succ);
          cell.success[i] = st.mean;
          cell.success_se[i] = st.se;
        }
        for (std::size_t r = 0; r < R; ++r) {
          const auto& s = slots.at(e, c, r);
          cell.alpha_hat.push_back(s.alpha_hat);
          for (std::size_t k = 0; k < s.histogram.size(); ++k) {
            cell.size_histogram[k] += s.histogram[k] / static_cast<double>(R);
          }
        }
        cell.success_at_alpha_hat = summarize(collect(slots, e, c, [](auto& s) { return s.success_hat; }));
        cell.set_size_at_alpha_hat = summarize(collect(slots, e, c, [](auto& s) { return s.size_hat; }));
      }
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

void write_alpha_curve_csv(std::ostream& out, const AlphaSweepResult& result) {
  CsvWriter w(out, {"expert_accuracy", "classifier_accuracy", "alpha", "mu_hat", "success",
                    "success_se", "mean_set_size"});
  for (const auto& c : result.cells) {
    for (std::size_t i = 0; i < c.alphas.size(); ++i) {
      w << c.expert_target << c.classifier_target << c.alphas[i] << c.mu_hat[i] << c.success[i]
        << c.success_se[i] << c.mean_set_size[i];
      w.end_row();
    }
  }
}

void write_alpha_markers_csv(std::ostream& out, const AlphaSweepResult& result) {
  CsvWriter w(out, {"expert_accuracy", "classifier_accuracy", "repetition", "alpha_hat", "error"});
  for (const auto& c : result.cells) {
    if (!c.error.empty()) {
      w << c.expert_target << c.classifier_target << std::size_t{0} << 0.0 << c.error;
      w.end_row();
    }
    for (std::size_t r = 0; r < c.alpha_hat.size(); ++r) {
      w << c.expert_target << c.classifier_target << r << c.alpha_hat[r] << "";
      w.end_row();
    }
  }
}

void write_set_size_csv(std::ostream& out, const AlphaSweepResult& result) {
  CsvWriter w(out, {"expert_accuracy", "classifier_accuracy", "set_size", "fraction"});
  for (const auto& c : result.cells) {
    for (std::size_t k = 0; k < c.size_histogram.size(); ++k) {
      w << c.expert_target << c.classifier_target << k << c.size_histogram[k];
      w.end_row();
    }
  }
}

// ---------------------------------------------------------------------------
// IIA robustness

IiaResult run_iia_robustness(const ExperimentConfig& config) {
  const std::size_t E = config.expert_accuracies.size();
  const std::size_t C = config.classifier_accuracies.size();
  const std::size_t R = config.repetitions;
  const std::size_t P = config.p_grid.size();
  struct Sample {
    std::vector<double> success;
    double alone = 0.0;
  };
  CellSlots<Sample> slots(E, C, R);
  const auto trial_errors = for_each_trial(config, config.n, config.m, R, [&](const Trial& t) {
    for (std::size_t e = 0; e < E; ++e) {
      const std::size_t idx = slots.index(e, t.classifier_index, t.repetition);
      try {
        const ConfusionMatrix confusion = make_expert(config, t, e);
        const MnlExpert expert = MnlExpert::from_confusion(confusion);
        // The search sees only the frozen MNL; the violation exists at test time only.
        const SearchResult sr = find_near_optimal_alpha(t.cal, t.est, ExpertBinding(expert), config.delta);
        Sample& s = slots.values[idx];
        s.alone = expert_alone(confusion, t.test);
        for (double p : config.p_grid) {
          s.success.push_back(violated_success_probability(sr.predictor, t.test, confusion, p));
        }
      } catch (const std::exception& ex) {
        slots.errors[idx] = ex.what();
      }
    }
  });

  IiaResult result;
  for (std::size_t e = 0; e < E; ++e) {
    for (std::size_t c = 0; c < C; ++c) {
      const std::string err = slots.cell_error(e, c, trial_errors);
      for (std::size_t pi = 0; pi < P; ++pi) {
        IiaPoint pt;
        pt.expert_target = config.expert_accuracies[e];
        pt.classifier_target = config.classifier_accuracies[c];
        pt.p = config.p_grid[pi];
        pt.error = err;
        if (err.empty()) {
          pt.success = summarize(collect(slots, e, c, [&](auto& s) { return s.success[pi]; }));
          pt.expert_alone = summarize(collect(slots, e, c, [](auto& s) { return s.alone; }));
        }
        result.points.push_back(pt);
      }
    }
  }
  return result;
}

void write_iia_csv(std::ostream& out, const IiaResult& result) {
  CsvWriter w(out, {"expert_accuracy", "classifier_accuracy", "p", "success", "success_se",
                    "expert_alone", "expert_alone_se", "error"});
  for (const auto& p : result.points) {
    w << p.expert_target << p.classifier_target << p.p << p.success.mean << p.success.se
      << p.expert_alone.mean << p.expert_alone.se << p.error;
    w.end_row();
  }
}

// ---------------------------------------------------------------------------
// Top-k baseline

namespace {

std::vector<std::size_t> resolve_k_grid(const ExperimentConfig& config, std::size_t n) {
  std::vector<std::size_t> ks = config.k_grid;
  if (ks.empty()) {
    ks.resize(n);
    std::iota(ks.begin(), ks.end(), 1);
  }
  for (std::size_t k : ks) {
    if (k < 1 || k > n) throw UsageError("k-grid entry " + std::to_string(k) + " outside [1, n]");
  }
  return ks;
}

/// Index of the largest mean (ties to the smaller k).
std::size_t best_index(const std::vector<Stat>& stats) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < stats.size(); ++i) {
    if (stats[i].mean > stats[best].mean) best = i;
  }
  return best;
}

}  // namespace

TopKResult run_topk_baseline(const ExperimentConfig& config) {
  const std::vector<std::size_t> ks = resolve_k_grid(config, config.n);
  const std::size_t E = config.expert_accuracies.size();
  const std::size_t C = config.classifier_accuracies.size();
  const std::size_t R = config.repetitions;
  struct Sample {
    std::vector<double> topk;
    double system = 0.0;
  };
  CellSlots<Sample> slots(E, C, R);
  const auto trial_errors = for_each_trial(config, config.n, config.m, R, [&](const Trial& t) {
    for (std::size_t e = 0; e < E; ++e) {
      const std::size_t idx = slots.index(e, t.classifier_index, t.repetition);
      try {
        const MnlExpert expert = MnlExpert::from_confusion(make_expert(config, t, e));
        const ExpertBinding binding(expert);
        const SearchResult sr = find_near_optimal_alpha(t.cal, t.est, binding, config.delta);
        Sample& s = slots.values[idx];
        s.system = true_success_probability(sr.predictor, t.test, binding);
        for (std::size_t k : ks) s.topk.push_back(true_success_probability(TopKPredictor{k}, t.test, binding));
      } catch (const std::exception& ex) {
        slots.errors[idx] = ex.what();
      }
    }
  });

  TopKResult result;
  for (std::size_t e = 0; e < E; ++e) {
    for (std::size_t c = 0; c < C; ++c) {
      TopKCell cell;
      cell.expert_target = config.expert_accuracies[e];
      cell.classifier_target = config.classifier_accuracies[c];
      cell.ks = ks;
      cell.error = slots.cell_error(e, c, trial_errors);
      if (cell.error.empty()) {
        for (std::size_t ki = 0; ki < ks.size(); ++ki) {
          cell.success.push_back(summarize(collect(slots, e, c, [&](auto& s) { return s.topk[ki]; })));
        }
        cell.success_alpha_hat = summarize(collect(slots, e, c, [](auto& s) { return s.system; }));
        const std::size_t b = best_index(cell.success);
        cell.best_k = ks[b];
        cell.success_best_k = cell.success[b];
      }
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

void write_topk_curve_csv(std::ostream& out, const TopKResult& result) {
  CsvWriter w(out, {"expert_accuracy", "classifier_accuracy", "k", "success", "success_se"});
  for (const auto& c : result.cells) {
    for (std::size_t i = 0; i < c.success.size(); ++i) {
      w << c.expert_target << c.classifier_target << c.ks[i] << c.success[i].mean << c.success[i].se;
      w.end_row();
    }
  }
}

void write_topk_summary_csv(std::ostream& out, const TopKResult& result) {
  CsvWriter w(out, {"expert_accuracy", "classifier_accuracy", "success_alpha_hat",
                    "success_alpha_hat_se", "best_k", "success_best_k", "success_best_k_se",
                    "error"});
  for (const auto& c : result.cells) {
    w << c.expert_target << c.classifier_target << c.success_alpha_hat.mean
      << c.success_alpha_hat.se << c.best_k << c.success_best_k.mean << c.success_best_k.se
      << c.error;
    w.end_row();
  }
}

// ---------------------------------------------------------------------------
// Coverage sensitivity

std::size_t CoverageResult::within(double tolerance) const {
  std::size_t count = 0;
  for (const auto& p : points) {
    count += std::abs(p.empirical_coverage - p.target_coverage) <= tolerance;
  }
  return count;
}

CoverageResult run_coverage_sensitivity(const ExperimentConfig& config) {
  if (config.expert_accuracies.empty() || config.classifier_accuracies.empty()) {
    throw UsageError("coverage run needs one expert and one classifier accuracy");
  }
  ExperimentConfig one = config;
  one.expert_accuracies.resize(1);
  one.classifier_accuracies.resize(1);
  const std::size_t R = config.repetitions;
  std::vector<CoveragePoint> points(R);
  std::vector<std::string> errors(R);
  const auto trial_errors = for_each_trial(one, one.n, one.m, R, [&](const Trial& t) {
    try {
      const MnlExpert expert = MnlExpert::from_confusion(make_expert(one, t, 0));
      const SearchResult sr = find_near_optimal_alpha(t.cal, t.est, ExpertBinding(expert), one.delta);
      CoveragePoint& p = points[t.repetition];
      p.split = t.repetition;
      p.alpha_hat = sr.alpha_hat;
      p.target_coverage = 1.0 - sr.alpha_hat;
      p.empirical_coverage = empirical_coverage(sr.predictor, t.test);
    } catch (const std::exception& ex) {
      errors[t.repetition] = ex.what();
    }
  });
  for (std::size_t r = 0; r < R; ++r) {
    if (!trial_errors[r].empty()) throw UsageError("coverage split " + std::to_string(r) + ": " + trial_errors[r]);
    if (!errors[r].empty()) throw UsageError("coverage split " + std::to_string(r) + ": " + errors[r]);
  }
  CoverageResult result;
  result.expert_target = one.expert_accuracies[0];
  result.classifier_target = one.classifier_accuracies[0];
  result.points = std::move(points);
  return result;
}

void write_coverage_csv(std::ostream& out, const CoverageResult& result) {
  CsvWriter w(out, {"split", "alpha_hat", "target_coverage", "empirical_coverage"});
  for (const auto& p : result.points) {
    w << p.split << p.alpha_hat << p.target_coverage << p.empirical_coverage;
    w.end_row();
  }
}

// ---------------------------------------------------------------------------
// Scaling

ScalingResult run_scaling_sweeps(const ExperimentConfig& config) {
  ScalingResult result;
  auto add = [&](const std::string& sweep, std::size_t n, std::size_t m) {
    ScalingRow row;
    row.sweep = sweep;
    row.n = n;
    row.m = m;
    const GridResult grid = run_success_grid(config, n, m);
    row.relative_gain = grid.relative_gain;
    row.cells = grid.relative_gain.count;
    for (const auto& c : grid.cells) {
      if (!c.error.empty()) {
        row.error = c.error;
        break;
      }
    }
    result.rows.push_back(row);
  };
  for (std::size_t m : config.m_grid) add("m", config.scaling_n, m);
  for (std::size_t n : config.n_grid) add("n", n, config.scaling_m);
  return result;
}

void write_scaling_csv(std::ostream& out, const ScalingResult& result) {
  CsvWriter w(out, {"sweep", "n", "m", "relative_gain", "relative_gain_se", "cells", "error"});
  for (const auto& r : result.rows) {
    w << r.sweep << r.n << r.m << r.relative_gain.mean << r.relative_gain.se << r.cells << r.error;
    w.end_row();
  }
}

// ---------------------------------------------------------------------------
// Real-format data

RealData simulate_real_data(const ExperimentConfig& config) {
  const std::size_t n = config.n;
  const std::size_t pool = *std::max_element(config.sim_train_sizes.begin(), config.sim_train_sizes.end());
  ExperimentConfig task_config = config;
  task_config.samples = config.samples + pool;
  ClassSepEntry entry;
  entry.n = n;
  entry.class_sep = config.sim_class_sep;
  entry.task_seed = config.sim_task_seed;
  const Dataset task = make_task(task_config, n, entry);

  std::vector<std::size_t> evaluated(config.samples);
  std::iota(evaluated.begin(), evaluated.end(), 0);
  const Dataset images = task.select(evaluated);

  RealData data;
  data.num_labels = n;
  data.labels = images.y;
  for (std::size_t i = 0; i < images.rows(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%06zu", i);
    data.sample_ids.emplace_back(buf);
  }
  for (std::size_t size : config.sim_train_sizes) {
    std::vector<std::size_t> train(size);
    std::iota(train.begin(), train.end(), config.samples);
    const SoftmaxClassifier clf = train_softmax(task, train, config.softmax);
    data.scores.push_back(clf.score(images));
    data.classifier_names.push_back("clf" + std::to_string(size));
  }

  auto rng = make_rng(config.seed, "sim-expert", {n});
  SynthConfusionOptions options;
  options.diagonal_noise = config.diagonal_noise;
  const ConfusionMatrix confusion =
      synth_confusion(n, config.expert_accuracies.at(0), task.class_frequencies(), rng, options);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  data.predictions.assign(images.rows(), {});
  std::vector<double> off(n);
  for (std::size_t i = 0; i < images.rows(); ++i) {
    const auto y = static_cast<std::size_t>(data.labels[i]);
    const double c = confusion.at(y, y);
    double q = c;
    if (c > 0.0 && c < 1.0) {
      std::gamma_distribution<double> ga(config.sim_concentration * c, 1.0);
      std::gamma_distribution<double> gb(config.sim_concentration * (1.0 - c), 1.0);
      const double a = ga(rng), b = gb(rng);
      q = a + b > 0.0 ? a / (a + b) : c;
    }
    for (std::size_t k = 0; k < n; ++k) off[k] = k == y ? 0.0 : confusion.at(y, k);
    std::discrete_distribution<int> wrong(off.begin(), off.end());
    for (std::size_t j = 0; j < config.predictions_per_sample; ++j) {
      if (unit(rng) < q || c >= 1.0) {
        data.predictions[i].push_back(static_cast<Label>(y));
      } else {
        data.predictions[i].push_back(static_cast<Label>(wrong(rng)));
      }
    }
  }
  return data;
}

RealData load_real_data(const ExperimentConfig& config) {
  if (config.source == "files") return ingest_real_data(config.real);
  return simulate_real_data(config);
}

namespace {

struct RealSplit {
  std::vector<std::size_t> cal, est, test;
};

RealSplit split_real(const ExperimentConfig& config, std::size_t rows, std::size_t m,
                     std::size_t repetition) {
  if (2 * m >= rows) {
    throw UsageError("m=" + std::to_string(m) + " leaves no test samples out of " + std::to_string(rows));
  }
  std::vector<std::size_t> order(rows);
  std::iota(order.begin(), order.end(), 0);
  auto rng = make_rng(config.seed, "real-split", {m, repetition});
  std::shuffle(order.begin(), order.end(), rng);
  RealSplit s;
  s.cal.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m));
  s.est.assign(order.begin() + static_cast<std::ptrdiff_t>(m), order.begin() + static_cast<std::ptrdiff_t>(2 * m));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(2 * m), order.end());
  return s;
}

double argmax_accuracy(const LabeledScores& data) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto row = data.row(i);
    hits += static_cast<Label>(std::max_element(row.begin(), row.end()) - row.begin()) == data.label(i);
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

template <typename T>
std::vector<T> pick(const std::vector<T>& values, const std::vector<std::size_t>& rows) {
  std::vector<T> out;
  out.reserve(rows.size());
  for (std::size_t i : rows) out.push_back(values[i]);
  return out;
}

}  // namespace

RealResult run_real_data(const ExperimentConfig& config, const RealData& data) {
  const std::size_t n = data.num_labels;
  const std::vector<std::size_t> ks = resolve_k_grid(config, n);
  const ConfusionMatrix confusion = estimate_confusion(data.prediction_pairs(), n);
  const MnlExpert expert = MnlExpert::from_confusion(confusion);
  const ExpertBinding binding(expert);
  const std::size_t R = config.repetitions;
  const std::size_t K = data.scores.size();
  struct Sample {
    double classifier = 0.0, alone = 0.0, system = 0.0;
    std::vector<double> topk;
  };
  std::vector<Sample> samples(K * R);
  std::vector<std::string> errors(K * R);
  const auto jobs = static_cast<std::ptrdiff_t>(K * R);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t j = 0; j < jobs; ++j) {
    const auto job = static_cast<std::size_t>(j);
    const std::size_t c = job / R, r = job % R;
    try {
      const RealSplit split = split_real(config, data.size(), config.m, r);
      const LabeledScores all = data.labeled(c);
      const LabeledScores cal = all.subset(split.cal), est = all.subset(split.est),
                          test = all.subset(split.test);
      const SearchResult sr = find_near_optimal_alpha(cal, est, binding, config.delta);
      Sample& s = samples[job];
      s.classifier = argmax_accuracy(test);
      s.alone = data.expert_accuracy(split.test);
      s.system = true_success_probability(sr.predictor, test, binding);
      for (std::size_t k : ks) s.topk.push_back(true_success_probability(TopKPredictor{k}, test, binding));
    } catch (const std::exception& ex) {
      errors[job] = ex.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw UsageError(e);
  }
  RealResult result;
  for (std::size_t c = 0; c < K; ++c) {
    auto col = [&](auto field) {
      std::vector<double> v;
      for (std::size_t r = 0; r < R; ++r) v.push_back(field(samples[c * R + r]));
      return summarize(v);
    };
    RealRow row;
    row.classifier = data.classifier_names[c];
    row.m = config.m;
    row.classifier_accuracy = col([](const Sample& s) { return s.classifier; });
    row.expert_alone = col([](const Sample& s) { return s.alone; });
    row.success_alpha_hat = col([](const Sample& s) { return s.system; });
    std::vector<Stat> per_k;
    for (std::size_t ki = 0; ki < ks.size(); ++ki) per_k.push_back(col([&](const Sample& s) { return s.topk[ki]; }));
    const std::size_t b = best_index(per_k);
    row.best_k = ks[b];
    row.success_best_k = per_k[b];
    result.rows.push_back(row);
  }
  return result;
}

void write_real_csv(std::ostream& out, const RealResult& result) {
  CsvWriter w(out, {"classifier", "m", "classifier_accuracy", "expert_alone", "success_alpha_hat",
                    "success_alpha_hat_se", "best_k", "success_best_k", "success_best_k_se"});
  for (const auto& r : result.rows) {
    w << r.classifier << r.m << r.classifier_accuracy.mean << r.expert_alone.mean
      << r.success_alpha_hat.mean << r.success_alpha_hat.se << r.best_k << r.success_best_k.mean
      << r.success_best_k.se;
    w.end_row();
  }
}

// ---------------------------------------------------------------------------
// Difficulty-conditioned expert

DifficultyExpert build_difficulty_expert(const RealData& data, std::span<const Difficulty> levels,
                                         const DifficultyThresholds& thresholds) {
  if (levels.size() != data.size()) throw UsageError("difficulty levels do not cover every sample");
  const std::size_t n = data.num_labels;
  std::array<MnlExpert, kDifficultyLevels> tables;
  for (std::size_t lvl = 0; lvl < kDifficultyLevels; ++lvl) {
    std::vector<std::pair<Label, Label>> pairs;
    std::vector<unsigned char> observed(n, 0);
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (static_cast<std::size_t>(levels[i]) != lvl) continue;
      for (Label p : data.predictions[i]) pairs.emplace_back(data.labels[i], p);
      if (!data.predictions[i].empty()) observed[static_cast<std::size_t>(data.labels[i])] = 1;
    }
    // Classes never seen at this level use every prediction made for that class.
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (observed[static_cast<std::size_t>(data.labels[i])]) continue;
      for (Label p : data.predictions[i]) pairs.emplace_back(data.labels[i], p);
    }
    tables[lvl] = MnlExpert::from_confusion(estimate_confusion(pairs, n));
  }
  return DifficultyExpert(std::move(tables), thresholds);
}

DifficultyResult run_difficulty_variant(const ExperimentConfig& config, const RealData& data) {
  const std::size_t n = data.num_labels;
  const MnlExpert base = MnlExpert::from_confusion(estimate_confusion(data.prediction_pairs(), n));
  const std::vector<double> fractions = data.correct_fractions();
  const std::vector<std::size_t> ms = config.m_grid.empty() ? std::vector<std::size_t>{config.m} : config.m_grid;
  const std::size_t R = config.repetitions;
  const std::size_t K = data.scores.size();
  struct Sample {
    double classifier = 0.0, alone = 0.0, base = 0.0, leveled = 0.0;
  };
  const std::size_t jobs_total = K * ms.size() * R;
  std::vector<Sample> samples(jobs_total);
  std::vector<std::string> errors(jobs_total);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(jobs_total); ++j) {
    const auto job = static_cast<std::size_t>(j);
    const std::size_t c = job / (ms.size() * R);
    const std::size_t mi = (job / R) % ms.size();
    const std::size_t r = job % R;
    try {
      const RealSplit split = split_real(config, data.size(), ms[mi], r);
      const LabeledScores all = data.labeled(c);
      const LabeledScores cal = all.subset(split.cal), est = all.subset(split.est),
                          test = all.subset(split.test);
      // Thresholds are frozen from the estimation split only.
      const DifficultyThresholds thr = difficulty_thresholds(pick(fractions, split.est));
      const std::vector<Difficulty> levels = assign_difficulty(fractions, thr);
      const DifficultyExpert leveled = config.difficulty_levels == 1
                                           ? DifficultyExpert::uniform(base, thr)
                                           : build_difficulty_expert(data, levels, thr);
      const std::vector<Difficulty> est_levels = pick(levels, split.est);
      const std::vector<Difficulty> test_levels = pick(levels, split.test);

      Sample& s = samples[job];
      s.classifier = argmax_accuracy(test);
      s.alone = data.expert_accuracy(split.test);
      const ExpertBinding base_binding(base);
      const SearchResult b = find_near_optimal_alpha(cal, est, base_binding, config.delta);
      s.base = true_success_probability(b.predictor, test, base_binding);
      const SearchResult d = find_near_optimal_alpha(cal, est, ExpertBinding(leveled, est_levels), config.delta);
      s.leveled = true_success_probability(d.predictor, test, ExpertBinding(leveled, test_levels));
    } catch (const std::exception& ex) {
      errors[job] = ex.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw UsageError(e);
  }
  DifficultyResult result;
  for (std::size_t c = 0; c < K; ++c) {
    for (std::size_t mi = 0; mi < ms.size(); ++mi) {
      auto col = [&](auto field) {
        std::vector<double> v;
        for (std::size_t r = 0; r < R; ++r) v.push_back(field(samples[(c * ms.size() + mi) * R + r]));
        return summarize(v);
      };
      DifficultyRow row;
      row.classifier = data.classifier_names[c];
      row.m = ms[mi];
      row.levels = config.difficulty_levels;
      row.classifier_accuracy = col([](const Sample& s) { return s.classifier; });
      row.expert_alone = col([](const Sample& s) { return s.alone; });
      row.success_base = col([](const Sample& s) { return s.base; });
      row.success_difficulty = col([](const Sample& s) { return s.leveled; });
      row.gain_base = col([](const Sample& s) { return (s.base - s.alone) / s.alone; });
      row.gain_difficulty = col([](const Sample& s) { return (s.leveled - s.alone) / s.alone; });
      result.rows.push_back(row);
    }
  }
  return result;
}

void write_difficulty_csv(std::ostream& out, const DifficultyResult& result) {
  CsvWriter w(out, {"classifier", "m", "levels", "classifier_accuracy", "expert_alone",
                    "success_base", "success_base_se", "success_difficulty",
                    "success_difficulty_se", "gain_base", "gain_base_se", "gain_difficulty",
                    "gain_difficulty_se"});
  for (const auto& r : result.rows) {
    w << r.classifier << r.m << r.levels << r.classifier_accuracy.mean << r.expert_alone.mean
      << r.success_base.mean << r.success_base.se << r.success_difficulty.mean
      << r.success_difficulty.se << r.gain_base.mean << r.gain_base.se << r.gain_difficulty.mean
      << r.gain_difficulty.se;
    w.end_row();
  }
}

// ---------------------------------------------------------------------------
// class_sep tuning

double measure_classifier_accuracy(const ExperimentConfig& config, std::size_t n,
                                   const ClassSepEntry& entry, std::size_t m, std::size_t probes) {
  const Dataset task = make_task(config, n, entry);
  double total = 0.0;
  for (std::size_t p = 0; p < probes; ++p) total += make_trial(config, task, m, 0, p).classifier_accuracy;
  return total / static_cast<double>(probes);
}

ClassSepEntry tune_class_sep(const ExperimentConfig& config, std::size_t n, double target,
                             const TuneOptions& options) {
  ClassSepEntry entry;
  entry.n = n;
  entry.target = target;
  bool found = false;
  for (std::uint64_t seed = 1; seed <= options.max_seed_tries && !found; ++seed) {
    entry.task_seed = seed;
    entry.class_sep = 0.0;
    const auto freq = make_task(config, n, entry).class_frequencies();
    found = *std::max_element(freq.begin(), freq.end()) <= target - options.seed_margin;
  }
  if (!found) throw CeilingReached("no task seed has all class weights below the target");

  double lo = 0.0, hi = options.sep_high;
  entry.class_sep = hi;
  double acc_hi = measure_classifier_accuracy(config, n, entry, config.m, options.probes);
  if (acc_hi < target) throw CeilingReached("class_sep " + format_double(hi) + " does not reach the target");
  entry.achieved = acc_hi;
  for (std::size_t it = 0; it < options.iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    entry.class_sep = mid;
    const double acc = measure_classifier_accuracy(config, n, entry, config.m, options.probes);
    if (std::abs(acc - target) <= options.tolerance) {
      entry.achieved = acc;
      return entry;
    }
    (acc < target ? lo : hi) = mid;
    if (acc >= target) entry.achieved = acc;
  }
  entry.class_sep = hi;
  return entry;
}

}  // namespace predset
