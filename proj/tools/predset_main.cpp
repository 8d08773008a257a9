// predset: command-line front end for the experiment harness.
//
//   predset grid --config configs/grid_n10_m1200.conf --out results/
//   predset ingest-check --config my_real_data.conf
//
// Errors go to stderr as a single JSON object; the exit code is 2 for usage errors
// and 1 for everything else.

#include <CLI11.hpp>
#include <json.hpp>

#include <omp.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "predset/config.hpp"
#include "predset/csv.hpp"
#include "predset/errors.hpp"
#include "predset/experiments.hpp"
#include "predset/ingest.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace predset;

namespace {

struct Common {
  std::string config;
  std::string out = "results";
  std::vector<std::string> overrides;  // key=value
  long long seed = -1;
  int workers = 0;
};

Config load_config(const Common& common, const std::string& fallback_name) {
  Config cfg;
  if (!common.config.empty()) {
    cfg = Config::load(common.config);
  } else if (!fallback_name.empty()) {
    cfg = Config::load(fs::path(PREDSET_CONFIG_DIR) / fallback_name);
  }
  for (const auto& kv : common.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (common.seed >= 0) cfg.set("seed", std::to_string(common.seed));
  return cfg;
}

std::ofstream open_out(const fs::path& dir, const std::string& file) {
  fs::create_directories(dir);
  std::ofstream out(dir / file);
  if (!out) throw UsageError("cannot write " + (dir / file).string());
  std::cerr << "writing " << (dir / file).string() << '\n';
  return out;
}

std::string grid_name(std::size_t n, std::size_t m) {
  return "grid_n" + std::to_string(n) + "_m" + std::to_string(m) + ".csv";
}

void run_kind(const std::string& kind, const ExperimentConfig& cfg, const fs::path& out) {
  if (kind == "grid") {
    auto f = open_out(out, grid_name(cfg.n, cfg.m));
    const GridResult r = run_success_grid(cfg);
    write_grid_csv(f, r);
    std::cout << "mean relative gain " << format_double(r.relative_gain.mean) << " +- "
              << format_double(r.relative_gain.se) << '\n';
  } else if (kind == "alpha-sweep") {
    const AlphaSweepResult r = run_alpha_sweep(cfg);
    auto a = open_out(out, "alpha_curve.csv");
    write_alpha_curve_csv(a, r);
    auto b = open_out(out, "alpha_markers.csv");
    write_alpha_markers_csv(b, r);
    auto c = open_out(out, "set_sizes.csv");
    write_set_size_csv(c, r);
  } else if (kind == "iia") {
    auto f = open_out(out, "iia.csv");
    write_iia_csv(f, run_iia_robustness(cfg));
  } else if (kind == "topk") {
    const TopKResult r = run_topk_baseline(cfg);
    auto a = open_out(out, "topk_curve.csv");
    write_topk_curve_csv(a, r);
    auto b = open_out(out, "topk_summary.csv");
    write_topk_summary_csv(b, r);
  } else if (kind == "coverage") {
    const CoverageResult r = run_coverage_sensitivity(cfg);
    auto f = open_out(out, "coverage.csv");
    write_coverage_csv(f, r);
    std::cout << r.within(0.03) << " of " << r.points.size() << " splits within 0.03\n";
  } else if (kind == "scaling") {
    auto f = open_out(out, "scaling.csv");
    write_scaling_csv(f, run_scaling_sweeps(cfg));
  } else if (kind == "difficulty") {
    auto f = open_out(out, "difficulty.csv");
    write_difficulty_csv(f, run_difficulty_variant(cfg, load_real_data(cfg)));
  } else if (kind == "real") {
    auto f = open_out(out, "real.csv");
    write_real_csv(f, run_real_data(cfg, load_real_data(cfg)));
  } else {
    throw UsageError("unknown experiment kind '" + kind + "'");
  }
}

json ingest_summary(const RealData& data) {
  json j;
  j["samples"] = data.size();
  j["labels"] = data.num_labels;
  std::size_t predictions = 0;
  for (const auto& p : data.predictions) predictions += p.size();
  j["expert_predictions"] = predictions;
  if (predictions > 0) {
    std::vector<std::size_t> all(data.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    j["expert_accuracy"] = data.expert_accuracy(all);
    const ConfusionMatrix c = estimate_confusion(data.prediction_pairs(), data.num_labels);
    j["confusion_weighted_diagonal"] = [&] {
      std::vector<double> freq(data.num_labels, 0.0);
      for (Label y : data.labels) freq[static_cast<std::size_t>(y)] += 1.0 / static_cast<double>(data.size());
      return c.weighted_diagonal(freq);
    }();
  }
  json classifiers = json::array();
  for (std::size_t c = 0; c < data.scores.size(); ++c) {
    std::size_t hits = 0;
    const LabeledScores ls = data.labeled(c);
    for (std::size_t i = 0; i < ls.size(); ++i) {
      const auto row = ls.row(i);
      hits += static_cast<Label>(std::max_element(row.begin(), row.end()) - row.begin()) == ls.label(i);
    }
    classifiers.push_back({{"name", data.classifier_names[c]},
                           {"accuracy", static_cast<double>(hits) / static_cast<double>(ls.size())}});
  }
  j["classifiers"] = classifiers;
  return j;
}

int report_error(const std::string& type, const std::string& message, int code,
                 const ParseError* parse = nullptr) {
  json j{{"error", type}, {"message", message}};
  if (parse) {
    j["file"] = parse->file();
    j["line"] = parse->line();
  }
  std::cerr << j.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conformal prediction sets for human-AI decision support: experiment harness"};
  app.require_subcommand(1);
  Common common;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config,-c", common.config, "key = value config file");
    sub->add_option("--out,-o", common.out, "output directory");
    sub->add_option("--seed", common.seed, "master seed (overrides the config)");
    sub->add_option("--workers,-j", common.workers, "OpenMP worker threads (0: runtime default)");
    sub->add_option("--set", common.overrides, "override a config key: key=value")->take_all();
  };

  struct Kind {
    const char* name;
    const char* help;
    const char* default_config;
  };
  const std::vector<Kind> kinds = {
      {"grid", "success grid over expert x classifier accuracies", "grid_n10_m1200.conf"},
      {"alpha-sweep", "success and set size for every alpha in the grid", "alpha_sweep.conf"},
      {"iia", "success when the expert violates IIA with severity p", "iia.conf"},
      {"topk", "top-k baseline against the calibrated sets", "topk.conf"},
      {"coverage", "empirical vs target coverage across independent splits", "coverage.conf"},
      {"scaling", "relative gain over m and over n", "scaling.conf"},
      {"difficulty", "difficulty-conditioned expert vs the base pipeline", "difficulty.conf"},
      {"real", "real-format data: calibrated sets vs best top-k", "real.conf"},
  };
  std::string chosen_kind;
  for (const auto& k : kinds) {
    auto* sub = app.add_subcommand(k.name, k.help);
    add_common(sub);
    sub->callback([&chosen_kind, name = std::string(k.name)] { chosen_kind = name; });
  }

  auto* ingest = app.add_subcommand("ingest-check", "validate real-format files and print a JSON summary");
  add_common(ingest);

  auto* simulate = app.add_subcommand("simulate-real", "write simulated data in the real-data file format");
  add_common(simulate);

  std::vector<std::size_t> tune_n{10};
  std::vector<double> tune_targets{0.3, 0.5, 0.7, 0.9};
  std::string tune_table;
  TuneOptions tune_options;
  auto* tune = app.add_subcommand("tune-sep", "tune class_sep per (n, classifier accuracy)");
  add_common(tune);
  tune->add_option("--n", tune_n, "label counts")->take_all();
  tune->add_option("--targets", tune_targets, "classifier accuracies")->take_all();
  tune->add_option("--table", tune_table, "table to update (default: the config's class_sep_table)");
  tune->add_option("--sep-high", tune_options.sep_high, "upper end of the class_sep bisection")
      ->check(CLI::PositiveNumber);

  auto* suite = app.add_subcommand("full-suite", "run every synthetic experiment with the shipped configs");
  add_common(suite);
  bool suite_quick = false;
  suite->add_flag("--quick", suite_quick, "two repetitions per experiment");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (common.workers > 0) omp_set_num_threads(common.workers);
    const fs::path out(common.out);

    if (!chosen_kind.empty()) {
      std::string fallback;
      for (const auto& k : kinds) {
        if (k.name == chosen_kind) fallback = k.default_config;
      }
      const Config cfg = load_config(common, fallback);
      run_kind(chosen_kind, load_experiment_config(cfg), out);
    } else if (ingest->parsed()) {
      const ExperimentConfig cfg = load_experiment_config(load_config(common, "real.conf"));
      if (cfg.source != "files") throw UsageError("ingest-check needs source = files");
      std::cout << ingest_summary(ingest_real_data(cfg.real)).dump(2) << '\n';
    } else if (simulate->parsed()) {
      const ExperimentConfig cfg = load_experiment_config(load_config(common, "real.conf"));
      const RealData data = simulate_real_data(cfg);
      const RealDataPaths paths = write_real_data(data, out);
      std::cout << ingest_summary(ingest_real_data(paths)).dump(2) << '\n';
    } else if (tune->parsed()) {
      const ExperimentConfig cfg = load_experiment_config(load_config(common, ""));
      const fs::path table_path = tune_table.empty() ? cfg.class_sep_table : fs::path(tune_table);
      ClassSepTable table;
      if (fs::exists(table_path)) table = ClassSepTable::load(table_path);
      for (std::size_t n : tune_n) {
        for (double target : tune_targets) {
          const ClassSepEntry e = tune_class_sep(cfg, n, target, tune_options);
          std::cerr << "n=" << n << " target=" << target << " class_sep=" << format_double(e.class_sep)
                    << " seed=" << e.task_seed << " achieved=" << format_double(e.achieved) << '\n';
          table.upsert(e);
          std::ofstream f(table_path);
          table.write(f);
        }
      }
    } else if (suite->parsed()) {
      const std::vector<std::pair<std::string, std::string>> runs = {
          {"grid", "grid_n10_m1200.conf"}, {"grid", "grid_n10_m400.conf"},
          {"grid", "grid_n50_m1200.conf"}, {"grid", "grid_n100_m400.conf"},
          {"alpha-sweep", "alpha_sweep.conf"}, {"iia", "iia.conf"},
          {"topk", "topk.conf"},           {"coverage", "coverage.conf"},
          {"scaling", "scaling.conf"},     {"difficulty", "difficulty.conf"},
          {"real", "real.conf"},
      };
      for (const auto& [kind, file] : runs) {
        Common c = common;
        c.config = (fs::path(PREDSET_CONFIG_DIR) / file).string();
        Config cfg = load_config(c, "");
        if (suite_quick) cfg.set("repetitions", "2");
        std::cerr << "== " << kind << " (" << file << ")\n";
        run_kind(kind, load_experiment_config(cfg), out / fs::path(file).stem());
      }
    }
  } catch (const ParseError& e) {
    return report_error("parse_error", e.what(), 1, &e);
  } catch (const UsageError& e) {
    return report_error("usage_error", e.what(), 2);
  } catch (const UnobservedClass& e) {
    return report_error("unobserved_class", e.what(), 1);
  } catch (const CeilingReached& e) {
    return report_error("ceiling_reached", e.what(), 1);
  } catch (const std::exception& e) {
    return report_error("error", e.what(), 1);
  }
  return 0;
}
