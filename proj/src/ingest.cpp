#include "predset/ingest.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "predset/csv.hpp"
#include "predset/errors.hpp"

namespace predset {
namespace {

std::unordered_map<std::string, std::size_t> index_ids(const RealData& data) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < data.sample_ids.size(); ++i) index.emplace(data.sample_ids[i], i);
  return index;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write " + path.string());
  return out;
}

}  // namespace

LabeledScores RealData::labeled(std::size_t classifier) const {
  if (classifier >= scores.size()) throw UsageError("classifier index out of range");
  return LabeledScores(scores[classifier], labels);
}

std::vector<std::pair<Label, Label>> RealData::prediction_pairs(
    std::span<const std::size_t> rows) const {
  std::vector<std::pair<Label, Label>> pairs;
  auto add = [&](std::size_t i) {
    for (Label p : predictions[i]) pairs.emplace_back(labels[i], p);
  };
  if (rows.empty()) {
    for (std::size_t i = 0; i < size(); ++i) add(i);
  } else {
    for (std::size_t i : rows) add(i);
  }
  return pairs;
}

std::vector<double> RealData::correct_fractions() const {
  std::vector<double> out(size());
  for (std::size_t i = 0; i < size(); ++i) {
    if (predictions[i].empty()) {
      throw UsageError("sample " + sample_ids[i] + " has no expert predictions");
    }
    std::size_t hits = 0;
    for (Label p : predictions[i]) hits += p == labels[i];
    out[i] = static_cast<double>(hits) / static_cast<double>(predictions[i].size());
  }
  return out;
}

double RealData::expert_accuracy(std::span<const std::size_t> rows) const {
  if (rows.empty()) throw UsageError("no rows");
  const auto fractions = correct_fractions();
  double total = 0.0;
  for (std::size_t i : rows) total += fractions[i];
  return total / static_cast<double>(rows.size());
}

void read_labels_csv(std::istream& in, const std::string& name, RealData& data) {
  CsvReader reader(in, name);
  const auto header = reader.header();
  if (header != std::vector<std::string>{"sample_id", "label"}) {
    throw ParseError(name, reader.line(), "expected header 'sample_id,label'");
  }
  data.sample_ids.clear();
  data.labels.clear();
  std::unordered_map<std::string, std::size_t> seen;
  std::vector<std::string> f;
  while (reader.next(f)) {
    if (f.size() != 2) reader.fail("expected 2 fields, got " + std::to_string(f.size()));
    if (!seen.emplace(f[0], data.labels.size()).second) reader.fail("duplicate sample_id '" + f[0] + "'");
    const long label = reader.to_int(f[1]);
    if (label < 0 || (data.num_labels && static_cast<std::size_t>(label) >= data.num_labels)) {
      reader.fail("label " + f[1] + " out of range");
    }
    data.sample_ids.push_back(f[0]);
    data.labels.push_back(static_cast<Label>(label));
  }
  if (data.labels.empty()) throw ParseError(name, reader.line(), "no samples");
  data.predictions.assign(data.labels.size(), {});
}

void read_scores_csv(std::istream& in, const std::string& name, const std::string& classifier,
                     RealData& data) {
  CsvReader reader(in, name);
  const auto header = reader.header();
  if (header.size() < 3 || header[0] != "sample_id") {
    throw ParseError(name, reader.line(), "expected header 'sample_id' followed by >= 2 score columns");
  }
  const std::size_t n = header.size() - 1;
  if (data.num_labels == 0) data.num_labels = n;
  if (n != data.num_labels) {
    throw ParseError(name, reader.line(), "expected " + std::to_string(data.num_labels) +
                                              " score columns, got " + std::to_string(n));
  }
  const auto index = index_ids(data);
  std::vector<double> values(data.size() * n, 0.0);
  std::vector<unsigned char> filled(data.size(), 0);
  std::vector<std::string> f;
  while (reader.next(f)) {
    if (f.size() != n + 1) reader.fail("expected " + std::to_string(n + 1) + " fields, got " + std::to_string(f.size()));
    const auto it = index.find(f[0]);
    if (it == index.end()) reader.fail("sample_id '" + f[0] + "' is not in the labels file");
    if (filled[it->second]++) reader.fail("duplicate sample_id '" + f[0] + "'");
    for (std::size_t k = 0; k < n; ++k) {
      const double v = reader.to_double(f[k + 1]);
      if (!(v >= 0.0 && v <= 1.0)) reader.fail("score outside [0,1]: " + f[k + 1]);
      values[it->second * n + k] = v;
    }
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!filled[i]) {
      throw ParseError(name, reader.line(), "missing scores for sample_id '" + data.sample_ids[i] + "'");
    }
  }
  for (Label y : data.labels) {
    if (static_cast<std::size_t>(y) >= n) {
      throw ParseError(name, 1, "labels file contains label " + std::to_string(y) +
                                    " but scores have only " + std::to_string(n) + " columns");
    }
  }
  data.scores.emplace_back(data.size(), n, std::move(values));
  data.classifier_names.push_back(classifier);
}

void read_predictions_csv(std::istream& in, const std::string& name, RealData& data) {
  CsvReader reader(in, name);
  const auto header = reader.header();
  if (header != std::vector<std::string>{"sample_id", "predicted_label"}) {
    throw ParseError(name, reader.line(), "expected header 'sample_id,predicted_label'");
  }
  const auto index = index_ids(data);
  data.predictions.assign(data.size(), {});
  std::vector<std::string> f;
  while (reader.next(f)) {
    if (f.size() != 2) reader.fail("expected 2 fields, got " + std::to_string(f.size()));
    const auto it = index.find(f[0]);
    if (it == index.end()) reader.fail("sample_id '" + f[0] + "' is not in the labels file");
    const long label = reader.to_int(f[1]);
    if (label < 0 || static_cast<std::size_t>(label) >= data.num_labels) {
      reader.fail("predicted label " + f[1] + " out of range");
    }
    data.predictions[it->second].push_back(static_cast<Label>(label));
  }
}

void write_labels_csv(std::ostream& out, const RealData& data) {
  CsvWriter w(out, {"sample_id", "label"});
  for (std::size_t i = 0; i < data.size(); ++i) {
    w << data.sample_ids[i] << static_cast<int>(data.labels[i]);
    w.end_row();
  }
}

void write_scores_csv(std::ostream& out, const RealData& data, std::size_t classifier) {
  std::vector<std::string> header{"sample_id"};
  for (std::size_t k = 0; k < data.num_labels; ++k) header.push_back("p" + std::to_string(k));
  CsvWriter w(out, header);
  const ScoreMatrix& s = data.scores.at(classifier);
  for (std::size_t i = 0; i < data.size(); ++i) {
    w << data.sample_ids[i];
    for (double v : s.row(i)) w << v;
    w.end_row();
  }
}

void write_predictions_csv(std::ostream& out, const RealData& data) {
  CsvWriter w(out, {"sample_id", "predicted_label"});
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (Label p : data.predictions[i]) {
      w << data.sample_ids[i] << static_cast<int>(p);
      w.end_row();
    }
  }
}

RealData ingest_real_data(const RealDataPaths& paths) {
  if (paths.scores.empty()) throw UsageError("at least one score file is required");
  RealData data;
  {
    auto in = open_input(paths.labels);
    read_labels_csv(in, paths.labels.string(), data);
  }
  for (std::size_t c = 0; c < paths.scores.size(); ++c) {
    auto in = open_input(paths.scores[c]);
    const std::string name = c < paths.classifier_names.size() ? paths.classifier_names[c]
                                                               : paths.scores[c].stem().string();
    read_scores_csv(in, paths.scores[c].string(), name, data);
  }
  if (!paths.predictions.empty()) {
    auto in = open_input(paths.predictions);
    read_predictions_csv(in, paths.predictions.string(), data);
  }
  return data;
}

RealDataPaths write_real_data(const RealData& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  RealDataPaths paths;
  paths.labels = dir / "labels.csv";
  paths.predictions = dir / "predictions.csv";
  {
    auto out = open_output(paths.labels);
    write_labels_csv(out, data);
  }
  {
    auto out = open_output(paths.predictions);
    write_predictions_csv(out, data);
  }
  for (std::size_t c = 0; c < data.scores.size(); ++c) {
    paths.scores.push_back(dir / ("scores_" + data.classifier_names[c] + ".csv"));
    paths.classifier_names.push_back(data.classifier_names[c]);
    auto out = open_output(paths.scores.back());
    write_scores_csv(out, data, c);
  }
  return paths;
}

}  // namespace predset
