#pragma once

// Real-data inputs: per-classifier score files, a labels file and raw expert
// predictions, all CSV with a header row and a leading sample_id column.
//
//   labels:      sample_id,label
//   scores:      sample_id,<one column per label>
//   predictions: sample_id,predicted_label   (any number of rows per sample)

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "predset/conformal.hpp"
#include "predset/expert.hpp"

namespace predset {

struct RealData {
  std::size_t num_labels = 0;
  std::vector<std::string> sample_ids;  // labels-file order; all score rows follow it
  std::vector<Label> labels;
  std::vector<std::string> classifier_names;
  std::vector<ScoreMatrix> scores;          // one per classifier
  std::vector<std::vector<Label>> predictions;  // expert predictions per sample

  std::size_t size() const noexcept { return labels.size(); }
  LabeledScores labeled(std::size_t classifier) const;
  /// (true, predicted) pairs for every expert prediction of the given samples (all when empty).
  std::vector<std::pair<Label, Label>> prediction_pairs(std::span<const std::size_t> rows = {}) const;
  /// Fraction of each sample's expert predictions that are correct. Throws UsageError
  /// when a sample has no predictions.
  std::vector<double> correct_fractions() const;
  /// Mean of correct_fractions over the given rows.
  double expert_accuracy(std::span<const std::size_t> rows) const;
};

/// Labels file defines the sample order; n is taken from it when num_labels is 0.
void read_labels_csv(std::istream& in, const std::string& name, RealData& data);
/// Score rows are matched to labels by sample_id; every sample must appear exactly once.
void read_scores_csv(std::istream& in, const std::string& name, const std::string& classifier,
                     RealData& data);
void read_predictions_csv(std::istream& in, const std::string& name, RealData& data);

void write_labels_csv(std::ostream& out, const RealData& data);
void write_scores_csv(std::ostream& out, const RealData& data, std::size_t classifier);
void write_predictions_csv(std::ostream& out, const RealData& data);

struct RealDataPaths {
  std::filesystem::path labels;
  std::vector<std::filesystem::path> scores;
  std::vector<std::string> classifier_names;  // defaults to score file stems
  std::filesystem::path predictions;
};

/// Reads and cross-validates all files. Label count comes from the score columns.
RealData ingest_real_data(const RealDataPaths& paths);

/// Writes labels.csv, predictions.csv and scores_<name>.csv into dir.
RealDataPaths write_real_data(const RealData& data, const std::filesystem::path& dir);

}  // namespace predset
