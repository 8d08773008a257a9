#pragma once

#include <cstddef>
#include <span>

#include "predset/conformal.hpp"

namespace predset {

/// Uncalibrated baseline: always recommend the k highest-scoring labels.
struct TopKPredictor {
  std::size_t k = 1;
};

/// Ties in score go to the lower label index. Throws UsageError if k is 0 or exceeds n.
PredictionSet build_set(const TopKPredictor& predictor, std::span<const double> sample_scores);

}  // namespace predset
