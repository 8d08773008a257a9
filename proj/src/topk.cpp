#include "predset/topk.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "predset/errors.hpp"

namespace predset {

PredictionSet build_set(const TopKPredictor& predictor, std::span<const double> sample_scores) {
  const std::size_t n = sample_scores.size();
  if (predictor.k == 0 || predictor.k > n) {
    throw UsageError("top-k requires 1 <= k <= n, got k=" + std::to_string(predictor.k) +
                     ", n=" + std::to_string(n));
  }
  std::vector<Label> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(predictor.k),
                    order.end(), [&](Label a, Label b) {
                      const double sa = sample_scores[static_cast<std::size_t>(a)];
                      const double sb = sample_scores[static_cast<std::size_t>(b)];
                      return sa > sb || (sa == sb && a < b);
                    });
  order.resize(predictor.k);
  return PredictionSet(std::move(order));
}

}  // namespace predset
