#pragma once

// Serial, deliberately naive counterparts of the parallel kernels. They rebuild every
// prediction set from scratch and exist so tests and benchmarks have something
// independent to compare against.

#include <span>
#include <vector>

#include "predset/search.hpp"
#include "predset/synthetic.hpp"

namespace predset::reference {

/// mu_hat for every grid rank, each computed by building all sets at that threshold.
std::vector<double> success_curve(std::span<const double> sorted_cal, const LabeledScores& data,
                                  const ExpertBinding& expert);

SearchResult find_near_optimal_alpha(const LabeledScores& cal, const LabeledScores& est,
                                     const ExpertBinding& expert, double delta = 0.1);

/// Every pair evaluated independently; O(m^2 |est| n). Small m only.
PairSearchResult find_near_optimal_pair(const LabeledScores& cal, const LabeledScores& est,
                                        const ExpertBinding& expert, double delta = 0.1);

/// Row-by-row loss and gradient with no blocking or threading.
double value_and_gradient(const SoftmaxObjective& objective, std::span<const double> params,
                          std::span<double> gradient);

}  // namespace predset::reference
