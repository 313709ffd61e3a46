#pragma once

#include <cstdint>
#include <vector>

#include "bestarm/core.hpp"
#include "bestarm/oracle.hpp"
#include "bestarm/run.hpp"

namespace bestarm {

/// Upper confidence bounds of UCB-E. A bound is +infinity exactly while its row is unobserved.
struct UcbState {
    std::vector<double> bounds;
    std::vector<std::size_t> counts;

    explicit UcbState(std::size_t methods);
};

/// Method with the largest bound among rows that still have unobserved columns (random tie-break).
MethodIndex ucb_select_method(const ScoringState& state, const UcbState& ucb, RandomStream& stream,
                              std::size_t* tied_count = nullptr);

/// One UCB-E selection: the method above, then a uniform unobserved column of its row.
PairIndex ucb_select(const ScoringState& state, const UcbState& ucb, RandomStream& stream);

/// B_i = row_mean(i) + sqrt(a / count_i). Only row i changes.
void ucb_update(const ScoringState& state, UcbState& ucb, MethodIndex i, double a);

/// Argmax of observed row means; rows without observations are excluded and reported in warnings.
Prediction predict_row_means(const ScoringState& state, RandomStream& stream);

/**
 * UCB-E with batches: one argmax method per batch, then
 * min(b, unobserved in row, remaining budget) of its unobserved columns drawn
 * uniformly without replacement.
 */
RunResult run_ucb_e(const ScoreOracle& oracle, const AlgorithmConfig& config, std::uint64_t seed);

/// Uniform pairs without replacement; predicts by row means.
RunResult run_row_mean_imputation(const ScoreOracle& oracle, const AlgorithmConfig& config, std::uint64_t seed);

/// Fills one uniformly chosen column completely before opening the next one; predicts by row means.
RunResult run_filled_subset(const ScoreOracle& oracle, const AlgorithmConfig& config, std::uint64_t seed);

/// Pool over all m*n cells (row-major ids) drawn from by every uniform-pair algorithm.
IncrementalShuffle uniform_pair_pool(std::size_t methods, std::size_t examples);

}  // namespace bestarm
