#pragma once

#include <cstdint>
#include <vector>

#include "bestarm/core.hpp"
#include "bestarm/lrf.hpp"
#include "bestarm/oracle.hpp"
#include "bestarm/run.hpp"

namespace bestarm {

/// B_i = (1/n) sum_j (O_ij S_ij + (1 - O_ij) estimate_ij + eta R_ij).
std::vector<double> lrf_bounds(const ScoringState& state, const FactorEnsemble& ensemble, double eta);

/// Evaluates `count` uniformly drawn unobserved pairs from `pool`, in batches of `batch`.
void warmup(const ScoreOracle& oracle, ScoringState& state, std::size_t count, std::size_t batch,
            IncrementalShuffle& pool, RandomStream& stream, RunResult& result);

/// Fits an ensemble on `state` and returns the argmax of its gated means.
/// Deterministic in (state, config, seed); uncertainty plays no part.
Prediction predict_lrf(const ScoringState& state, const AlgorithmConfig& config, std::uint64_t seed);

/**
 * UCB-E-LRF. After T0 uniform warm-up pairs, every batch refits the ensemble,
 * picks the incomplete row with the largest bound, and evaluates the top-b
 * unobserved columns of that row by uncertainty (random order among ties).
 */
RunResult run_ucb_e_lrf(const ScoreOracle& oracle, const AlgorithmConfig& config, std::uint64_t seed);

/// As run_ucb_e_lrf, but columns inside the chosen row are drawn uniformly.
RunResult run_ucb_e_lrf_score_only(const ScoreOracle& oracle, const AlgorithmConfig& config, std::uint64_t seed);

/// Passive baseline: the same uniform pair sequence as row-mean imputation, predicted by gated means.
RunResult run_lrf_baseline(const ScoreOracle& oracle, const AlgorithmConfig& config, std::uint64_t seed);

}  // namespace bestarm
