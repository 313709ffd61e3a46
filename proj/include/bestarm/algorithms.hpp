#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "bestarm/core.hpp"
#include "bestarm/oracle.hpp"
#include "bestarm/run.hpp"

namespace bestarm {

enum class AlgorithmKind { ucb_e, ucb_e_lrf, ucb_e_lrf_score_only, lrf, row_mean, filled_subset };

inline constexpr std::array<AlgorithmKind, 6> kAllAlgorithms = {
    AlgorithmKind::ucb_e, AlgorithmKind::ucb_e_lrf,  AlgorithmKind::ucb_e_lrf_score_only,
    AlgorithmKind::lrf,   AlgorithmKind::row_mean,   AlgorithmKind::filled_subset,
};

/// CLI name: ucb-e, ucb-e-lrf, ucb-e-lrf-score-only, lrf, row-mean, filled-subset.
std::string_view algorithm_name(AlgorithmKind kind);

/// Throws ConfigError for unknown names.
AlgorithmKind parse_algorithm(std::string_view name);

/// True for the algorithms that warm up and predict through the factorization ensemble.
bool uses_factorization(AlgorithmKind kind);

RunResult run_algorithm(AlgorithmKind kind, const ScoreOracle& oracle, const AlgorithmConfig& config,
                        std::uint64_t seed);

/// The prediction the algorithm would return if its budget ended at `state`.
Prediction predict_from_state(AlgorithmKind kind, const ScoringState& state, const AlgorithmConfig& config,
                              std::uint64_t seed);

}  // namespace bestarm
