#include "bestarm/algorithms.hpp"

#include "bestarm/bandit.hpp"
#include "bestarm/ucbelrf.hpp"

namespace bestarm {

std::string_view algorithm_name(AlgorithmKind kind) {
    switch (kind) {
        case AlgorithmKind::ucb_e: return "ucb-e";
        case AlgorithmKind::ucb_e_lrf: return "ucb-e-lrf";
        case AlgorithmKind::ucb_e_lrf_score_only: return "ucb-e-lrf-score-only";
        case AlgorithmKind::lrf: return "lrf";
        case AlgorithmKind::row_mean: return "row-mean";
        case AlgorithmKind::filled_subset: return "filled-subset";
    }
    return "unknown";
}

AlgorithmKind parse_algorithm(std::string_view name) {
    for (auto kind : kAllAlgorithms)
        if (algorithm_name(kind) == name) return kind;
    throw ConfigError("unknown algorithm '" + std::string(name) +
                      "' (expected ucb-e, ucb-e-lrf, ucb-e-lrf-score-only, lrf, row-mean or filled-subset)");
}

bool uses_factorization(AlgorithmKind kind) {
    return kind == AlgorithmKind::ucb_e_lrf || kind == AlgorithmKind::ucb_e_lrf_score_only || kind == AlgorithmKind::lrf;
}

RunResult run_algorithm(AlgorithmKind kind, const ScoreOracle& oracle, const AlgorithmConfig& config,
                        std::uint64_t seed) {
    switch (kind) {
        case AlgorithmKind::ucb_e: return run_ucb_e(oracle, config, seed);
        case AlgorithmKind::ucb_e_lrf: return run_ucb_e_lrf(oracle, config, seed);
        case AlgorithmKind::ucb_e_lrf_score_only: return run_ucb_e_lrf_score_only(oracle, config, seed);
        case AlgorithmKind::lrf: return run_lrf_baseline(oracle, config, seed);
        case AlgorithmKind::row_mean: return run_row_mean_imputation(oracle, config, seed);
        case AlgorithmKind::filled_subset: return run_filled_subset(oracle, config, seed);
    }
    throw ConfigError("unknown algorithm");
}

Prediction predict_from_state(AlgorithmKind kind, const ScoringState& state, const AlgorithmConfig& config,
                              std::uint64_t seed) {
    if (uses_factorization(kind)) return predict_lrf(state, config, seed);
    auto stream = prediction_stream(seed, state.evaluations_used());
    return predict_row_means(state, stream);
}

}  // namespace bestarm
