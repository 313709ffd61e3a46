#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bestarm/core.hpp"
#include "bestarm/oracle.hpp"

namespace bestarm {

struct EvaluatedPair {
    MethodIndex method = 0;
    ExampleIndex example = 0;
    double score = 0.0;

    friend bool operator==(const EvaluatedPair&, const EvaluatedPair&) = default;
};

/// Estimates available at a batch boundary.
struct BatchCheckpoint {
    std::size_t evaluations_used = 0;
    MethodIndex best_index = 0;
    std::vector<double> estimated_means;
};

/// Everything a single algorithm run produced, in evaluation order.
struct RunResult {
    Prediction prediction;
    std::vector<EvaluatedPair> pairs;
    /// Pairs evaluated during uniform warm-up (the first `warmup_pairs` entries of `pairs`).
    std::size_t warmup_pairs = 0;
    /// Sizes of the batches after warm-up, in order; they sum to pairs.size() - warmup_pairs.
    std::vector<std::size_t> batch_sizes;
    std::vector<BatchCheckpoint> checkpoints;
    /// Ensemble fits used for selection (excludes the final prediction fit).
    std::size_t selection_refits = 0;
};

/// Queries one batch, records it into `state`, and appends it to `result`.
void evaluate_batch(const ScoreOracle& oracle, ScoringState& state, std::span<const PairIndex> batch,
                    RunResult& result);

/// Replays the first `count` pairs of a trajectory into a fresh state.
ScoringState replay(std::span<const EvaluatedPair> pairs, std::size_t count, std::size_t methods,
                    std::size_t examples);

/// Stream used to break ties in the final prediction of a state with `evaluations` observations.
RandomStream prediction_stream(std::uint64_t seed, std::size_t evaluations);

}  // namespace bestarm
