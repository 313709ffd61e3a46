#include "bestarm/run.hpp"

namespace bestarm {

void evaluate_batch(const ScoreOracle& oracle, ScoringState& state, std::span<const PairIndex> batch,
                    RunResult& result) {
    for (const auto& p : batch) {
        if (state.is_observed(p.method, p.example)) {
            throw DuplicateObservationError("selection produced an already observed pair (" +
                                            std::to_string(p.method) + ", " + std::to_string(p.example) + ")");
        }
    }
    auto scores = oracle.query_batch(batch);
    for (std::size_t k = 0; k < batch.size(); ++k) {
        state.record(batch[k].method, batch[k].example, scores[k]);
        result.pairs.push_back({batch[k].method, batch[k].example, scores[k]});
    }
}

ScoringState replay(std::span<const EvaluatedPair> pairs, std::size_t count, std::size_t methods,
                    std::size_t examples) {
    ScoringState state(methods, examples);
    for (std::size_t k = 0; k < count && k < pairs.size(); ++k) state.record(pairs[k].method, pairs[k].example, pairs[k].score);
    return state;
}

RandomStream prediction_stream(std::uint64_t seed, std::size_t evaluations) {
    return derive_rng(seed, "predict-" + std::to_string(evaluations));
}

}  // namespace bestarm
