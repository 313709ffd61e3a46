#include "bestarm/bandit.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace bestarm {

UcbState::UcbState(std::size_t methods)
    : bounds(methods, std::numeric_limits<double>::infinity()), counts(methods, 0) {}

MethodIndex ucb_select_method(const ScoringState& state, const UcbState& ucb, RandomStream& stream,
                              std::size_t* tied_count) {
    std::vector<std::uint8_t> open(state.methods());
    for (std::size_t i = 0; i < state.methods(); ++i) open[i] = state.row_complete(i) ? 0 : 1;
    try {
        return argmax_with_ties(ucb.bounds, open, stream, tied_count);
    } catch (const ExhaustedError&) {
        throw ExhaustedError("every method-example pair is already observed");
    }
}

PairIndex ucb_select(const ScoringState& state, const UcbState& ucb, RandomStream& stream) {
    MethodIndex i = ucb_select_method(state, ucb, stream);
    auto columns = state.unobserved_in_row(i);
    return {i, columns[stream.uniform_index(columns.size())]};
}

void ucb_update(const ScoringState& state, UcbState& ucb, MethodIndex i, double a) {
    const std::size_t count = state.row_count(i);
    ucb.counts[i] = count;
    ucb.bounds[i] = state.row_mean(i) + std::sqrt(a / static_cast<double>(count));
}

Prediction predict_row_means(const ScoringState& state, RandomStream& stream) {
    Prediction out;
    out.estimated_means.assign(state.methods(), std::numeric_limits<double>::quiet_NaN());
    std::vector<std::uint8_t> sampled(state.methods(), 0);
    std::size_t unsampled = 0;
    for (std::size_t i = 0; i < state.methods(); ++i) {
        if (state.row_count(i) == 0) {
            ++unsampled;
            continue;
        }
        out.estimated_means[i] = state.row_mean(i);
        sampled[i] = 1;
    }
    if (unsampled == state.methods()) throw EmptyRowError("no method has any observation");
    if (unsampled > 0) {
        out.warnings.push_back(std::to_string(unsampled) + " method(s) were never evaluated and are excluded");
    }
    out.best_index = argmax_with_ties(out.estimated_means, sampled, stream, &out.tied_candidates);
    return out;
}

IncrementalShuffle uniform_pair_pool(std::size_t methods, std::size_t examples) {
    std::vector<std::size_t> pool(methods * examples);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    return IncrementalShuffle(std::move(pool));
}

namespace {

// Row means of every sampled row, NaN elsewhere; `means` is kept current incrementally.
BatchCheckpoint checkpoint_from_means(const ScoringState& state, const std::vector<double>& means) {
    BatchCheckpoint cp;
    cp.evaluations_used = state.evaluations_used();
    cp.estimated_means = means;
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < means.size(); ++i) {
        if (!std::isnan(means[i]) && means[i] > top) {
            top = means[i];
            cp.best_index = i;
        }
    }
    return cp;
}

}  // namespace

RunResult run_ucb_e(const ScoreOracle& oracle, const AlgorithmConfig& config, std::uint64_t seed) {
    const std::size_t m = oracle.methods();
    const std::size_t n = oracle.examples();
    config.validate(m, n, false);
    const std::size_t budget = config.budget_total;
    const std::size_t batch = config.effective_batch();

    ScoringState state(m, n);
    UcbState ucb(m);
    RunResult result;
    result.pairs.reserve(budget);
    auto stream = derive_rng(seed, "select");
    std::vector<double> means(m, std::numeric_limits<double>::quiet_NaN());

    while (state.evaluations_used() < budget) {
        MethodIndex i = ucb_select_method(state, ucb, stream);
        auto columns = state.unobserved_in_row(i);
        std::size_t k = std::min({batch, columns.size(), budget - state.evaluations_used()});
        auto drawn = draw_without_replacement(columns, k, stream);
        std::vector<PairIndex> pairs;
        pairs.reserve(k);
        for (auto j : drawn) pairs.push_back({i, j});
        evaluate_batch(oracle, state, pairs, result);
        result.batch_sizes.push_back(k);
        ucb_update(state, ucb, i, config.exploration_a);
        means[i] = state.row_mean(i);
        result.checkpoints.push_back(checkpoint_from_means(state, means));
    }

    auto tie_stream = prediction_stream(seed, state.evaluations_used());
    result.prediction = predict_row_means(state, tie_stream);
    return result;
}

RunResult run_row_mean_imputation(const ScoreOracle& oracle, const AlgorithmConfig& config, std::uint64_t seed) {
    const std::size_t m = oracle.methods();
    const std::size_t n = oracle.examples();
    config.validate(m, n, false);
    const std::size_t budget = config.budget_total;
    const std::size_t batch = config.effective_batch();

    ScoringState state(m, n);
    RunResult result;
    result.pairs.reserve(budget);
    auto stream = derive_rng(seed, "select");
    auto pool = uniform_pair_pool(m, n);

    while (state.evaluations_used() < budget) {
        std::size_t k = std::min(batch, budget - state.evaluations_used());
        std::vector<PairIndex> pairs;
        pairs.reserve(k);
        for (std::size_t step = 0; step < k; ++step) {
            std::size_t cell = pool.next(stream);
            pairs.push_back({cell / n, cell % n});
        }
        evaluate_batch(oracle, state, pairs, result);
        result.batch_sizes.push_back(k);
    }

    auto tie_stream = prediction_stream(seed, state.evaluations_used());
    result.prediction = predict_row_means(state, tie_stream);
    result.checkpoints.push_back(
        {state.evaluations_used(), result.prediction.best_index, result.prediction.estimated_means});
    return result;
}

RunResult run_filled_subset(const ScoreOracle& oracle, const AlgorithmConfig& config, std::uint64_t seed) {
    const std::size_t m = oracle.methods();
    const std::size_t n = oracle.examples();
    config.validate(m, n, false);
    const std::size_t budget = config.budget_total;
    const std::size_t batch = config.effective_batch();

    ScoringState state(m, n);
    RunResult result;
    result.pairs.reserve(budget);
    auto stream = derive_rng(seed, "select");

    std::vector<std::size_t> all_columns(n);
    std::iota(all_columns.begin(), all_columns.end(), std::size_t{0});
    std::vector<std::size_t> all_methods(m);
    std::iota(all_methods.begin(), all_methods.end(), std::size_t{0});
    IncrementalShuffle columns(all_columns);
    IncrementalShuffle column_methods(all_methods);
    std::size_t current = columns.next(stream);

    while (state.evaluations_used() < budget) {
        std::size_t k = std::min(batch, budget - state.evaluations_used());
        std::vector<PairIndex> pairs;
        pairs.reserve(k);
        for (std::size_t step = 0; step < k; ++step) {
            if (column_methods.empty()) {
                current = columns.next(stream);
                column_methods = IncrementalShuffle(all_methods);
            }
            pairs.push_back({column_methods.next(stream), current});
        }
        evaluate_batch(oracle, state, pairs, result);
        result.batch_sizes.push_back(k);
    }

    auto tie_stream = prediction_stream(seed, state.evaluations_used());
    result.prediction = predict_row_means(state, tie_stream);
    result.checkpoints.push_back(
        {state.evaluations_used(), result.prediction.best_index, result.prediction.estimated_means});
    return result;
}

}  // namespace bestarm
