#include "bestarm/ucbelrf.hpp"

#include <algorithm>
#include <numeric>

#include "bestarm/bandit.hpp"

namespace bestarm {

std::vector<double> lrf_bounds(const ScoringState& state, const FactorEnsemble& ensemble, double eta) {
    const std::size_t m = state.methods();
    const std::size_t n = state.examples();
    const auto mask = state.mask();
    const auto values = state.values();
    std::vector<double> bounds(m);
    for (std::size_t i = 0; i < m; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            std::size_t k = i * n + j;
            const auto ii = static_cast<Eigen::Index>(i);
            const auto jj = static_cast<Eigen::Index>(j);
            sum += (mask[k] ? values[k] : ensemble.estimate(ii, jj)) + eta * ensemble.uncertainty(ii, jj);
        }
        bounds[i] = sum / static_cast<double>(n);
    }
    return bounds;
}

void warmup(const ScoreOracle& oracle, ScoringState& state, std::size_t count, std::size_t batch,
            IncrementalShuffle& pool, RandomStream& stream, RunResult& result) {
    const std::size_t n = state.examples();
    std::size_t done = 0;
    while (done < count) {
        std::size_t k = std::min(batch, count - done);
        std::vector<PairIndex> pairs;
        pairs.reserve(k);
        for (std::size_t step = 0; step < k; ++step) {
            std::size_t cell = pool.next(stream);
            pairs.push_back({cell / n, cell % n});
        }
        evaluate_batch(oracle, state, pairs, result);
        done += k;
    }
    result.warmup_pairs += count;
}

Prediction predict_lrf(const ScoringState& state, const AlgorithmConfig& config, std::uint64_t seed) {
    const std::size_t t = state.evaluations_used();
    auto fit_stream = derive_rng(seed, "predict-fit-" + std::to_string(t));
    auto ensemble = fit_ensemble(state, config, fit_stream);
    Prediction out;
    out.estimated_means = gated_means(state, ensemble.estimate);
    auto tie_stream = prediction_stream(seed, t);
    out.best_index = argmax_with_ties(out.estimated_means, tie_stream, &out.tied_candidates);
    return out;
}

namespace {

enum class ColumnRule { top_uncertainty, uniform };

// Unobserved columns of row i ordered by descending uncertainty; ties ordered by a random key per column.
std::vector<ExampleIndex> columns_by_uncertainty(const ScoringState& state, const FactorEnsemble& ensemble,
                                                 MethodIndex i, RandomStream& stream) {
    auto columns = state.unobserved_in_row(i);
    std::vector<std::uint64_t> keys(columns.size());
    for (auto& key : keys) key = stream.next_u64();
    std::vector<std::size_t> order(columns.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto row = static_cast<Eigen::Index>(i);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        double ra = ensemble.uncertainty(row, static_cast<Eigen::Index>(columns[a]));
        double rb = ensemble.uncertainty(row, static_cast<Eigen::Index>(columns[b]));
        if (ra != rb) return ra > rb;
        return keys[a] < keys[b];
    });
    std::vector<ExampleIndex> out;
    out.reserve(columns.size());
    for (auto k : order) out.push_back(columns[k]);
    return out;
}

RunResult run_active(const ScoreOracle& oracle, const AlgorithmConfig& config, std::uint64_t seed, ColumnRule rule) {
    const std::size_t m = oracle.methods();
    const std::size_t n = oracle.examples();
    config.validate(m, n, true);
    const std::size_t budget = config.budget_total;
    const std::size_t batch = config.effective_batch();

    ScoringState state(m, n);
    RunResult result;
    result.pairs.reserve(budget);
    auto stream = derive_rng(seed, "select");
    auto pool = uniform_pair_pool(m, n);
    warmup(oracle, state, config.resolved_warmup(m, n), batch, pool, stream, result);

    for (std::size_t refit = 0; state.evaluations_used() < budget; ++refit) {
        auto fit_stream = derive_rng(seed, "refit-" + std::to_string(refit));
        auto ensemble = fit_ensemble(state, config, fit_stream);
        ++result.selection_refits;

        auto means = gated_means(state, ensemble.estimate);
        BatchCheckpoint cp;
        cp.evaluations_used = state.evaluations_used();
        cp.best_index = static_cast<MethodIndex>(std::distance(means.begin(), std::max_element(means.begin(), means.end())));
        cp.estimated_means = means;
        result.checkpoints.push_back(std::move(cp));

        auto bounds = lrf_bounds(state, ensemble, config.uncertainty_scale);
        std::vector<std::uint8_t> open(m);
        for (std::size_t i = 0; i < m; ++i) open[i] = state.row_complete(i) ? 0 : 1;
        MethodIndex i = argmax_with_ties(bounds, open, stream);

        std::vector<ExampleIndex> chosen;
        const std::size_t k = std::min({batch, n - state.row_count(i), budget - state.evaluations_used()});
        if (rule == ColumnRule::top_uncertainty) {
            chosen = columns_by_uncertainty(state, ensemble, i, stream);
            chosen.resize(k);
        } else {
            auto columns = state.unobserved_in_row(i);
            chosen = draw_without_replacement(columns, k, stream);
        }
        std::vector<PairIndex> pairs;
        pairs.reserve(k);
        for (auto j : chosen) pairs.push_back({i, j});
        evaluate_batch(oracle, state, pairs, result);
        result.batch_sizes.push_back(k);
    }

    result.prediction = predict_lrf(state, config, seed);
    result.checkpoints.push_back(
        {state.evaluations_used(), result.prediction.best_index, result.prediction.estimated_means});
    return result;
}

}  // namespace

RunResult run_ucb_e_lrf(const ScoreOracle& oracle, const AlgorithmConfig& config, std::uint64_t seed) {
    return run_active(oracle, config, seed, ColumnRule::top_uncertainty);
}

RunResult run_ucb_e_lrf_score_only(const ScoreOracle& oracle, const AlgorithmConfig& config, std::uint64_t seed) {
    return run_active(oracle, config, seed, ColumnRule::uniform);
}

RunResult run_lrf_baseline(const ScoreOracle& oracle, const AlgorithmConfig& config, std::uint64_t seed) {
    const std::size_t m = oracle.methods();
    const std::size_t n = oracle.examples();
    config.validate(m, n, true);
    const std::size_t budget = config.budget_total;
    const std::size_t batch = config.effective_batch();

    ScoringState state(m, n);
    RunResult result;
    result.pairs.reserve(budget);
    auto stream = derive_rng(seed, "select");
    auto pool = uniform_pair_pool(m, n);
    warmup(oracle, state, config.resolved_warmup(m, n), batch, pool, stream, result);

    // Selection never consults the factorization, so the only fit needed is the final one.
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

    result.prediction = predict_lrf(state, config, seed);
    result.checkpoints.push_back(
        {state.evaluations_used(), result.prediction.best_index, result.prediction.estimated_means});
    return result;
}

}  // namespace bestarm
