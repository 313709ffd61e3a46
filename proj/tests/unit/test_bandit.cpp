#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>

#include "bestarm/bandit.hpp"
#include "bestarm/metrics.hpp"

using namespace bestarm;

namespace {

AlgorithmConfig with_budget(std::size_t budget, std::size_t batch = 32) {
    AlgorithmConfig c;
    c.budget_total = budget;
    c.batch_size = batch;
    return c;
}

MatrixOracle random_oracle(std::size_t m, std::size_t n, std::uint64_t seed) {
    auto stream = derive_rng(seed, "oracle");
    Eigen::MatrixXd s(m, n);
    for (Eigen::Index i = 0; i < s.rows(); ++i)
        for (Eigen::Index j = 0; j < s.cols(); ++j) s(i, j) = stream.uniform01();
    return MatrixOracle(s);
}

}  // namespace

TEST_CASE("fresh state selects every method uniformly") {
    ScoringState state(4, 3);
    UcbState ucb(4);
    auto stream = derive_rng(1, "fresh");
    std::vector<int> hits(4, 0);
    const int trials = 8000;
    for (int t = 0; t < trials; ++t) {
        std::size_t tied = 0;
        hits[ucb_select_method(state, ucb, stream, &tied)]++;
        REQUIRE(tied == 4);
    }
    for (int h : hits) CHECK(std::abs(h / double(trials) - 0.25) < 0.03);
}

TEST_CASE("complete rows are excluded from selection") {
    ScoringState state(2, 2);
    state.record(0, 0, 1.0);
    state.record(0, 1, 1.0);
    UcbState ucb(2);
    ucb.bounds = {0.9, 0.5};
    auto stream = derive_rng(2, "full");
    for (int t = 0; t < 20; ++t) {
        auto pair = ucb_select(state, ucb, stream);
        CHECK(pair.method == 1);
        CHECK(!state.is_observed(pair.method, pair.example));
    }
    state.record(1, 0, 0.0);
    state.record(1, 1, 0.0);
    CHECK_THROWS_AS(ucb_select(state, ucb, stream), ExhaustedError);
}

TEST_CASE("tied bounds split selections evenly") {
    ScoringState state(3, 5);
    UcbState ucb(3);
    ucb.bounds = {0.7, 0.7, 0.2};
    auto stream = derive_rng(3, "tie");
    int zero = 0, one = 0;
    const int trials = 4000;
    for (int t = 0; t < trials; ++t) {
        auto i = ucb_select_method(state, ucb, stream);
        zero += i == 0;
        one += i == 1;
    }
    CHECK(zero + one == trials);
    CHECK(std::abs(zero / double(trials) - 0.5) < 0.05);
    CHECK(std::abs(one / double(trials) - 0.5) < 0.05);
}

TEST_CASE("ucb_update applies the bound formula to one row") {
    ScoringState state(2, 10);
    state.record(0, 0, 1.0);
    state.record(0, 1, 0.0);
    state.record(0, 2, 1.0);
    state.record(0, 3, 0.0);
    UcbState ucb(2);
    ucb_update(state, ucb, 0, 1.0);
    CHECK(ucb.bounds[0] == 1.0);
    CHECK(ucb.counts[0] == 4);
    CHECK(std::isinf(ucb.bounds[1]));
    CHECK(ucb.counts[1] == 0);

    ucb_update(state, ucb, 0, 0.0);
    CHECK(ucb.bounds[0] == 0.5);

    ScoringState other(1, 5);
    other.record(0, 0, 1.0);
    other.record(0, 1, 1.0);
    other.record(0, 2, 0.0);
    UcbState u(1);
    ucb_update(other, u, 0, 0.25);
    CHECK(u.bounds[0] == doctest::Approx(0.95536).epsilon(1e-5));
}

TEST_CASE("dominant arm is found within m*b evaluations") {
    const std::size_t m = 5, n = 64, b = 32;
    std::vector<double> means(m, 0.0);
    means[0] = 1.0;
    auto stream = derive_rng(0, "dominant");
    auto inst = synth_planted(m, n, means, {NoiseKind::none, 0.0}, stream);
    int successes = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto run = run_ucb_e(inst.oracle, with_budget(m * b, b), seed);
        successes += run.prediction.best_index == 0;
    }
    CHECK(successes == 50);
}

TEST_CASE("full budget recovers the exact argmax for every algorithm in this module") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto oracle = random_oracle(6, 9, seed);
        auto truth = GroundTruth::from_matrix(oracle.matrix());
        auto c = with_budget(54, 4);
        CHECK(run_ucb_e(oracle, c, seed).prediction.best_index == truth.best_index);
        CHECK(run_row_mean_imputation(oracle, c, seed).prediction.best_index == truth.best_index);
        CHECK(run_filled_subset(oracle, c, seed).prediction.best_index == truth.best_index);
    }
}

TEST_CASE("UCB-E batches stay within one row and respect the budget") {
    auto oracle = random_oracle(7, 20, 42);
    for (std::size_t budget : {1u, 13u, 64u, 140u}) {
        auto run = run_ucb_e(oracle, with_budget(budget, 6), 9);
        CHECK(run.pairs.size() == budget);
        std::size_t offset = 0;
        for (auto k : run.batch_sizes) {
            REQUIRE(k >= 1);
            for (std::size_t t = offset; t < offset + k; ++t) CHECK(run.pairs[t].method == run.pairs[offset].method);
            offset += k;
        }
        CHECK(offset == budget);
        std::set<std::pair<std::size_t, std::size_t>> seen;
        for (auto& p : run.pairs) CHECK(seen.insert({p.method, p.example}).second);
    }
}

TEST_CASE("a = 0 reduces UCB-E to greedy selection on empirical means") {
    // Stand-alone greedy: untried rows first, otherwise the highest observed mean.
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto oracle = random_oracle(5, 12, 100 + seed);
        const std::size_t budget = 45, batch = 4;
        auto c = with_budget(budget, batch);
        c.exploration_a = 0.0;
        auto run = run_ucb_e(oracle, c, seed);

        std::vector<std::vector<double>> seen(5);
        std::vector<std::vector<std::size_t>> open(5);
        for (auto& cols : open)
            for (std::size_t j = 0; j < 12; ++j) cols.push_back(j);
        auto stream = derive_rng(seed, "select");
        std::vector<EvaluatedPair> expected;
        while (expected.size() < budget) {
            std::vector<double> score(5);
            std::vector<std::uint8_t> eligible(5);
            for (std::size_t i = 0; i < 5; ++i) {
                eligible[i] = !open[i].empty();
                if (seen[i].empty()) {
                    score[i] = std::numeric_limits<double>::infinity();
                } else {
                    double sum = 0.0;
                    for (double v : seen[i]) sum += v;
                    score[i] = sum / static_cast<double>(seen[i].size());
                }
            }
            auto i = argmax_with_ties(score, eligible, stream);
            // Keep the remaining columns in ascending order, as a fresh scan of the row would.
            std::sort(open[i].begin(), open[i].end());
            std::size_t k = std::min({batch, open[i].size(), budget - expected.size()});
            auto drawn = draw_without_replacement(open[i], k, stream);
            for (auto j : drawn) {
                double v = oracle.query(i, j);
                seen[i].push_back(v);
                expected.push_back({i, j, v});
                open[i].erase(std::find(open[i].begin(), open[i].end(), j));
            }
        }
        CHECK(run.pairs == expected);
    }
}

TEST_CASE("row-mean imputation draws distinct pairs") {
    auto oracle = random_oracle(2, 2, 1);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto run = run_row_mean_imputation(oracle, with_budget(2), seed);
        REQUIRE(run.pairs.size() == 2);
        CHECK_FALSE((run.pairs[0].method == run.pairs[1].method && run.pairs[0].example == run.pairs[1].example));
    }
}

TEST_CASE("row-mean imputation separates a large gap") {
    std::vector<double> means{0.9, 0.1};
    auto stream = derive_rng(7, "gap");
    auto inst = synth_planted(2, 200, means, {NoiseKind::bernoulli, 0.0}, stream);
    int successes = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        successes += run_row_mean_imputation(inst.oracle, with_budget(200), seed).prediction.best_index ==
                     inst.best_index;
    }
    CHECK(successes / 200.0 >= 0.99);
}

TEST_CASE("row-mean estimator is unbiased") {
    std::vector<double> means{0.3, 0.5, 0.7};
    auto stream = derive_rng(8, "unbiased");
    auto inst = synth_planted(3, 20, means, {NoiseKind::bernoulli, 0.0}, stream);
    const int trials = 10000;
    std::vector<double> sum(3, 0.0), sum2(3, 0.0);
    std::vector<int> count(3, 0);
    for (int t = 0; t < trials; ++t) {
        auto run = run_row_mean_imputation(inst.oracle, with_budget(15), static_cast<std::uint64_t>(t));
        for (std::size_t i = 0; i < 3; ++i) {
            double v = run.prediction.estimated_means[i];
            if (std::isnan(v)) continue;
            sum[i] += v;
            sum2[i] += v * v;
            ++count[i];
        }
    }
    for (std::size_t i = 0; i < 3; ++i) {
        double mean = sum[i] / count[i];
        double var = (sum2[i] - count[i] * mean * mean) / (count[i] - 1);
        double se = std::sqrt(var / count[i]);
        CHECK(std::abs(mean - inst.true_means[i]) < 3.0 * se);
    }
}

TEST_CASE("UCB-E spends far less on a clearly inferior arm than uniform sampling") {
    std::vector<double> means{0.8, 0.3};
    auto stream = derive_rng(9, "dominance");
    auto inst = synth_planted(2, 200, means, {NoiseKind::bernoulli, 0.0}, stream);
    const std::size_t budget = 200;
    double ucb_share = 0.0, uniform_share = 0.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto c = with_budget(budget, 1);
        auto run = run_ucb_e(inst.oracle, c, seed);
        auto base = run_row_mean_imputation(inst.oracle, c, seed);
        for (auto& p : run.pairs) ucb_share += p.method == 1;
        for (auto& p : base.pairs) uniform_share += p.method == 1;
    }
    ucb_share /= 50.0 * budget;
    uniform_share /= 50.0 * budget;
    CHECK(ucb_share < 0.30);
    CHECK(std::abs(uniform_share - 0.5) < 0.05);
}

TEST_CASE("filled subset completes columns one at a time") {
    const std::size_t m = 4, n = 9;
    auto oracle = random_oracle(m, n, 5);
    auto run = run_filled_subset(oracle, with_budget(2 * m, 3), 11);
    ScoringState full = replay(run.pairs, run.pairs.size(), m, n);
    std::size_t complete_columns = 0;
    for (std::size_t j = 0; j < n; ++j) complete_columns += full.column_count(j) == m;
    CHECK(complete_columns == 2);

    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto long_run = run_filled_subset(oracle, with_budget(31, 5), seed);
        ScoringState state(m, n);
        for (auto& p : long_run.pairs) {
            state.record(p.method, p.example, p.score);
            std::size_t partial = 0;
            for (std::size_t j = 0; j < n; ++j) {
                auto c = state.column_count(j);
                if (c != 0 && c != m) ++partial;
            }
            REQUIRE(partial <= 1);
        }
    }
}

TEST_CASE("unsampled rows are excluded from the prediction with a warning") {
    ScoringState state(3, 4);
    state.record(1, 0, 0.2);
    state.record(2, 3, 0.1);
    auto stream = derive_rng(1, "warn");
    auto pred = predict_row_means(state, stream);
    CHECK(pred.best_index == 1);
    CHECK(std::isnan(pred.estimated_means[0]));
    CHECK(pred.warnings.size() == 1);

    auto oracle = random_oracle(10, 4, 3);
    auto run = run_ucb_e(oracle, with_budget(3, 1), 0);
    CHECK(run.prediction.warnings.size() == 1);
}
