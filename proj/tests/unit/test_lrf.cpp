#include <doctest.h>

#include <cmath>

#include "bestarm/lrf.hpp"

using namespace bestarm;

namespace {

struct Planted {
    Eigen::MatrixXd full;
    ScoringState state;
};

// Exact rank-1 nonnegative matrix with `fraction` of its cells observed uniformly.
Planted planted_rank_one(std::size_t m, std::size_t n, double fraction, std::uint64_t seed) {
    auto stream = derive_rng(seed, "planted");
    Eigen::VectorXd u(m), v(n);
    for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = stream.uniform(0.3, 1.0);
    for (Eigen::Index j = 0; j < v.size(); ++j) v(j) = stream.uniform(0.3, 1.0);
    Planted p{u * v.transpose(), ScoringState(m, n)};
    std::vector<std::size_t> cells(m * n);
    for (std::size_t k = 0; k < cells.size(); ++k) cells[k] = k;
    auto keep = draw_without_replacement(cells, static_cast<std::size_t>(fraction * m * n), stream);
    for (auto c : keep) p.state.record(c / n, c % n, p.full(c / n, c % n));
    return p;
}

std::vector<std::uint8_t> full_mask(const ScoringState& s) { return {s.mask().begin(), s.mask().end()}; }

bool every_row_and_column_touched(const ScoringState& s) {
    for (std::size_t i = 0; i < s.methods(); ++i)
        if (s.row_count(i) == 0) return false;
    for (std::size_t j = 0; j < s.examples(); ++j)
        if (s.column_count(j) == 0) return false;
    return true;
}

void check_monotone(const FactorPair& pair) {
    for (std::size_t k = 1; k < pair.objective_trace.size(); ++k) {
        REQUIRE(pair.objective_trace[k] <= pair.objective_trace[k - 1] * (1.0 + 1e-12) + 1e-300);
    }
}

}  // namespace

TEST_CASE("ALS recovers an exact rank-1 matrix from 40% of its cells") {
    auto p = planted_rank_one(30, 40, 0.4, 1);
    REQUIRE(every_row_and_column_touched(p.state));
    auto stream = derive_rng(1, "als");
    auto pair = als_fit(p.state, full_mask(p.state), 1, AlsSettings{}, stream);
    double err = (pair.predict() - p.full).norm() / p.full.norm();
    CHECK(err < 1e-3);
    CHECK(pair.u.rows() == 30);
    CHECK(pair.v.rows() == 40);
    CHECK(pair.u.cols() == 1);
    CHECK(pair.u.allFinite());
    CHECK(pair.v.allFinite());
    check_monotone(pair);
}

TEST_CASE("ALS objective never increases") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        auto stream = derive_rng(seed, "noisy");
        const std::size_t m = 8 + seed % 5, n = 12;
        ScoringState state(m, n);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (stream.bernoulli(0.5)) state.record(i, j, stream.bernoulli(0.6) ? 1.0 : 0.0);
        for (std::size_t rank : {1u, 2u, 3u}) {
            auto pair = als_fit(state, full_mask(state), rank, AlsSettings{}, stream);
            check_monotone(pair);
            CHECK(pair.objective_trace.size() == pair.iterations + 1);
            CHECK(pair.objective_trace.back() ==
                  doctest::Approx(als_objective(state, full_mask(state), pair, 1e-6)).epsilon(1e-9));
        }
    }
}

TEST_CASE("constant observations fit the constant") {
    ScoringState state(5, 6);
    auto stream = derive_rng(2, "const");
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 6; ++j)
            if ((i + j) % 2 == 0) state.record(i, j, 0.35);
    auto pair = als_fit(state, full_mask(state), 1, AlsSettings{}, stream);
    auto pred = pair.predict();
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 6; ++j)
            if (state.is_observed(i, j)) CHECK(std::abs(pred(i, j) - 0.35) < 1e-6);
}

TEST_CASE("a single observation is fitted and spread to unsupported rows and columns") {
    ScoringState state(3, 4);
    state.record(1, 2, 0.8);
    auto stream = derive_rng(3, "single");
    auto pair = als_fit(state, full_mask(state), 1, AlsSettings{}, stream);
    auto pred = pair.predict();
    CHECK(std::abs(pred(1, 2) - 0.8) < 1e-3);
    // Unsupported rows and columns predict the support mean.
    CHECK(std::abs(pred(0, 0) - 0.8) < 1e-3);
    CHECK(std::abs(pred(2, 3) - 0.8) < 1e-3);
}

TEST_CASE("unsupported rows average to the support mean") {
    ScoringState state(4, 5);
    auto stream = derive_rng(4, "fallback");
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 5; ++j)
            if (stream.bernoulli(0.7)) state.record(i, j, stream.uniform01());
    double sum = 0.0;
    for (std::size_t k = 0; k < state.values().size(); ++k) sum += state.values()[k];
    double support_mean = sum / static_cast<double>(state.evaluations_used());
    auto pair = als_fit(state, full_mask(state), 1, AlsSettings{}, stream);
    auto pred = pair.predict();
    CHECK(pred.row(3).mean() == doctest::Approx(support_mean).epsilon(1e-9));
}

TEST_CASE("ALS rejects empty support and masks outside the observations") {
    ScoringState state(2, 2);
    auto stream = derive_rng(5, "bad");
    std::vector<std::uint8_t> none(4, 0);
    CHECK_THROWS_AS(als_fit(state, none, 1, AlsSettings{}, stream), DegenerateError);
    state.record(0, 0, 0.5);
    std::vector<std::uint8_t> outside{1, 1, 0, 0};
    CHECK_THROWS_AS(als_fit(state, outside, 1, AlsSettings{}, stream), ConfigError);
}

TEST_CASE("single-member ensemble has zero uncertainty") {
    auto p = planted_rank_one(6, 9, 0.5, 6);
    AlgorithmConfig c;
    c.ensemble_size = 1;
    auto stream = derive_rng(6, "c1");
    auto ens = fit_ensemble(p.state, c, stream);
    CHECK(ens.uncertainty.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("fully observed state has zero uncertainty") {
    auto p = planted_rank_one(5, 7, 1.0, 7);
    AlgorithmConfig c;
    c.ensemble_size = 8;
    auto stream = derive_rng(7, "full");
    auto ens = fit_ensemble(p.state, c, stream);
    CHECK(ens.uncertainty.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("ensemble members agree on recoverable input") {
    auto p = planted_rank_one(30, 40, 0.5, 8);
    AlgorithmConfig c;
    c.ensemble_size = 16;
    auto stream = derive_rng(8, "agree");
    auto ens = fit_ensemble(p.state, c, stream);
    double worst = 0.0;
    for (std::size_t i = 0; i < 30; ++i)
        for (std::size_t j = 0; j < 40; ++j)
            if (!p.state.is_observed(i, j)) worst = std::max(worst, ens.uncertainty(i, j));
    CHECK(worst < 0.05);
    double err = (ens.estimate - p.full).norm() / p.full.norm();
    CHECK(err < 1e-3);
}

TEST_CASE("ensemble statistics match a direct recomputation") {
    auto stream = derive_rng(9, "eq");
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t m = 6, n = 8;
        ScoringState state(m, n);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (stream.bernoulli(0.4)) state.record(i, j, stream.uniform01());
        if (state.evaluations_used() < 2) continue;
        AlgorithmConfig c;
        c.ensemble_size = 5;
        c.rank = 1 + trial % 2;
        auto fit_stream = derive_rng(static_cast<std::uint64_t>(trial), "fit");
        auto ens = fit_ensemble(state, c, fit_stream);
        REQUIRE(ens.members.size() == 5);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                double mean = 0.0;
                for (auto& mem : ens.members) mean += (mem.u.row(i) * mem.v.row(j).transpose())(0, 0);
                mean /= 5.0;
                double dev = 0.0;
                for (auto& mem : ens.members) {
                    double d = (mem.u.row(i) * mem.v.row(j).transpose())(0, 0) - mean;
                    dev += d * d;
                }
                double r = state.is_observed(i, j) ? 0.0 : std::sqrt(dev / 5.0);
                REQUIRE(std::abs(ens.raw_mean(i, j) - mean) < 1e-12);
                REQUIRE(std::abs(ens.estimate(i, j) - std::clamp(mean, 0.0, 1.0)) < 1e-12);
                REQUIRE(std::abs(ens.uncertainty(i, j) - r) < 1e-12);
                if (state.is_observed(i, j)) REQUIRE(ens.uncertainty(i, j) == 0.0);
            }
        }
    }
}

TEST_CASE("fit_ensemble is deterministic and independent of worker count") {
    auto p = planted_rank_one(10, 14, 0.4, 10);
    AlgorithmConfig c;
    c.ensemble_size = 12;
    auto s1 = derive_rng(10, "det");
    auto s2 = derive_rng(10, "det");
    auto a = fit_ensemble(p.state, c, s1);
    c.workers = 4;
    auto b = fit_ensemble(p.state, c, s2);
    CHECK((a.estimate.array() == b.estimate.array()).all());
    CHECK((a.uncertainty.array() == b.uncertainty.array()).all());
}

TEST_CASE("each member hides the configured fraction of observations") {
    auto p = planted_rank_one(10, 10, 0.5, 11);
    AlgorithmConfig c;
    c.ensemble_size = 4;
    c.dropout_fraction = 0.1;
    auto stream = derive_rng(11, "dropout");
    auto ens = fit_ensemble(p.state, c, stream);
    // 50 observed cells, 5 hidden per member: members differ from each other.
    bool differ = false;
    for (std::size_t k = 1; k < ens.members.size(); ++k)
        differ = differ || (ens.members[k].predict() - ens.members[0].predict()).norm() > 0.0;
    CHECK(differ);
    CHECK_THROWS_AS([&] {
        AlgorithmConfig bad;
        bad.dropout_fraction = 1.0;
        auto s = derive_rng(1, "x");
        fit_ensemble(p.state, bad, s);
    }(),
                    ConfigError);
}

TEST_CASE("gated_means combines observations and estimates") {
    ScoringState state(2, 4);
    state.record(0, 0, 1.0);
    state.record(0, 2, 0.0);
    Eigen::MatrixXd est = Eigen::MatrixXd::Constant(2, 4, 0.5);
    est(0, 1) = 0.6;
    est(0, 3) = 0.2;
    auto mu = gated_means(state, est);
    CHECK(mu[0] == doctest::Approx(0.45).epsilon(1e-15));
    CHECK(mu[1] == 0.5);

    ScoringState full(1, 3);
    full.record(0, 0, 0.1);
    full.record(0, 1, 0.2);
    full.record(0, 2, 0.6);
    Eigen::MatrixXd junk = Eigen::MatrixXd::Constant(1, 3, 0.99);
    CHECK(gated_means(full, junk)[0] == full.row_mean(0));
    CHECK_THROWS_AS(gated_means(full, est), ConfigError);
}

TEST_CASE("gated means equal row means on fully observed rows") {
    auto stream = derive_rng(12, "gate");
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + stream.uniform_index(30);
        ScoringState s(3, n);
        for (std::size_t j = 0; j < n; ++j) s.record(1, j, stream.uniform01());
        Eigen::MatrixXd est = Eigen::MatrixXd::Random(3, static_cast<Eigen::Index>(n));
        CHECK(gated_means(s, est)[1] == s.row_mean(1));
    }
}
