#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "bestarm/core.hpp"

using namespace bestarm;

TEST_CASE("row_mean averages observed cells only") {
    ScoringState s(2, 10);
    s.record(0, 0, 1.0);
    s.record(0, 3, 0.0);
    s.record(0, 7, 1.0);
    CHECK(s.row_mean(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

    s.record(1, 2, 0.25);
    s.record(1, 9, 0.75);
    CHECK(s.row_mean(1) == 0.5);
}

TEST_CASE("row_mean of a constant full row is that constant") {
    ScoringState s(1, 7);
    for (std::size_t j = 0; j < 7; ++j) s.record(0, j, 0.3);
    CHECK(s.row_mean(0) == 0.3);
}

TEST_CASE("row_mean on an empty row throws") {
    ScoringState s(3, 4);
    s.record(0, 0, 0.5);
    CHECK_THROWS_AS(s.row_mean(1), EmptyRowError);
}

TEST_CASE("row_mean of a full row matches direct averaging exactly") {
    auto stream = derive_rng(11, "row-mean");
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + stream.uniform_index(40);
        ScoringState s(1, n);
        std::vector<double> row(n);
        for (auto& v : row) v = stream.uniform01();
        std::vector<std::size_t> order(n);
        for (std::size_t j = 0; j < n; ++j) order[j] = j;
        std::shuffle(order.begin(), order.end(), stream.engine());
        for (auto j : order) s.record(0, j, row[j]);
        double sum = 0.0;
        for (double v : row) sum += v;
        CHECK(s.row_mean(0) == sum / static_cast<double>(n));
    }
}

TEST_CASE("record updates mask and count") {
    ScoringState s(2, 2);
    s.record(0, 1, 0.5);
    CHECK(s.evaluations_used() == 1);
    CHECK(s.is_observed(0, 1));
    CHECK_FALSE(s.is_observed(0, 0));
    CHECK(s.score(0, 1).value() == 0.5);
    CHECK_FALSE(s.score(1, 1).has_value());
    CHECK(s.gated_score(1, 1) == 0.0);
}

TEST_CASE("record rejects duplicates, out-of-range scores and bad indices") {
    ScoringState s(2, 3);
    s.record(1, 2, 0.1);
    CHECK_THROWS_AS(s.record(1, 2, 0.1), DuplicateObservationError);
    CHECK_THROWS_AS(s.record(0, 0, 1.5), RangeError);
    CHECK_THROWS_AS(s.record(0, 0, -0.01), RangeError);
    CHECK_THROWS_AS(s.record(0, 0, std::nan("")), RangeError);
    CHECK_THROWS_AS(s.record(2, 0, 0.5), IndexError);
    CHECK_THROWS_AS(s.record(0, 3, 0.5), IndexError);
    // Failed records leave the state untouched.
    CHECK(s.evaluations_used() == 1);
}

TEST_CASE("recording every pair saturates the state") {
    const std::size_t m = 4, n = 5;
    ScoringState s(m, n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) s.record(i, j, 0.5);
    CHECK(s.evaluations_used() == m * n);
    CHECK(s.complete());
    for (auto bit : s.mask()) CHECK(bit == 1);
}

TEST_CASE("evaluations_used tracks the mask through random record sequences") {
    auto stream = derive_rng(3, "mask-count");
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t m = 1 + stream.uniform_index(6);
        const std::size_t n = 1 + stream.uniform_index(9);
        ScoringState s(m, n);
        for (int step = 0; step < 80; ++step) {
            MethodIndex i = stream.uniform_index(m);
            ExampleIndex j = stream.uniform_index(n);
            double v = stream.uniform(-0.2, 1.2);
            try {
                s.record(i, j, v);
            } catch (const Error&) {
            }
            std::size_t bits = 0;
            for (auto b : s.mask()) bits += b;
            REQUIRE(bits == s.evaluations_used());
            std::size_t rows = 0;
            for (std::size_t r = 0; r < m; ++r) rows += s.row_count(r);
            REQUIRE(rows == bits);
            for (std::size_t k = 0; k < m * n; ++k) {
                if (!s.mask()[k]) REQUIRE(s.values()[k] == 0.0);
                else REQUIRE((s.values()[k] >= 0.0 && s.values()[k] <= 1.0));
            }
        }
    }
}

TEST_CASE("unobserved_in_row lists the open columns in order") {
    ScoringState s(1, 5);
    s.record(0, 1, 0.0);
    s.record(0, 3, 1.0);
    CHECK(s.unobserved_in_row(0) == std::vector<ExampleIndex>{0, 2, 4});
}

TEST_CASE("derive_rng is deterministic per (seed, label)") {
    auto a = derive_rng(7, "trial-0");
    auto b = derive_rng(7, "trial-0");
    for (int k = 0; k < 100; ++k) CHECK(a.next_u64() == b.next_u64());

    auto c = derive_rng(7, "trial-0");
    auto d = derive_rng(7, "trial-1");
    auto e = derive_rng(8, "trial-0");
    auto first = c.next_u64();
    CHECK(first != d.next_u64());
    CHECK(first != e.next_u64());
    CHECK(derive_seed(7, "trial-0") != derive_seed(7, "trial-1"));
}

TEST_CASE("streams with distinct labels look independent") {
    auto a = derive_rng(1, "alpha");
    auto b = derive_rng(1, "beta");
    const int count = 20000;
    double sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
    for (int k = 0; k < count; ++k) {
        double x = a.uniform01(), y = b.uniform01();
        sa += x;
        sb += y;
        sab += x * y;
        saa += x * x;
        sbb += y * y;
    }
    double ma = sa / count, mb = sb / count;
    double corr = (sab / count - ma * mb) / std::sqrt((saa / count - ma * ma) * (sbb / count - mb * mb));
    CHECK(std::abs(ma - 0.5) < 0.01);
    CHECK(std::abs(mb - 0.5) < 0.01);
    CHECK(std::abs(corr) < 0.03);
}

TEST_CASE("argmax_with_ties picks among maxima uniformly") {
    std::vector<double> values{0.7, 0.7, 0.2};
    auto stream = derive_rng(5, "ties");
    int zero = 0;
    const int trials = 4000;
    for (int t = 0; t < trials; ++t) {
        std::size_t tied = 0;
        auto k = argmax_with_ties(values, stream, &tied);
        REQUIRE(k < 2);
        REQUIRE(tied == 2);
        zero += k == 0;
    }
    CHECK(std::abs(zero / double(trials) - 0.5) < 0.05);
}

TEST_CASE("argmax_with_ties honours eligibility and infinity") {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> values{inf, 0.5, inf};
    std::vector<std::uint8_t> eligible{0, 1, 1};
    auto stream = derive_rng(1, "x");
    std::size_t tied = 0;
    CHECK(argmax_with_ties(values, eligible, stream, &tied) == 2);
    CHECK(tied == 1);
    std::vector<std::uint8_t> none{0, 0, 0};
    CHECK_THROWS_AS(argmax_with_ties(values, none, stream), ExhaustedError);
}

TEST_CASE("draw_without_replacement is prefix consistent and distinct") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::vector<std::size_t> base(30);
        for (std::size_t k = 0; k < base.size(); ++k) base[k] = k * 3;
        auto p1 = base, p2 = base;
        auto s1 = derive_rng(seed, "draw");
        auto s2 = derive_rng(seed, "draw");
        auto long_draw = draw_without_replacement(p1, 25, s1);
        auto short_draw = draw_without_replacement(p2, 9, s2);
        CHECK(std::equal(short_draw.begin(), short_draw.end(), long_draw.begin()));
        std::set<std::size_t> unique(long_draw.begin(), long_draw.end());
        CHECK(unique.size() == 25);
    }
}

TEST_CASE("IncrementalShuffle covers the pool exactly once") {
    std::vector<std::size_t> pool{4, 8, 15, 16, 23, 42};
    IncrementalShuffle shuffle(pool);
    auto stream = derive_rng(2, "pool");
    std::multiset<std::size_t> seen;
    while (!shuffle.empty()) seen.insert(shuffle.next(stream));
    CHECK(seen == std::multiset<std::size_t>(pool.begin(), pool.end()));
    CHECK_THROWS_AS(shuffle.next(stream), ExhaustedError);
}

TEST_CASE("ranking_from_means sorts descending, stable, NaN last") {
    std::vector<double> means{0.5, std::nan(""), 0.9, 0.5};
    CHECK(ranking_from_means(means) == std::vector<MethodIndex>{2, 0, 3, 1});
}

TEST_CASE("budget_from_fraction floors with a minimum of one") {
    CHECK(budget_from_fraction(1.0, 3, 4) == 12);
    CHECK(budget_from_fraction(0.5, 3, 5) == 7);
    CHECK(budget_from_fraction(0.001, 2, 2) == 1);
    CHECK(budget_from_fraction(0.3, 10, 10) == 30);
    CHECK_THROWS_AS(budget_from_fraction(0.0, 2, 2), ConfigError);
    CHECK_THROWS_AS(budget_from_fraction(1.1, 2, 2), ConfigError);
}

TEST_CASE("AlgorithmConfig defaults and validation") {
    AlgorithmConfig c;
    CHECK(c.exploration_a == 1.0);
    CHECK(c.rank == 1);
    CHECK(c.ensemble_size == 64);
    CHECK(c.uncertainty_scale == 5.0);
    CHECK(c.batch_size == 32);
    CHECK(c.dropout_fraction == 0.1);
    CHECK(c.als.max_iterations == 50);
    CHECK(c.als.tolerance == 1e-6);
    CHECK(c.als.ridge == 1e-6);
    CHECK(c.resolved_warmup(154, 805) == 6199);
    CHECK(c.resolved_warmup(100, 800) == 4000);
    CHECK(c.resolved_warmup(3, 3) == 1);

    c.budget_total = 100;
    CHECK_NOTHROW(c.validate(10, 20, true));
    c.budget_total = 201;
    CHECK_THROWS_AS(c.validate(10, 20, false), ConfigError);
    c.budget_total = 10;
    CHECK_THROWS_AS(c.validate(10, 20, true), ConfigError);  // T0 = 10 is not below T
    CHECK_NOTHROW(c.validate(10, 20, false));
    c.budget_total = 5;
    CHECK(c.effective_batch() == 5);
}
