#include "bestarm/lrf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bestarm/parallel.hpp"

namespace bestarm {

namespace {

// Observed cells of one member in compressed row and compressed column form.
struct Support {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> row_ptr;
    std::vector<std::size_t> row_idx;  // column of each cell, grouped by row
    std::vector<double> row_val;
    std::vector<std::size_t> col_ptr;
    std::vector<std::size_t> col_idx;  // row of each cell, grouped by column
    std::vector<double> col_val;
    double mean = 0.0;

    std::size_t size() const { return row_idx.size(); }
};

// `cells` are row-major cell ids in increasing order, all observed in `state`.
Support build_support(const ScoringState& state, std::span<const std::size_t> cells) {
    const std::size_t m = state.methods();
    const std::size_t n = state.examples();
    const auto values = state.values();

    Support s;
    s.rows = m;
    s.cols = n;
    s.row_ptr.assign(m + 1, 0);
    s.col_ptr.assign(n + 1, 0);
    s.row_idx.resize(cells.size());
    s.row_val.resize(cells.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < cells.size(); ++k) {
        const std::size_t i = cells[k] / n;
        const std::size_t j = cells[k] % n;
        s.row_idx[k] = j;
        s.row_val[k] = values[cells[k]];
        ++s.row_ptr[i + 1];
        ++s.col_ptr[j + 1];
        sum += values[cells[k]];
    }
    if (cells.empty()) throw DegenerateError("ALS support is empty");
    s.mean = sum / static_cast<double>(s.size());

    for (std::size_t i = 0; i < m; ++i) s.row_ptr[i + 1] += s.row_ptr[i];
    for (std::size_t j = 0; j < n; ++j) s.col_ptr[j + 1] += s.col_ptr[j];
    s.col_idx.resize(s.size());
    s.col_val.resize(s.size());
    std::vector<std::size_t> fill(s.col_ptr.begin(), s.col_ptr.end() - 1);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t k = s.row_ptr[i]; k < s.row_ptr[i + 1]; ++k) {
            std::size_t slot = fill[s.row_idx[k]]++;
            s.col_idx[slot] = i;
            s.col_val[slot] = s.row_val[k];
        }
    }
    return s;
}

std::vector<std::size_t> cells_from_mask(const ScoringState& state, std::span<const std::uint8_t> member_mask) {
    if (member_mask.size() != state.methods() * state.examples()) throw ConfigError("member mask has the wrong size");
    const auto mask = state.mask();
    std::vector<std::size_t> cells;
    for (std::size_t k = 0; k < member_mask.size(); ++k) {
        if (!member_mask[k]) continue;
        if (!mask[k]) throw ConfigError("member mask selects an unobserved cell");
        cells.push_back(k);
    }
    return cells;
}

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Closed-form ridge solve for every row of `own` given `other`.
void solve_block(const std::vector<std::size_t>& ptr, const std::vector<std::size_t>& idx,
                 const std::vector<double>& val, const RowMajor& other, RowMajor& own, double ridge) {
    const std::size_t rank = static_cast<std::size_t>(own.cols());
    const std::size_t count = static_cast<std::size_t>(own.rows());
    if (rank == 1) {
        const double* o = other.data();
        double* w = own.data();
        for (std::size_t a = 0; a < count; ++a) {
            double gram = ridge;
            double rhs = 0.0;
            for (std::size_t k = ptr[a]; k < ptr[a + 1]; ++k) {
                double x = o[idx[k]];
                gram += x * x;
                rhs += x * val[k];
            }
            w[a] = gram > 0.0 ? rhs / gram : 0.0;
        }
        return;
    }
    const auto r = static_cast<Eigen::Index>(rank);
    Eigen::MatrixXd gram(r, r);
    Eigen::VectorXd rhs(r);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(r);
    for (std::size_t a = 0; a < count; ++a) {
        if (ptr[a] == ptr[a + 1]) {
            own.row(static_cast<Eigen::Index>(a)).setZero();
            continue;
        }
        gram.setZero();
        gram.diagonal().setConstant(ridge);
        rhs.setZero();
        for (std::size_t k = ptr[a]; k < ptr[a + 1]; ++k) {
            auto x = other.row(static_cast<Eigen::Index>(idx[k])).transpose();
            gram.selfadjointView<Eigen::Lower>().rankUpdate(x);
            rhs += x * val[k];
        }
        gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
        ldlt.compute(gram);
        Eigen::VectorXd sol = ldlt.solve(rhs);
        if (!sol.allFinite()) sol.setZero();
        own.row(static_cast<Eigen::Index>(a)) = sol.transpose();
    }
}

double objective(const Support& s, const RowMajor& u, const RowMajor& v, double ridge) {
    double total = 0.0;
    const auto r = u.cols();
    for (std::size_t i = 0; i < s.rows; ++i) {
        for (std::size_t k = s.row_ptr[i]; k < s.row_ptr[i + 1]; ++k) {
            double pred = 0.0;
            for (Eigen::Index c = 0; c < r; ++c)
                pred += u(static_cast<Eigen::Index>(i), c) * v(static_cast<Eigen::Index>(s.row_idx[k]), c);
            double res = pred - s.row_val[k];
            total += res * res;
        }
    }
    return total + ridge * (u.squaredNorm() + v.squaredNorm());
}

// Rows of `own` without support get the min-norm factor whose average prediction is `target`.
void fill_unsupported(const std::vector<std::size_t>& own_ptr, const std::vector<std::size_t>& other_ptr,
                      const RowMajor& other, RowMajor& own, double target) {
    Eigen::RowVectorXd avg = Eigen::RowVectorXd::Zero(other.cols());
    std::size_t supported = 0;
    for (Eigen::Index b = 0; b < other.rows(); ++b) {
        if (other_ptr[static_cast<std::size_t>(b) + 1] == other_ptr[static_cast<std::size_t>(b)]) continue;
        avg += other.row(b);
        ++supported;
    }
    if (supported == 0) return;
    avg /= static_cast<double>(supported);
    double norm2 = avg.squaredNorm();
    if (!(norm2 > 0.0)) return;
    for (Eigen::Index a = 0; a < own.rows(); ++a) {
        if (own_ptr[static_cast<std::size_t>(a) + 1] != own_ptr[static_cast<std::size_t>(a)]) continue;
        own.row(a) = avg * (target / norm2);
    }
}

FactorPair fit_support(const Support& s, std::size_t rank, const AlsSettings& settings, RandomStream& stream) {
    if (rank == 0) throw ConfigError("rank must be positive");
    const auto m = static_cast<Eigen::Index>(s.rows);
    const auto n = static_cast<Eigen::Index>(s.cols);
    const auto r = static_cast<Eigen::Index>(rank);

    const double scale = std::sqrt(std::max(s.mean, 0.0) / static_cast<double>(rank));
    RowMajor u(m, r);
    RowMajor v(n, r);
    for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index c = 0; c < r; ++c) u(a, c) = scale > 0.0 ? stream.uniform(0.0, scale) : 0.0;
    for (Eigen::Index b = 0; b < n; ++b)
        for (Eigen::Index c = 0; c < r; ++c) v(b, c) = scale > 0.0 ? stream.uniform(0.0, scale) : 0.0;

    FactorPair pair;
    double previous = objective(s, u, v, settings.ridge);
    pair.objective_trace.push_back(previous);
    for (std::size_t it = 1; it <= settings.max_iterations; ++it) {
        solve_block(s.row_ptr, s.row_idx, s.row_val, v, u, settings.ridge);
        solve_block(s.col_ptr, s.col_idx, s.col_val, u, v, settings.ridge);
        double current = objective(s, u, v, settings.ridge);
        pair.objective_trace.push_back(current);
        pair.iterations = it;
        if (current == 0.0) break;
        double change = std::abs(previous - current) / std::max(previous, std::numeric_limits<double>::min());
        previous = current;
        if (change < settings.tolerance) break;
    }

    // Both averages come from the fitted supported rows, before either side is filled.
    RowMajor fitted_u = u;
    fill_unsupported(s.row_ptr, s.col_ptr, v, u, s.mean);
    fill_unsupported(s.col_ptr, s.row_ptr, fitted_u, v, s.mean);

    pair.u = u;
    pair.v = v;
    return pair;
}

}  // namespace

FactorPair als_fit(const ScoringState& state, std::span<const std::uint8_t> member_mask, std::size_t rank,
                   const AlsSettings& settings, RandomStream& stream) {
    return fit_support(build_support(state, cells_from_mask(state, member_mask)), rank, settings, stream);
}

double als_objective(const ScoringState& state, std::span<const std::uint8_t> member_mask, const FactorPair& pair,
                     double ridge) {
    const Support s = build_support(state, cells_from_mask(state, member_mask));
    return objective(s, RowMajor(pair.u), RowMajor(pair.v), ridge);
}

FactorEnsemble aggregate_members(const ScoringState& state, std::vector<FactorPair> members) {
    if (members.empty()) throw ConfigError("ensemble has no members");
    const auto m = static_cast<Eigen::Index>(state.methods());
    const auto n = static_cast<Eigen::Index>(state.examples());
    const double count = static_cast<double>(members.size());

    FactorEnsemble ens;
    ens.raw_mean = Eigen::MatrixXd::Zero(m, n);
    for (const auto& member : members) ens.raw_mean.noalias() += member.u * member.v.transpose();
    ens.raw_mean /= count;
    ens.estimate = ens.raw_mean.cwiseMax(0.0).cwiseMin(1.0);

    Eigen::MatrixXd spread = Eigen::MatrixXd::Zero(m, n);
    Eigen::MatrixXd deviation(m, n);
    for (const auto& member : members) {
        deviation.noalias() = member.u * member.v.transpose();
        deviation -= ens.raw_mean;
        spread += deviation.cwiseAbs2();
    }
    ens.uncertainty = (spread / count).cwiseSqrt();
    const auto mask = state.mask();
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (mask[static_cast<std::size_t>(i * n + j)]) ens.uncertainty(i, j) = 0.0;
    ens.members = std::move(members);
    return ens;
}

FactorEnsemble fit_ensemble(const ScoringState& state, const AlgorithmConfig& config, RandomStream& stream) {
    if (state.evaluations_used() == 0) throw DegenerateError("cannot fit an ensemble without observations");
    if (config.ensemble_size == 0) throw ConfigError("ensemble size must be positive");
    if (!(config.dropout_fraction >= 0.0 && config.dropout_fraction < 1.0)) {
        throw ConfigError("dropout fraction must be in [0, 1)");
    }
    const std::size_t members = config.ensemble_size;
    std::vector<std::uint64_t> seeds(members);
    for (auto& s : seeds) s = stream.next_u64();

    std::vector<std::size_t> observed;
    observed.reserve(state.evaluations_used());
    const auto mask = state.mask();
    for (std::size_t k = 0; k < mask.size(); ++k)
        if (mask[k]) observed.push_back(k);
    const std::size_t hidden = std::min(
        static_cast<std::size_t>(std::floor(config.dropout_fraction * static_cast<double>(observed.size()))),
        observed.size() - 1);

    std::vector<FactorPair> fitted(members);
    parallel_for(members, config.workers, [&](std::size_t c) {
        RandomStream member_stream(seeds[c]);
        std::vector<std::size_t> kept;
        if (hidden > 0) {
            std::vector<std::size_t> positions(observed.size());
            std::iota(positions.begin(), positions.end(), std::size_t{0});
            std::vector<std::uint8_t> dropped(observed.size(), 0);
            for (auto p : draw_without_replacement(positions, hidden, member_stream)) dropped[p] = 1;
            kept.reserve(observed.size() - hidden);
            for (std::size_t p = 0; p < observed.size(); ++p)
                if (!dropped[p]) kept.push_back(observed[p]);
        } else {
            kept = observed;
        }
        fitted[c] = fit_support(build_support(state, kept), config.rank, config.als, member_stream);
    });
    return aggregate_members(state, std::move(fitted));
}

std::vector<double> gated_means(const ScoringState& state, const Eigen::MatrixXd& estimate) {
    const std::size_t m = state.methods();
    const std::size_t n = state.examples();
    if (static_cast<std::size_t>(estimate.rows()) != m || static_cast<std::size_t>(estimate.cols()) != n) {
        throw ConfigError("estimate dimensions do not match the scoring state");
    }
    const auto mask = state.mask();
    const auto values = state.values();
    std::vector<double> means(m);
    for (std::size_t i = 0; i < m; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            std::size_t k = i * n + j;
            sum += mask[k] ? values[k] : estimate(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
        means[i] = sum / static_cast<double>(n);
    }
    return means;
}

}  // namespace bestarm
