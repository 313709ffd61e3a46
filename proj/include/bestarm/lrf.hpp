#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "bestarm/core.hpp"

namespace bestarm {

/// One rank-r factorization: predictions are u * v^T.
struct FactorPair {
    Eigen::MatrixXd u;  // m x r
    Eigen::MatrixXd v;  // n x r
    /// Objective (masked squared residual plus ridge) at initialization and after every alternation.
    std::vector<double> objective_trace;
    std::size_t iterations = 0;

    Eigen::MatrixXd predict() const { return u * v.transpose(); }
};

struct FactorEnsemble {
    std::vector<FactorPair> members;
    /// Unclamped average of member predictions.
    Eigen::MatrixXd raw_mean;
    /// raw_mean clamped to [0, 1]; the estimate used downstream.
    Eigen::MatrixXd estimate;
    /// RMS deviation of member predictions from raw_mean, zero on observed cells.
    Eigen::MatrixXd uncertainty;
};

/**
 * Alternating ridge least squares on the cells where `member_mask` is set.
 *
 * member_mask is row-major m*n and must be a subset of the state's mask.
 * Factors start i.i.d. uniform in [0, sqrt(mean observed score / r)] and each
 * half-step solves every row of U (then V) in closed form. Iteration stops
 * when the relative objective change drops below the tolerance or after
 * max_iterations alternations. Rows and columns with no cells in the support
 * are then set so that their average prediction equals the support mean.
 *
 * Throws DegenerateError when the support is empty.
 */
FactorPair als_fit(const ScoringState& state, std::span<const std::uint8_t> member_mask, std::size_t rank,
                   const AlsSettings& settings, RandomStream& stream);

/// Objective of `pair` on `member_mask`: squared residual plus ridge * (|U|^2 + |V|^2).
double als_objective(const ScoringState& state, std::span<const std::uint8_t> member_mask, const FactorPair& pair,
                     double ridge);

/**
 * Bootstrap-style ensemble: each of C members hides dropout_fraction of the
 * observed cells, fits ALS on the rest, and contributes u v^T. Member fits may
 * run on config.workers threads; the reduction runs in member order.
 */
FactorEnsemble fit_ensemble(const ScoringState& state, const AlgorithmConfig& config, RandomStream& stream);

/// Builds raw_mean, estimate and uncertainty from already fitted members.
FactorEnsemble aggregate_members(const ScoringState& state, std::vector<FactorPair> members);

/// mu_i = (sum_j O_ij S_ij + (1 - O_ij) estimate_ij) / n.
std::vector<double> gated_means(const ScoringState& state, const Eigen::MatrixXd& estimate);

}  // namespace bestarm
