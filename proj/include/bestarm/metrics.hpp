#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "bestarm/core.hpp"

namespace bestarm {

/// Full-information view of a score matrix, used only for evaluation.
struct GroundTruth {
    Eigen::MatrixXd scores;
    std::vector<double> means;
    /// Lowest-index maximizer of `means`; any maximizer counts as correct.
    MethodIndex best_index = 0;
    std::optional<double> h1;

    static GroundTruth from_matrix(const Eigen::MatrixXd& scores);

    std::size_t methods() const { return means.size(); }
    double best_mean() const { return means[best_index]; }
};

/// Sum over methods not tied with the best of 1 / (mu_i - mu_best)^2.
/// Throws DegenerateError when every method ties exactly.
double hardness_h1(std::span<const double> means);
double hardness_h1(const GroundTruth& truth);

/// 1 iff mu[predicted] >= mu[best] - epsilon.
int precision_gap(const GroundTruth& truth, MethodIndex predicted, double epsilon);

struct McNemarCounts {
    std::size_t wins_first = 0;
    std::size_t wins_second = 0;
};

/// Per-example strict wins of row i over row j and vice versa.
McNemarCounts mcnemar_counts(const GroundTruth& truth, MethodIndex i, MethodIndex j);

enum class McNemarForm {
    /// Chi-squared with one degree of freedom on (|b - c| - 1)^2 / (b + c).
    continuity_corrected,
    /// Two-sided binomial test of the discordant counts against p = 1/2.
    exact_binomial,
};

enum class NdcgGain {
    mean,         // gain = mu
    exponential,  // gain = 2^mu - 1
};

/// McNemar p-value from discordant counts; 1 when there are none.
double mcnemar_p_from_counts(std::size_t wins_first, std::size_t wins_second,
                             McNemarForm form = McNemarForm::continuity_corrected);
double mcnemar_p(const GroundTruth& truth, MethodIndex i, MethodIndex j,
                 McNemarForm form = McNemarForm::continuity_corrected);

/// 1 iff `predicted` is the best, ties it exactly, or McNemar cannot reject equality at `p_level`.
int precision_significance(const GroundTruth& truth, MethodIndex predicted, double p_level,
                           McNemarForm form = McNemarForm::continuity_corrected);

/**
 * NDCG@k with a gain computed from each method's true mean (the mean itself
 * by default) and 1/log2(position+1) as the discount. Returns 1 when the
 * ideal DCG is zero.
 *
 * Throws ConfigError for k == 0, a ranking shorter than k, duplicate indices
 * in the first k positions, or indices out of range.
 */
double ndcg_at_k(const GroundTruth& truth, std::span<const MethodIndex> predicted_ranking, std::size_t k,
                 NdcgGain gain = NdcgGain::mean);

/// "corrected" / "exact" and "mean" / "exponential"; throw ConfigError otherwise.
McNemarForm parse_mcnemar_form(std::string_view name);
NdcgGain parse_ndcg_gain(std::string_view name);
const char* to_string(McNemarForm form);
const char* to_string(NdcgGain gain);

/// Survival function of the chi-squared distribution with one degree of freedom.
double chi_squared_1_sf(double statistic);

}  // namespace bestarm
