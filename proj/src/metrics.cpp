#include "bestarm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

namespace bestarm {

GroundTruth GroundTruth::from_matrix(const Eigen::MatrixXd& scores) {
    if (scores.rows() == 0 || scores.cols() == 0) throw ConfigError("ground truth needs a non-empty matrix");
    GroundTruth truth;
    truth.scores = scores;
    const auto n = static_cast<double>(scores.cols());
    truth.means.resize(static_cast<std::size_t>(scores.rows()));
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        // Column order, divide by n: the same arithmetic as ScoringState::row_mean on a full row.
        double sum = 0.0;
        for (Eigen::Index j = 0; j < scores.cols(); ++j) sum += scores(i, j);
        truth.means[static_cast<std::size_t>(i)] = sum / n;
    }
    truth.best_index = static_cast<MethodIndex>(
        std::distance(truth.means.begin(), std::max_element(truth.means.begin(), truth.means.end())));
    try {
        truth.h1 = hardness_h1(truth.means);
    } catch (const DegenerateError&) {
        truth.h1.reset();
    }
    return truth;
}

double hardness_h1(std::span<const double> means) {
    if (means.empty()) throw DegenerateError("no methods");
    double best = *std::max_element(means.begin(), means.end());
    double h1 = 0.0;
    bool any = false;
    for (double mu : means) {
        if (mu == best) continue;
        double gap = mu - best;
        h1 += 1.0 / (gap * gap);
        any = true;
    }
    if (!any) throw DegenerateError("every method ties with the best; H1 is undefined");
    return h1;
}

double hardness_h1(const GroundTruth& truth) { return hardness_h1(truth.means); }

int precision_gap(const GroundTruth& truth, MethodIndex predicted, double epsilon) {
    if (predicted >= truth.methods()) throw IndexError("predicted method out of range");
    if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be non-negative");
    return truth.means[predicted] >= truth.best_mean() - epsilon ? 1 : 0;
}

McNemarCounts mcnemar_counts(const GroundTruth& truth, MethodIndex i, MethodIndex j) {
    if (i >= truth.methods() || j >= truth.methods()) throw IndexError("method out of range");
    McNemarCounts counts;
    const auto& s = truth.scores;
    for (Eigen::Index k = 0; k < s.cols(); ++k) {
        double a = s(static_cast<Eigen::Index>(i), k);
        double b = s(static_cast<Eigen::Index>(j), k);
        if (a > b) ++counts.wins_first;
        else if (b > a) ++counts.wins_second;
    }
    return counts;
}

double chi_squared_1_sf(double statistic) {
    if (statistic <= 0.0) return 1.0;
    return std::erfc(std::sqrt(statistic / 2.0));
}

double mcnemar_p_from_counts(std::size_t wins_first, std::size_t wins_second, McNemarForm form) {
    const std::size_t discordant = wins_first + wins_second;
    if (discordant == 0) return 1.0;
    if (form == McNemarForm::exact_binomial) {
        const double d = static_cast<double>(discordant);
        const std::size_t low = std::min(wins_first, wins_second);
        double tail = 0.0;
        for (std::size_t x = 0; x <= low; ++x) {
            const double xd = static_cast<double>(x);
            tail += std::exp(std::lgamma(d + 1.0) - std::lgamma(xd + 1.0) - std::lgamma(d - xd + 1.0) - d * std::log(2.0));
        }
        return std::clamp(2.0 * tail, 0.0, 1.0);
    }
    double diff = std::abs(static_cast<double>(wins_first) - static_cast<double>(wins_second)) - 1.0;
    double statistic = diff * diff / static_cast<double>(discordant);
    return std::clamp(chi_squared_1_sf(statistic), 0.0, 1.0);
}

double mcnemar_p(const GroundTruth& truth, MethodIndex i, MethodIndex j, McNemarForm form) {
    auto counts = mcnemar_counts(truth, i, j);
    return mcnemar_p_from_counts(counts.wins_first, counts.wins_second, form);
}

int precision_significance(const GroundTruth& truth, MethodIndex predicted, double p_level, McNemarForm form) {
    if (predicted >= truth.methods()) throw IndexError("predicted method out of range");
    if (!(p_level > 0.0 && p_level < 1.0)) throw ConfigError("significance level must be in (0, 1)");
    if (predicted == truth.best_index || truth.means[predicted] == truth.best_mean()) return 1;
    return mcnemar_p(truth, predicted, truth.best_index, form) > p_level ? 1 : 0;
}

double ndcg_at_k(const GroundTruth& truth, std::span<const MethodIndex> predicted_ranking, std::size_t k,
                 NdcgGain gain) {
    auto g = [gain](double mu) { return gain == NdcgGain::mean ? mu : std::exp2(mu) - 1.0; };
    if (k == 0) throw ConfigError("k must be positive");
    if (k > truth.methods()) throw ConfigError("k exceeds the number of methods");
    if (predicted_ranking.size() < k) throw ConfigError("ranking shorter than k");
    std::vector<std::uint8_t> seen(truth.methods(), 0);
    double dcg = 0.0;
    for (std::size_t p = 0; p < k; ++p) {
        MethodIndex i = predicted_ranking[p];
        if (i >= truth.methods()) throw ConfigError("ranking index " + std::to_string(i) + " out of range");
        if (seen[i]) throw ConfigError("duplicate method " + std::to_string(i) + " in top-k ranking");
        seen[i] = 1;
        dcg += g(truth.means[i]) / std::log2(static_cast<double>(p) + 2.0);
    }
    std::vector<double> ideal = truth.means;
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    double idcg = 0.0;
    for (std::size_t p = 0; p < k; ++p) idcg += g(ideal[p]) / std::log2(static_cast<double>(p) + 2.0);
    if (idcg == 0.0) return 1.0;
    return std::clamp(dcg / idcg, 0.0, 1.0);
}

McNemarForm parse_mcnemar_form(std::string_view name) {
    if (name == "corrected") return McNemarForm::continuity_corrected;
    if (name == "exact") return McNemarForm::exact_binomial;
    throw ConfigError("unknown McNemar form '" + std::string(name) + "' (expected corrected or exact)");
}

NdcgGain parse_ndcg_gain(std::string_view name) {
    if (name == "mean") return NdcgGain::mean;
    if (name == "exponential") return NdcgGain::exponential;
    throw ConfigError("unknown NDCG gain '" + std::string(name) + "' (expected mean or exponential)");
}

const char* to_string(McNemarForm form) { return form == McNemarForm::exact_binomial ? "exact" : "corrected"; }

const char* to_string(NdcgGain gain) { return gain == NdcgGain::exponential ? "exponential" : "mean"; }

}  // namespace bestarm
