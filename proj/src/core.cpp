#include "bestarm/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace bestarm {

ScoringState::ScoringState(std::size_t methods, std::size_t examples)
    : methods_(methods),
      examples_(examples),
      values_(methods * examples, 0.0),
      mask_(methods * examples, 0),
      row_counts_(methods, 0),
      column_counts_(examples, 0) {
    if (methods == 0 || examples == 0) throw ConfigError("scoring state needs at least one method and one example");
}

void ScoringState::check_index(MethodIndex i, ExampleIndex j) const {
    if (i >= methods_ || j >= examples_) {
        std::ostringstream os;
        os << "pair (" << i << ", " << j << ") outside " << methods_ << "x" << examples_;
        throw IndexError(os.str());
    }
}

bool ScoringState::is_observed(MethodIndex i, ExampleIndex j) const {
    check_index(i, j);
    return mask_[offset(i, j)] != 0;
}

std::optional<double> ScoringState::score(MethodIndex i, ExampleIndex j) const {
    if (!is_observed(i, j)) return std::nullopt;
    return values_[offset(i, j)];
}

double ScoringState::row_mean(MethodIndex i) const {
    if (i >= methods_) throw IndexError("method index out of range");
    if (row_counts_[i] == 0) throw EmptyRowError("row " + std::to_string(i) + " has no observations");
    // Summed in column order so a complete row reproduces the full-matrix mean bit for bit.
    double sum = 0.0;
    const double* row = values_.data() + i * examples_;
    for (std::size_t j = 0; j < examples_; ++j) sum += row[j];
    return sum / static_cast<double>(row_counts_[i]);
}

std::vector<ExampleIndex> ScoringState::unobserved_in_row(MethodIndex i) const {
    std::vector<ExampleIndex> out;
    out.reserve(examples_ - row_counts_[i]);
    const std::uint8_t* row = mask_.data() + i * examples_;
    for (std::size_t j = 0; j < examples_; ++j)
        if (!row[j]) out.push_back(j);
    return out;
}

void ScoringState::record(MethodIndex i, ExampleIndex j, double score) {
    check_index(i, j);
    if (!(score >= 0.0 && score <= 1.0)) {
        std::ostringstream os;
        os << "score " << score << " for pair (" << i << ", " << j << ") outside [0, 1]";
        throw RangeError(os.str());
    }
    auto k = offset(i, j);
    if (mask_[k]) {
        throw DuplicateObservationError("pair (" + std::to_string(i) + ", " + std::to_string(j) +
                                        ") already observed");
    }
    mask_[k] = 1;
    values_[k] = score;
    ++row_counts_[i];
    ++column_counts_[j];
    ++evaluations_used_;
}

std::size_t AlgorithmConfig::resolved_warmup(std::size_t methods, std::size_t examples) const {
    if (warmup_budget) return *warmup_budget;
    // Small epsilon keeps exact products such as 0.05 * 200 from rounding up past the integer.
    double raw = warmup_fraction * static_cast<double>(methods) * static_cast<double>(examples);
    return static_cast<std::size_t>(std::ceil(raw - 1e-9));
}

std::size_t AlgorithmConfig::effective_batch() const { return std::min(batch_size, budget_total); }

void AlgorithmConfig::validate(std::size_t methods, std::size_t examples, bool needs_warmup) const {
    const std::size_t cells = methods * examples;
    if (budget_total == 0) throw ConfigError("budget must be positive");
    if (budget_total > cells) {
        throw ConfigError("budget " + std::to_string(budget_total) + " exceeds m*n = " + std::to_string(cells));
    }
    if (!(exploration_a >= 0.0)) throw ConfigError("exploration parameter a must be non-negative");
    if (batch_size == 0) throw ConfigError("batch size must be positive");
    if (!(dropout_fraction >= 0.0 && dropout_fraction < 1.0)) throw ConfigError("dropout fraction must be in [0, 1)");
    if (!needs_warmup) return;
    if (rank == 0) throw ConfigError("rank must be positive");
    if (ensemble_size == 0) throw ConfigError("ensemble size must be positive");
    if (!(uncertainty_scale >= 0.0)) throw ConfigError("uncertainty scale must be non-negative");
    if (als.max_iterations == 0) throw ConfigError("ALS needs at least one iteration");
    if (!(als.ridge >= 0.0)) throw ConfigError("ridge strength must be non-negative");
    const std::size_t warmup = resolved_warmup(methods, examples);
    if (warmup == 0) throw ConfigError("warm-up budget must be positive");
    if (warmup >= budget_total) {
        throw ConfigError("warm-up budget " + std::to_string(warmup) + " must be smaller than budget " +
                          std::to_string(budget_total));
    }
}

std::size_t argmax_with_ties(std::span<const double> values, std::span<const std::uint8_t> eligible,
                             RandomStream& stream, std::size_t* tied_count) {
    std::vector<std::size_t> best;
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (!eligible.empty() && !eligible[k]) continue;
        double v = values[k];
        if (best.empty() || v > top) {
            top = v;
            best.assign(1, k);
        } else if (v == top) {
            best.push_back(k);
        }
    }
    if (best.empty()) throw ExhaustedError("no eligible candidate for argmax");
    if (tied_count) *tied_count = best.size();
    if (best.size() == 1) return best.front();
    return best[stream.uniform_index(best.size())];
}

std::size_t argmax_with_ties(std::span<const double> values, RandomStream& stream, std::size_t* tied_count) {
    return argmax_with_ties(values, std::span<const std::uint8_t>{}, stream, tied_count);
}

std::size_t IncrementalShuffle::next(RandomStream& stream) {
    if (empty()) throw ExhaustedError("shuffle pool exhausted");
    std::size_t pick = cursor_ + stream.uniform_index(pool_.size() - cursor_);
    std::swap(pool_[cursor_], pool_[pick]);
    return pool_[cursor_++];
}

std::vector<std::size_t> draw_without_replacement(std::vector<std::size_t>& pool, std::size_t k,
                                                  RandomStream& stream) {
    k = std::min(k, pool.size());
    std::vector<std::size_t> out;
    out.reserve(k);
    for (std::size_t step = 0; step < k; ++step) {
        std::size_t pick = step + stream.uniform_index(pool.size() - step);
        std::swap(pool[step], pool[pick]);
        out.push_back(pool[step]);
    }
    return out;
}

std::vector<MethodIndex> ranking_from_means(std::span<const double> means) {
    std::vector<MethodIndex> order(means.size());
    std::iota(order.begin(), order.end(), MethodIndex{0});
    auto key = [&](MethodIndex k) {
        return std::isnan(means[k]) ? -std::numeric_limits<double>::infinity() : means[k];
    };
    std::stable_sort(order.begin(), order.end(), [&](MethodIndex a, MethodIndex b) { return key(a) > key(b); });
    return order;
}

std::size_t budget_from_fraction(double fraction, std::size_t methods, std::size_t examples) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("budget fraction must be in (0, 1]");
    double raw = fraction * static_cast<double>(methods) * static_cast<double>(examples);
    auto count = static_cast<std::size_t>(std::floor(raw + 1e-9));
    return std::max<std::size_t>(1, std::min(count, methods * examples));
}

}  // namespace bestarm
