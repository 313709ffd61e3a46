#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bestarm/errors.hpp"
#include "bestarm/rng.hpp"

namespace bestarm {

/// Zero-based row index into the method set (size m).
using MethodIndex = std::size_t;
/// Zero-based column index into the example set (size n).
using ExampleIndex = std::size_t;

struct PairIndex {
    MethodIndex method = 0;
    ExampleIndex example = 0;

    friend bool operator==(const PairIndex&, const PairIndex&) = default;
};

/**
 * The partially observed scoring matrix together with its observation mask.
 *
 * A cell holds a score iff its mask bit is set, every held score is in [0, 1],
 * and evaluations_used() equals the number of set mask bits. record() is the
 * only mutator.
 */
class ScoringState {
public:
    ScoringState(std::size_t methods, std::size_t examples);

    std::size_t methods() const { return methods_; }
    std::size_t examples() const { return examples_; }
    std::size_t evaluations_used() const { return evaluations_used_; }
    std::size_t capacity() const { return methods_ * examples_; }

    bool is_observed(MethodIndex i, ExampleIndex j) const;
    std::optional<double> score(MethodIndex i, ExampleIndex j) const;

    /// Observed score, or 0 where the cell is unobserved (O ⊙ S_obs).
    double gated_score(MethodIndex i, ExampleIndex j) const { return values_[offset(i, j)]; }

    std::size_t row_count(MethodIndex i) const { return row_counts_[i]; }
    std::size_t column_count(ExampleIndex j) const { return column_counts_[j]; }
    bool row_complete(MethodIndex i) const { return row_counts_[i] == examples_; }
    bool complete() const { return evaluations_used_ == capacity(); }

    /// Mean of the observed scores in row i. Throws EmptyRowError on an empty row.
    double row_mean(MethodIndex i) const;

    /// Unobserved columns of row i in ascending order.
    std::vector<ExampleIndex> unobserved_in_row(MethodIndex i) const;

    void record(MethodIndex i, ExampleIndex j, double score);

    std::span<const double> values() const { return values_; }
    std::span<const std::uint8_t> mask() const { return mask_; }

private:
    std::size_t offset(MethodIndex i, ExampleIndex j) const { return i * examples_ + j; }
    void check_index(MethodIndex i, ExampleIndex j) const;

    std::size_t methods_;
    std::size_t examples_;
    std::vector<double> values_;
    std::vector<std::uint8_t> mask_;
    std::vector<std::size_t> row_counts_;
    std::vector<std::size_t> column_counts_;
    std::size_t evaluations_used_ = 0;
};

struct AlsSettings {
    std::size_t max_iterations = 50;
    double tolerance = 1e-6;
    double ridge = 1e-6;
};

/// Hyperparameters shared by every selection algorithm.
struct AlgorithmConfig {
    std::size_t budget_total = 1;
    double exploration_a = 1.0;
    std::size_t rank = 1;
    std::size_t ensemble_size = 64;
    /// Warm-up budget T0; when unset, ceil(warmup_fraction * m * n).
    std::optional<std::size_t> warmup_budget;
    double warmup_fraction = 0.05;
    double uncertainty_scale = 5.0;
    std::size_t batch_size = 32;
    double dropout_fraction = 0.1;
    AlsSettings als;
    /// Threads used for ensemble member fits inside one refit.
    std::size_t workers = 1;

    std::size_t resolved_warmup(std::size_t methods, std::size_t examples) const;
    /// Batch actually used: min(batch_size, budget_total).
    std::size_t effective_batch() const;

    /// Checks the invariants common to all algorithms; `needs_warmup` adds T0 < T.
    void validate(std::size_t methods, std::size_t examples, bool needs_warmup) const;
};

struct Prediction {
    MethodIndex best_index = 0;
    std::vector<double> estimated_means;
    /// Size of the tied set best_index was drawn from (1 when unique).
    std::size_t tied_candidates = 1;
    std::vector<std::string> warnings;
};

/**
 * Index of the maximum among `eligible` entries, with exact ties broken by a
 * uniform draw from `stream`. +infinity ties only with itself.
 *
 * Throws ExhaustedError when nothing is eligible.
 */
std::size_t argmax_with_ties(std::span<const double> values, std::span<const std::uint8_t> eligible,
                             RandomStream& stream, std::size_t* tied_count = nullptr);

std::size_t argmax_with_ties(std::span<const double> values, RandomStream& stream,
                             std::size_t* tied_count = nullptr);

/// Fisher-Yates shuffle performed one draw at a time over a fixed pool.
class IncrementalShuffle {
public:
    explicit IncrementalShuffle(std::vector<std::size_t> pool) : pool_(std::move(pool)) {}

    std::size_t remaining() const { return pool_.size() - cursor_; }
    bool empty() const { return remaining() == 0; }

    /// Uniform draw among the items not yet returned.
    std::size_t next(RandomStream& stream);

private:
    std::vector<std::size_t> pool_;
    std::size_t cursor_ = 0;
};

/// Draws the first k items of a Fisher-Yates shuffle of `pool` (in place).
/// The first k' < k draws are identical to a draw of k' items from the same stream.
std::vector<std::size_t> draw_without_replacement(std::vector<std::size_t>& pool, std::size_t k,
                                                  RandomStream& stream);

/// Descending ranking of `means`; ties keep ascending index order and NaN entries go last.
std::vector<MethodIndex> ranking_from_means(std::span<const double> means);

/// Number of pair evaluations for a budget fraction of m*n (floor, minimum 1).
std::size_t budget_from_fraction(double fraction, std::size_t methods, std::size_t examples);

}  // namespace bestarm
