#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bestarm/algorithms.hpp"
#include "bestarm/core.hpp"
#include "bestarm/metrics.hpp"
#include "bestarm/oracle.hpp"

namespace bestarm {

struct MetricSettings {
    std::vector<double> epsilons{0.001, 0.01};
    std::vector<double> p_levels{0.01, 0.1};
    std::size_t ndcg_k = 10;
    McNemarForm mcnemar = McNemarForm::continuity_corrected;
    NdcgGain ndcg_gain = NdcgGain::mean;
};

/// Where the experiment's score matrix comes from. Experiments need the full matrix for ground truth.
struct OracleSource {
    enum class Kind { file, synthetic } kind = Kind::synthetic;
    std::filesystem::path path;
    std::size_t methods = 0;
    std::size_t examples = 0;
    std::vector<double> means;
    NoiseModel noise{NoiseKind::bernoulli, 0.0};
    /// Rank-one column profile spread; 0 gives identical columns in expectation.
    double profile_spread = 0.0;
    std::uint64_t seed = 0;
};

struct AlgorithmEntry {
    AlgorithmKind kind = AlgorithmKind::ucb_e;
    /// budget_total is overwritten with the largest checkpoint budget.
    AlgorithmConfig config;
};

struct ExperimentSpec {
    OracleSource oracle;
    std::vector<AlgorithmEntry> algorithms;
    /// Budget fractions of m*n, strictly increasing in (0, 1].
    std::vector<double> checkpoints = default_checkpoints();
    std::size_t trials = 50;
    std::uint64_t master_seed = 0;
    MetricSettings metrics;
    std::filesystem::path output_csv;
    std::filesystem::path output_json;
    std::size_t workers = 1;
    /// Wall times make reports machine dependent, so they are written only on request.
    bool record_timing = false;

    static std::vector<double> default_checkpoints();
    void validate() const;
};

ExperimentSpec parse_experiment_spec(const nlohmann::json& doc);
ExperimentSpec load_experiment_spec(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentSpec& spec);

struct MetricColumn {
    std::string name;  // precision_gap, precision_significance, ndcg
    double param = 0.0;
};

struct CheckpointRecord {
    double fraction = 0.0;
    std::size_t evaluations_used = 0;
    MethodIndex best_index = 0;
    std::vector<double> estimated_means;
    std::vector<double> metric_values;  // parallel to ExperimentReport::metrics
    double wall_time_s = 0.0;
};

struct TrialResult {
    std::string algorithm;
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    std::vector<CheckpointRecord> checkpoints;
    double wall_time_s = 0.0;
};

struct AggregateRow {
    std::string algorithm;
    double checkpoint_fraction = 0.0;
    std::string metric_name;
    double metric_param = 0.0;
    double mean_value = 0.0;
    std::size_t trial_count = 0;
    double stderr_value = 0.0;
};

struct ExperimentReport {
    std::string status = "complete";  // complete | failed | interrupted | running
    std::string error;
    std::size_t methods = 0;
    std::size_t examples = 0;
    std::vector<double> checkpoints;
    std::vector<MetricColumn> metrics;
    std::vector<TrialResult> trials;
    std::vector<AggregateRow> aggregate;
    nlohmann::json spec;
    bool include_timing = false;
};

/// Materializes the oracle described by `source`.
MatrixOracle materialize_oracle(const OracleSource& source);

/// Per-trial seed derived from (master seed, algorithm name, trial index).
std::uint64_t trial_seed(std::uint64_t master_seed, AlgorithmKind kind, std::size_t trial);

/// Metric values of one prediction, in the order of `metric_columns(settings)`.
class MetricEvaluator {
public:
    MetricEvaluator(const GroundTruth& truth, const MetricSettings& settings);

    const std::vector<MetricColumn>& columns() const { return columns_; }
    std::vector<double> evaluate(const Prediction& prediction) const;

private:
    const GroundTruth& truth_;
    MetricSettings settings_;
    std::vector<MetricColumn> columns_;
    std::vector<double> p_vs_best_;
};

/**
 * Runs every algorithm for every trial once at the largest checkpoint budget
 * and scores the prediction from each checkpoint's prefix state.
 *
 * Failures and interruption leave a report whose status says so; trials that
 * finished are kept.
 */
ExperimentReport run_experiment(const ExperimentSpec& spec, const ScoreOracle& oracle, const GroundTruth& truth);

/// Loads the oracle, runs, and writes the configured output files (a "running" JSON marker first).
ExperimentReport run_experiment(const ExperimentSpec& spec);

/// Recomputes aggregate rows from trials; order is algorithms x checkpoints x metrics.
std::vector<AggregateRow> aggregate_trials(const ExperimentReport& report, const std::vector<std::string>& algorithms);

enum class ReportFormat { csv, json };

void write_report(const ExperimentReport& report, const std::filesystem::path& path, ReportFormat format);
std::string format_report_csv(const ExperimentReport& report);
nlohmann::json report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const nlohmann::json& doc);
ExperimentReport read_report_json(const std::filesystem::path& path);

/// Asks running experiments to stop before starting further trials.
void request_stop();
void clear_stop();
bool stop_requested();

}  // namespace bestarm
