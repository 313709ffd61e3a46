#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bestarm/core.hpp"

namespace bestarm {

enum class BackendKind { matrix, file, remote };

const char* to_string(BackendKind kind);

/**
 * Source of per-pair scores s(f_i(x_j)).
 *
 * Implementations represent one fixed underlying matrix: repeated queries of
 * the same pair return the identical value, and every value lies in [0, 1].
 */
class ScoreOracle {
public:
    virtual ~ScoreOracle() = default;

    virtual BackendKind kind() const = 0;
    virtual std::size_t methods() const = 0;
    virtual std::size_t examples() const = 0;

    virtual double query(MethodIndex i, ExampleIndex j) const = 0;

    /// Scores for a batch of pairs, in order. Backends may serve these concurrently.
    virtual std::vector<double> query_batch(std::span<const PairIndex> pairs) const;

    const std::vector<std::string>& method_names() const { return method_names_; }
    const std::vector<std::string>& example_ids() const { return example_ids_; }

protected:
    void set_names(std::vector<std::string> methods, std::vector<std::string> examples);
    void check_index(MethodIndex i, ExampleIndex j) const;

private:
    std::vector<std::string> method_names_;
    std::vector<std::string> example_ids_;
};

/// In-memory oracle over a fully materialized score matrix.
class MatrixOracle final : public ScoreOracle {
public:
    /// Validates every cell into [0, 1]. Empty name lists get index-based defaults.
    explicit MatrixOracle(Eigen::MatrixXd scores, std::vector<std::string> method_names = {},
                          std::vector<std::string> example_ids = {}, BackendKind kind = BackendKind::matrix);

    BackendKind kind() const override { return kind_; }
    std::size_t methods() const override { return static_cast<std::size_t>(scores_.rows()); }
    std::size_t examples() const override { return static_cast<std::size_t>(scores_.cols()); }
    double query(MethodIndex i, ExampleIndex j) const override;

    const Eigen::MatrixXd& matrix() const { return scores_; }

private:
    Eigen::MatrixXd scores_;
    BackendKind kind_;
};

enum class MatrixFormat { csv, json };

/// csv for *.csv, json for *.json; throws ParseError otherwise.
MatrixFormat format_from_path(const std::filesystem::path& path);

/**
 * Reads a complete score matrix.
 *
 * CSV: header `method,<example ids...>`, then one row per method with its name
 * in the first column. JSON: {"methods": [...], "examples": [...], "scores": [[...]]}.
 */
MatrixOracle load_matrix(const std::filesystem::path& path, MatrixFormat format);
MatrixOracle load_matrix(const std::filesystem::path& path);

MatrixOracle parse_matrix_csv(const std::string& text, const std::string& source = "<memory>");
MatrixOracle parse_matrix_json(const std::string& text, const std::string& source = "<memory>");

/// Writes with shortest round-trip decimal formatting, so load(save(x)) == x bit for bit.
void save_matrix(const MatrixOracle& oracle, const std::filesystem::path& path, MatrixFormat format);
std::string format_matrix_csv(const MatrixOracle& oracle);
std::string format_matrix_json(const MatrixOracle& oracle);

struct RemoteSettings {
    std::string url;  // e.g. http://host:port/score
    std::string run_id = "run";
    std::chrono::milliseconds timeout{10000};
    std::size_t retries = 3;
    std::chrono::milliseconds initial_backoff{100};
    std::size_t max_in_flight = 8;
};

/**
 * Oracle backed by an HTTP scoring endpoint.
 *
 * POST {"run_id", "method", "example"} to the configured URL and expects
 * {"score": x}. Transient failures are retried with exponential backoff; the
 * final failure raises TransportError. Responses are cached per pair, so a
 * pair is paid for at most once per oracle instance.
 */
class RemoteOracle final : public ScoreOracle {
public:
    RemoteOracle(RemoteSettings settings, std::size_t methods, std::size_t examples,
                 std::vector<std::string> method_names = {}, std::vector<std::string> example_ids = {});

    BackendKind kind() const override { return BackendKind::remote; }
    std::size_t methods() const override { return methods_; }
    std::size_t examples() const override { return examples_; }
    double query(MethodIndex i, ExampleIndex j) const override;
    std::vector<double> query_batch(std::span<const PairIndex> pairs) const override;

    /// Number of HTTP requests issued so far, retries included.
    std::size_t requests_sent() const;

private:
    double fetch(MethodIndex i, ExampleIndex j) const;

    RemoteSettings settings_;
    std::string host_;
    std::string path_;
    std::size_t methods_;
    std::size_t examples_;
    mutable std::mutex mutex_;
    mutable std::map<std::pair<MethodIndex, ExampleIndex>, double> cache_;
    mutable std::size_t requests_ = 0;
};

enum class NoiseKind { none, bernoulli, gaussian };

struct NoiseModel {
    NoiseKind kind = NoiseKind::none;
    double sigma = 0.0;
};

struct PlantedInstance {
    MatrixOracle oracle;
    /// Realized row means of the generated matrix.
    std::vector<double> true_means;
    MethodIndex best_index = 0;
    /// Unset when every method ties exactly.
    std::optional<double> h1;
};

/**
 * Generates a full score matrix whose cell expectations are
 * clamp(means[i] * profile[j], 0, 1); profile defaults to all ones.
 *
 * bernoulli draws each cell in {0, 1}; gaussian adds N(0, sigma^2) and clamps;
 * none stores the expectation itself.
 */
PlantedInstance synth_planted(std::size_t methods, std::size_t examples, std::span<const double> means,
                              NoiseModel noise, RandomStream& stream, std::span<const double> column_profile = {});

/// Column multipliers with mean exactly 1, drawn uniformly in [1 - spread, 1 + spread].
std::vector<double> rank_one_profile(std::size_t examples, double spread, RandomStream& stream);

std::vector<double> linspace(double lo, double hi, std::size_t count);

}  // namespace bestarm
