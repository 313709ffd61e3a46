// Command-line front end for the best-method identification library.

#include <charconv>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <json.hpp>

#include "bestarm/algorithms.hpp"
#include "bestarm/errors.hpp"
#include "bestarm/harness.hpp"
#include "bestarm/metrics.hpp"
#include "bestarm/oracle.hpp"
#include "bestarm/parallel.hpp"

using namespace bestarm;
using nlohmann::json;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

struct Dims {
    std::size_t methods = 0;
    std::size_t examples = 0;
};

Dims parse_dims(const std::string& text) {
    auto x = text.find_first_of("xX");
    Dims d;
    auto parse = [&](std::string_view part, std::size_t& out) {
        auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
        if (ec != std::errc{} || ptr != part.data() + part.size() || out == 0) {
            throw ConfigError("--dims expects MxN with positive integers, got '" + text + "'");
        }
    };
    if (x == std::string::npos) throw ConfigError("--dims expects MxN, got '" + text + "'");
    std::string_view view(text);
    parse(view.substr(0, x), d.methods);
    parse(view.substr(x + 1), d.examples);
    return d;
}

struct HyperFlags {
    double a = 1.0;
    std::size_t rank = 1;
    std::size_t ensemble = 64;
    double warmup_frac = 0.05;
    double eta = 5.0;
    std::size_t batch = 32;
    double dropout = 0.1;

    void attach(CLI::App* cmd) {
        cmd->add_option("--a", a, "UCB-E exploration parameter")->capture_default_str();
        cmd->add_option("--rank", rank, "factorization rank r")->capture_default_str()->check(CLI::PositiveNumber);
        cmd->add_option("--ensemble", ensemble, "ensemble size C")->capture_default_str()->check(CLI::PositiveNumber);
        cmd->add_option("--warmup-frac", warmup_frac, "uniform warm-up budget as a fraction of m*n")
            ->capture_default_str()
            ->check(CLI::Range(0.0, 1.0));
        cmd->add_option("--eta", eta, "uncertainty scaling eta")->capture_default_str();
        cmd->add_option("--batch", batch, "batch size b")->capture_default_str()->check(CLI::PositiveNumber);
        cmd->add_option("--dropout", dropout, "fraction of observations hidden per ensemble member")
            ->capture_default_str()
            ->check(CLI::Range(0.0, 1.0));
    }

    AlgorithmConfig config() const {
        AlgorithmConfig c;
        c.exploration_a = a;
        c.rank = rank;
        c.ensemble_size = ensemble;
        c.warmup_fraction = warmup_frac;
        c.uncertainty_scale = eta;
        c.batch_size = batch;
        c.dropout_fraction = dropout;
        return c;
    }
};

std::vector<double> parse_number_list(const std::string& text, const char* flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc{} || ptr != item.data() + item.size()) {
            throw ConfigError(std::string(flag) + " expects comma-separated numbers, got '" + text + "'");
        }
        out.push_back(v);
    }
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// run

struct RunFlags {
    std::string matrix;
    std::string remote;
    std::string dims;
    std::string run_id = "run";
    std::string algo;
    double budget_frac = 1.0;
    std::uint64_t seed = 0;
    std::size_t workers = 0;
    std::string out;
    HyperFlags hyper;
};

void attach_run(CLI::App* cmd, RunFlags& f) {
    auto* matrix = cmd->add_option("--matrix", f.matrix, "score matrix file (.csv or .json)");
    auto* remote = cmd->add_option("--remote", f.remote, "scoring endpoint URL");
    matrix->excludes(remote);
    cmd->add_option("--dims", f.dims, "matrix shape MxN for --remote")->needs(remote);
    cmd->add_option("--run-id", f.run_id, "run id sent to the remote endpoint")->capture_default_str();
    cmd->add_option("--algo", f.algo, "ucb-e, ucb-e-lrf, ucb-e-lrf-score-only, lrf, row-mean or filled-subset")
        ->required();
    cmd->add_option("--budget-frac", f.budget_frac, "budget as a fraction of m*n, in (0, 1]")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--seed", f.seed, "random seed")->capture_default_str();
    cmd->add_option("--workers", f.workers, "threads for ensemble fits (default: BESTARM_WORKERS or 1)");
    cmd->add_option("--out", f.out, "write the trajectory as JSON to this path");
    f.hyper.attach(cmd);
}

json trajectory_json(const RunFlags& f, const ScoreOracle& oracle, const AlgorithmConfig& config,
                     const RunResult& result) {
    json doc;
    doc["algorithm"] = f.algo;
    doc["seed"] = f.seed;
    doc["methods"] = oracle.methods();
    doc["examples"] = oracle.examples();
    doc["budget"] = config.budget_total;
    doc["warmup_pairs"] = result.warmup_pairs;
    doc["batch_sizes"] = result.batch_sizes;
    doc["selection_refits"] = result.selection_refits;
    json pairs = json::array();
    for (const auto& p : result.pairs) pairs.push_back({p.method, p.example, p.score});
    doc["pairs"] = std::move(pairs);
    json checkpoints = json::array();
    for (const auto& c : result.checkpoints) {
        json means = json::array();
        for (double v : c.estimated_means) means.push_back(std::isfinite(v) ? json(v) : json(nullptr));
        checkpoints.push_back({{"evaluations_used", c.evaluations_used}, {"best_index", c.best_index}, {"estimated_means", means}});
    }
    doc["checkpoints"] = std::move(checkpoints);
    json means = json::array();
    for (double v : result.prediction.estimated_means) means.push_back(std::isfinite(v) ? json(v) : json(nullptr));
    doc["prediction"] = {{"best_index", result.prediction.best_index},
                         {"best_method", oracle.method_names()[result.prediction.best_index]},
                         {"estimated_means", means},
                         {"tied_candidates", result.prediction.tied_candidates},
                         {"warnings", result.prediction.warnings}};
    return doc;
}

int cmd_run(const RunFlags& f) {
    if (f.matrix.empty() && f.remote.empty()) throw ConfigError("run needs --matrix or --remote");
    if (!(f.budget_frac > 0.0)) throw ConfigError("--budget-frac must lie in (0, 1]");
    const AlgorithmKind kind = parse_algorithm(f.algo);

    std::unique_ptr<ScoreOracle> oracle;
    if (!f.matrix.empty()) {
        oracle = std::make_unique<MatrixOracle>(load_matrix(f.matrix));
    } else {
        if (f.dims.empty()) throw ConfigError("--remote needs --dims MxN");
        Dims d = parse_dims(f.dims);
        RemoteSettings settings;
        settings.url = f.remote;
        settings.run_id = f.run_id;
        oracle = std::make_unique<RemoteOracle>(settings, d.methods, d.examples);
    }

    AlgorithmConfig config = f.hyper.config();
    config.budget_total = budget_from_fraction(f.budget_frac, oracle->methods(), oracle->examples());
    config.workers = f.workers > 0 ? f.workers : default_workers(1);
    config.validate(oracle->methods(), oracle->examples(), uses_factorization(kind));

    RunResult result = run_algorithm(kind, *oracle, config, f.seed);
    const auto& pred = result.prediction;
    std::cout << "algorithm: " << f.algo << "\n";
    std::cout << "evaluations: " << result.pairs.size() << " of " << oracle->methods() * oracle->examples() << "\n";
    std::cout << "best: " << oracle->method_names()[pred.best_index] << " (index " << pred.best_index << ")\n";
    std::cout << "estimated means:\n";
    for (std::size_t i = 0; i < pred.estimated_means.size(); ++i) {
        std::cout << "  " << i << " " << oracle->method_names()[i] << " " << num(pred.estimated_means[i]) << "\n";
    }
    for (const auto& w : pred.warnings) std::cerr << "warning: " << w << "\n";
    if (!f.out.empty()) write_text(f.out, trajectory_json(f, *oracle, config, result).dump(1) + "\n");
    return 0;
}

// ---------------------------------------------------------------------------
// experiment

struct ExperimentFlags {
    std::string spec;
    std::string matrix;
    std::size_t synth_methods = 0;
    std::size_t synth_examples = 0;
    std::string means;
    std::string means_linspace;
    std::string noise = "bernoulli";
    double sigma = 0.0;
    double profile_spread = 0.0;
    std::uint64_t instance_seed = 0;
    std::vector<std::string> algos;
    std::string checkpoints;
    std::size_t trials = 50;
    std::uint64_t seed = 0;
    std::string epsilons;
    std::string p_levels;
    std::size_t ndcg_k = 10;
    std::string mcnemar;
    std::string ndcg_gain;
    std::string csv;
    std::string json_out;
    std::size_t workers = 0;
    bool timing = false;
    HyperFlags hyper;
};

void attach_experiment(CLI::App* cmd, ExperimentFlags& f) {
    cmd->add_option("--spec", f.spec, "experiment spec JSON; other flags override its fields when given");
    cmd->add_option("--matrix", f.matrix, "score matrix file used as the ground-truth oracle");
    cmd->add_option("--synth-methods", f.synth_methods, "synthetic instance: number of methods");
    cmd->add_option("--synth-examples", f.synth_examples, "synthetic instance: number of examples");
    cmd->add_option("--means", f.means, "synthetic instance: comma-separated method means");
    cmd->add_option("--means-linspace", f.means_linspace, "synthetic instance: lo,hi spread over the methods");
    cmd->add_option("--noise", f.noise, "synthetic instance: none, bernoulli or gaussian")->capture_default_str();
    cmd->add_option("--sigma", f.sigma, "gaussian noise standard deviation")->capture_default_str();
    cmd->add_option("--profile-spread", f.profile_spread, "rank-one column profile spread")->capture_default_str();
    cmd->add_option("--instance-seed", f.instance_seed, "seed of the synthetic instance")->capture_default_str();
    cmd->add_option("--algo", f.algos, "algorithm to include (repeatable)");
    cmd->add_option("--checkpoints", f.checkpoints, "comma-separated budget fractions (default 0.05,0.10,...,1.0)");
    cmd->add_option("--trials", f.trials, "trials per algorithm")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--seed", f.seed, "master seed")->capture_default_str();
    cmd->add_option("--epsilons", f.epsilons, "gap-precision tolerances (default 0.001,0.01)");
    cmd->add_option("--p-levels", f.p_levels, "significance levels (default 0.01,0.1)");
    cmd->add_option("--ndcg-k", f.ndcg_k, "NDCG cutoff K")->capture_default_str();
    cmd->add_option("--mcnemar", f.mcnemar, "McNemar form: corrected or exact (default corrected)");
    cmd->add_option("--ndcg-gain", f.ndcg_gain, "NDCG gain: mean or exponential (default mean)");
    cmd->add_option("--csv", f.csv, "aggregate CSV output path");
    cmd->add_option("--json", f.json_out, "per-trial JSON output path");
    cmd->add_option("--workers", f.workers, "parallel trials (default: BESTARM_WORKERS or 1)");
    cmd->add_flag("--timing", f.timing, "record wall times in the JSON report");
    f.hyper.attach(cmd);
}

ExperimentSpec build_spec(const ExperimentFlags& f, const CLI::App& cmd) {
    ExperimentSpec spec;
    if (!f.spec.empty()) spec = load_experiment_spec(f.spec);
    auto given = [&](const char* name) { return cmd.count(name) > 0; };

    if (!f.matrix.empty()) {
        spec.oracle = OracleSource{};
        spec.oracle.kind = OracleSource::Kind::file;
        spec.oracle.path = f.matrix;
    } else if (given("--synth-methods") || given("--means") || given("--means-linspace")) {
        spec.oracle = OracleSource{};
        spec.oracle.kind = OracleSource::Kind::synthetic;
        spec.oracle.methods = f.synth_methods;
        spec.oracle.examples = f.synth_examples;
        if (!f.means.empty()) {
            spec.oracle.means = parse_number_list(f.means, "--means");
        } else if (!f.means_linspace.empty()) {
            auto range = parse_number_list(f.means_linspace, "--means-linspace");
            if (range.size() != 2) throw ConfigError("--means-linspace expects lo,hi");
            spec.oracle.means = linspace(range[0], range[1], f.synth_methods);
        }
        if (spec.oracle.methods == 0) spec.oracle.methods = spec.oracle.means.size();
        if (f.noise == "none") spec.oracle.noise.kind = NoiseKind::none;
        else if (f.noise == "bernoulli") spec.oracle.noise.kind = NoiseKind::bernoulli;
        else if (f.noise == "gaussian") spec.oracle.noise.kind = NoiseKind::gaussian;
        else throw ConfigError("--noise must be none, bernoulli or gaussian");
        spec.oracle.noise.sigma = f.sigma;
        spec.oracle.profile_spread = f.profile_spread;
        spec.oracle.seed = f.instance_seed;
        if (spec.oracle.examples == 0 || spec.oracle.methods == 0 || spec.oracle.means.size() != spec.oracle.methods) {
            throw ConfigError("synthetic instance needs --synth-examples and one mean per method");
        }
    } else if (f.spec.empty()) {
        throw ConfigError("experiment needs --spec, --matrix or a synthetic instance");
    }

    if (!f.algos.empty()) {
        spec.algorithms.clear();
        for (const auto& name : f.algos) spec.algorithms.push_back({parse_algorithm(name), f.hyper.config()});
    } else if (f.spec.empty()) {
        for (auto kind : kAllAlgorithms) spec.algorithms.push_back({kind, f.hyper.config()});
    }
    if (!f.checkpoints.empty()) spec.checkpoints = parse_number_list(f.checkpoints, "--checkpoints");
    if (f.spec.empty() || given("--trials")) spec.trials = f.trials;
    if (f.spec.empty() || given("--seed")) spec.master_seed = f.seed;
    if (!f.epsilons.empty()) spec.metrics.epsilons = parse_number_list(f.epsilons, "--epsilons");
    if (!f.p_levels.empty()) spec.metrics.p_levels = parse_number_list(f.p_levels, "--p-levels");
    if (given("--ndcg-k")) spec.metrics.ndcg_k = f.ndcg_k;
    if (!f.mcnemar.empty()) spec.metrics.mcnemar = parse_mcnemar_form(f.mcnemar);
    if (!f.ndcg_gain.empty()) spec.metrics.ndcg_gain = parse_ndcg_gain(f.ndcg_gain);
    if (!f.csv.empty()) spec.output_csv = f.csv;
    if (!f.json_out.empty()) spec.output_json = f.json_out;
    if (f.workers > 0) spec.workers = f.workers;
    else if (f.spec.empty()) spec.workers = default_workers(1);
    if (f.timing) spec.record_timing = true;
    spec.validate();
    return spec;
}

extern "C" void on_interrupt(int) { request_stop(); }

int cmd_experiment(const ExperimentFlags& f, const CLI::App& cmd) {
    ExperimentSpec spec = build_spec(f, cmd);
    std::signal(SIGINT, on_interrupt);
    ExperimentReport report = run_experiment(spec);
    std::signal(SIGINT, SIG_DFL);

    if (spec.output_csv.empty()) std::cout << format_report_csv(report);
    if (report.status != "complete") {
        std::cerr << "error: experiment " << report.status << ": " << report.error << "\n";
        return kExitRuntime;
    }
    std::cerr << "completed " << report.trials.size() << " trials\n";
    return 0;
}

// ---------------------------------------------------------------------------
// metrics

struct MetricsFlags {
    std::string matrix;
    std::vector<std::size_t> predictions;
    std::string ranking;
    std::string epsilons = "0.001,0.01";
    std::string p_levels = "0.01,0.1";
    std::size_t ndcg_k = 10;
    std::string mcnemar = "corrected";
    std::string ndcg_gain = "mean";
};

void attach_metrics(CLI::App* cmd, MetricsFlags& f) {
    cmd->add_option("--matrix", f.matrix, "full score matrix (ground truth)")->required();
    cmd->add_option("--predict", f.predictions, "predicted best method index (repeatable)");
    cmd->add_option("--ranking", f.ranking, "comma-separated predicted ranking of method indices, for NDCG");
    cmd->add_option("--epsilons", f.epsilons, "gap-precision tolerances")->capture_default_str();
    cmd->add_option("--p-levels", f.p_levels, "significance levels")->capture_default_str();
    cmd->add_option("--ndcg-k", f.ndcg_k, "NDCG cutoff K (clipped to m)")->capture_default_str();
    cmd->add_option("--mcnemar", f.mcnemar, "McNemar form: corrected or exact")->capture_default_str();
    cmd->add_option("--ndcg-gain", f.ndcg_gain, "NDCG gain: mean or exponential")->capture_default_str();
}

int cmd_metrics(const MetricsFlags& f) {
    MatrixOracle oracle = load_matrix(f.matrix);
    GroundTruth truth = GroundTruth::from_matrix(oracle.matrix());
    auto epsilons = parse_number_list(f.epsilons, "--epsilons");
    auto p_levels = parse_number_list(f.p_levels, "--p-levels");
    const auto form = parse_mcnemar_form(f.mcnemar);
    const auto gain = parse_ndcg_gain(f.ndcg_gain);
    const std::size_t m = truth.methods();

    std::cout << "best: " << oracle.method_names()[truth.best_index] << " (index " << truth.best_index
              << ", mean " << num(truth.best_mean()) << ")\n";
    if (truth.h1) std::cout << "H1: " << num(*truth.h1) << "\n";
    else std::cout << "H1: undefined (all methods tie)\n";

    for (std::size_t pred : f.predictions) {
        if (pred >= m) throw ConfigError("--predict index " + std::to_string(pred) + " out of range");
        std::cout << "prediction " << pred << " (" << oracle.method_names()[pred] << "):\n";
        for (double e : epsilons)
            std::cout << "  precision_gap eps=" << num(e) << ": " << precision_gap(truth, pred, e) << "\n";
        for (double p : p_levels)
            std::cout << "  precision_significance p=" << num(p) << ": " << precision_significance(truth, pred, p, form)
                      << "\n";
        if (pred != truth.best_index)
            std::cout << "  mcnemar_p vs best: " << num(mcnemar_p(truth, pred, truth.best_index, form)) << "\n";
    }
    if (!f.ranking.empty()) {
        std::vector<MethodIndex> ranking;
        for (double v : parse_number_list(f.ranking, "--ranking")) {
            if (v < 0 || v != std::floor(v) || v >= static_cast<double>(m)) {
                throw ConfigError("--ranking entries must be method indices below " + std::to_string(m));
            }
            ranking.push_back(static_cast<MethodIndex>(v));
        }
        std::size_t k = std::min({f.ndcg_k, m, ranking.size()});
        std::cout << "ndcg@" << k << ": " << num(ndcg_at_k(truth, ranking, k, gain)) << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// synth

struct SynthFlags {
    std::size_t methods = 0;
    std::size_t examples = 0;
    std::string means;
    std::string means_linspace;
    std::string noise = "bernoulli";
    double sigma = 0.0;
    double profile_spread = 0.0;
    std::uint64_t seed = 0;
    std::string out;
};

void attach_synth(CLI::App* cmd, SynthFlags& f) {
    cmd->add_option("--methods", f.methods, "number of methods m");
    cmd->add_option("--examples", f.examples, "number of examples n")->required();
    auto* means = cmd->add_option("--means", f.means, "comma-separated method means");
    auto* lin = cmd->add_option("--means-linspace", f.means_linspace, "lo,hi spread evenly over --methods");
    means->excludes(lin);
    cmd->add_option("--noise", f.noise, "none, bernoulli or gaussian")->capture_default_str();
    cmd->add_option("--sigma", f.sigma, "gaussian noise standard deviation")->capture_default_str();
    cmd->add_option("--profile-spread", f.profile_spread, "rank-one column profile spread in [0, 1)")
        ->capture_default_str();
    cmd->add_option("--seed", f.seed, "random seed")->capture_default_str();
    cmd->add_option("--out", f.out, "output matrix path (.csv or .json); the sidecar goes to <out>.truth.json")
        ->required();
}

int cmd_synth(const SynthFlags& f) {
    std::vector<double> means;
    if (!f.means.empty()) {
        means = parse_number_list(f.means, "--means");
    } else if (!f.means_linspace.empty()) {
        auto range = parse_number_list(f.means_linspace, "--means-linspace");
        if (range.size() != 2) throw ConfigError("--means-linspace expects lo,hi");
        if (f.methods == 0) throw ConfigError("--means-linspace needs --methods");
        means = linspace(range[0], range[1], f.methods);
    } else {
        throw ConfigError("synth needs --means or --means-linspace");
    }
    if (f.methods != 0 && f.methods != means.size()) throw ConfigError("--methods does not match the number of means");
    NoiseModel noise;
    if (f.noise == "none") noise.kind = NoiseKind::none;
    else if (f.noise == "bernoulli") noise.kind = NoiseKind::bernoulli;
    else if (f.noise == "gaussian") noise.kind = NoiseKind::gaussian;
    else throw ConfigError("--noise must be none, bernoulli or gaussian");
    noise.sigma = f.sigma;

    auto stream = derive_rng(f.seed, "synthetic-instance");
    std::vector<double> profile;
    if (f.profile_spread > 0.0) profile = rank_one_profile(f.examples, f.profile_spread, stream);
    PlantedInstance inst = synth_planted(means.size(), f.examples, means, noise, stream, profile);

    std::filesystem::path out(f.out);
    save_matrix(inst.oracle, out, format_from_path(out));
    json truth;
    truth["methods"] = inst.oracle.method_names();
    truth["means"] = inst.true_means;
    truth["planted_means"] = means;
    truth["best_index"] = inst.best_index;
    truth["h1"] = inst.h1 ? json(*inst.h1) : json(nullptr);
    truth["seed"] = f.seed;
    std::filesystem::path sidecar = out;
    sidecar += ".truth.json";
    write_text(sidecar, truth.dump(1) + "\n");
    std::cout << "wrote " << out.string() << " (" << means.size() << "x" << f.examples << ") and " << sidecar.string()
              << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// inspect

struct InspectFlags {
    std::string matrix;
    std::size_t singular_values = 5;
};

void attach_inspect(CLI::App* cmd, InspectFlags& f) {
    cmd->add_option("--matrix", f.matrix, "full score matrix")->required();
    cmd->add_option("--singular-values", f.singular_values, "number of singular-value ratios to print")
        ->capture_default_str();
}

int cmd_inspect(const InspectFlags& f) {
    MatrixOracle oracle = load_matrix(f.matrix);
    GroundTruth truth = GroundTruth::from_matrix(oracle.matrix());
    auto [lo, hi] = std::minmax_element(truth.means.begin(), truth.means.end());
    std::cout << "methods: " << truth.methods() << "\n";
    std::cout << "examples: " << oracle.examples() << "\n";
    std::cout << "mean range: " << num(*lo) << " " << num(*hi) << "\n";
    std::cout << "best: " << oracle.method_names()[truth.best_index] << " (index " << truth.best_index << ")\n";
    if (truth.h1) std::cout << "H1: " << num(*truth.h1) << "\n";
    else std::cout << "H1: undefined (all methods tie)\n";

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(oracle.matrix());
    const auto& sv = svd.singularValues();
    std::cout << "singular value ratios (sigma_k / sigma_1):";
    const auto count = std::min<Eigen::Index>(static_cast<Eigen::Index>(f.singular_values), sv.size());
    for (Eigen::Index k = 0; k < count; ++k) std::cout << " " << num(sv(0) > 0 ? sv(k) / sv(0) : 0.0);
    std::cout << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Identify the best method in a method-by-example score matrix under an evaluation budget."};
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", "bestarm 1.0");

    RunFlags run_flags;
    ExperimentFlags experiment_flags;
    MetricsFlags metrics_flags;
    SynthFlags synth_flags;
    InspectFlags inspect_flags;
    auto* run = app.add_subcommand("run", "run one algorithm and print its prediction");
    auto* experiment = app.add_subcommand("experiment", "run a seeded multi-trial experiment grid");
    auto* metrics = app.add_subcommand("metrics", "score predictions against a full matrix");
    auto* synth = app.add_subcommand("synth", "generate a planted score matrix with a ground-truth sidecar");
    auto* inspect = app.add_subcommand("inspect", "summarize a full matrix: means, best method, H1, spectrum");
    attach_run(run, run_flags);
    attach_experiment(experiment, experiment_flags);
    attach_metrics(metrics, metrics_flags);
    attach_synth(synth, synth_flags);
    attach_inspect(inspect, inspect_flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (run->parsed()) return cmd_run(run_flags);
        if (experiment->parsed()) return cmd_experiment(experiment_flags, *experiment);
        if (metrics->parsed()) return cmd_metrics(metrics_flags);
        if (synth->parsed()) return cmd_synth(synth_flags);
        if (inspect->parsed()) return cmd_inspect(inspect_flags);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        std::cerr << "run with --help for usage\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
