#include "bestarm/harness.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>

#include "bestarm/parallel.hpp"

namespace bestarm {

using nlohmann::json;

namespace {

std::atomic<bool> g_stop{false};

std::string shortest(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
    if (!obj.contains(key) || obj[key].is_null()) return fallback;
    try {
        return obj[key].get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("field '") + key + "': " + e.what());
    }
}

const char* noise_name(NoiseKind kind) {
    switch (kind) {
        case NoiseKind::none: return "none";
        case NoiseKind::bernoulli: return "bernoulli";
        case NoiseKind::gaussian: return "gaussian";
    }
    return "none";
}

NoiseKind parse_noise(const std::string& name) {
    if (name == "none") return NoiseKind::none;
    if (name == "bernoulli") return NoiseKind::bernoulli;
    if (name == "gaussian") return NoiseKind::gaussian;
    throw ConfigError("unknown noise model '" + name + "'");
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_from(const json& v) { return v.is_null() ? std::nan("") : v.get<double>(); }

}  // namespace

void request_stop() { g_stop = true; }
void clear_stop() { g_stop = false; }
bool stop_requested() { return g_stop.load(); }

// ---------------------------------------------------------------------------
// Spec

std::vector<double> ExperimentSpec::default_checkpoints() {
    std::vector<double> out;
    for (int k = 1; k <= 20; ++k) out.push_back(0.05 * k);
    out.back() = 1.0;
    return out;
}

void ExperimentSpec::validate() const {
    if (trials == 0) throw ConfigError("trial count must be at least 1");
    if (algorithms.empty()) throw ConfigError("experiment lists no algorithms");
    if (checkpoints.empty()) throw ConfigError("experiment lists no checkpoints");
    for (std::size_t k = 0; k < checkpoints.size(); ++k) {
        if (!(checkpoints[k] > 0.0 && checkpoints[k] <= 1.0)) throw ConfigError("checkpoints must lie in (0, 1]");
        if (k > 0 && !(checkpoints[k] > checkpoints[k - 1])) {
            throw ConfigError("checkpoints must be strictly increasing");
        }
    }
    for (double e : metrics.epsilons)
        if (!(e >= 0.0)) throw ConfigError("epsilon values must be non-negative");
    for (double p : metrics.p_levels)
        if (!(p > 0.0 && p < 1.0)) throw ConfigError("p levels must lie in (0, 1)");
    if (metrics.ndcg_k == 0) throw ConfigError("ndcg_k must be positive");
}

ExperimentSpec parse_experiment_spec(const json& doc) {
    if (!doc.is_object()) throw ConfigError("experiment spec must be a JSON object");
    ExperimentSpec spec;
    const json& src = doc.value("oracle", json::object());
    const std::string kind = get_or<std::string>(src, "kind", "synthetic");
    if (kind == "file") {
        spec.oracle.kind = OracleSource::Kind::file;
        spec.oracle.path = get_or<std::string>(src, "path", "");
        if (spec.oracle.path.empty()) throw ConfigError("file oracle needs a 'path'");
    } else if (kind == "synthetic") {
        spec.oracle.kind = OracleSource::Kind::synthetic;
        spec.oracle.methods = get_or<std::size_t>(src, "methods", 0);
        spec.oracle.examples = get_or<std::size_t>(src, "examples", 0);
        if (src.contains("means")) {
            spec.oracle.means = src["means"].get<std::vector<double>>();
        } else if (src.contains("means_linspace")) {
            auto range = src["means_linspace"].get<std::vector<double>>();
            if (range.size() != 2) throw ConfigError("'means_linspace' needs [lo, hi]");
            spec.oracle.means = linspace(range[0], range[1], spec.oracle.methods);
        }
        if (spec.oracle.methods == 0) spec.oracle.methods = spec.oracle.means.size();
        spec.oracle.noise.kind = parse_noise(get_or<std::string>(src, "noise", "bernoulli"));
        spec.oracle.noise.sigma = get_or<double>(src, "sigma", 0.0);
        spec.oracle.profile_spread = get_or<double>(src, "profile_spread", 0.0);
        spec.oracle.seed = get_or<std::uint64_t>(src, "seed", 0);
        if (spec.oracle.methods == 0 || spec.oracle.examples == 0 || spec.oracle.means.size() != spec.oracle.methods) {
            throw ConfigError("synthetic oracle needs 'examples' and one mean per method");
        }
    } else {
        throw ConfigError("experiments need a 'file' or 'synthetic' oracle (got '" + kind + "')");
    }

    if (!doc.contains("algorithms") || !doc["algorithms"].is_array()) throw ConfigError("spec needs an 'algorithms' array");
    for (const auto& a : doc["algorithms"]) {
        AlgorithmEntry entry;
        if (a.is_string()) {
            entry.kind = parse_algorithm(a.get<std::string>());
        } else {
            entry.kind = parse_algorithm(get_or<std::string>(a, "name", ""));
            auto& c = entry.config;
            c.exploration_a = get_or(a, "a", c.exploration_a);
            c.rank = get_or(a, "rank", c.rank);
            c.ensemble_size = get_or(a, "ensemble", c.ensemble_size);
            c.warmup_fraction = get_or(a, "warmup_frac", c.warmup_fraction);
            c.uncertainty_scale = get_or(a, "eta", c.uncertainty_scale);
            c.batch_size = get_or(a, "batch", c.batch_size);
            c.dropout_fraction = get_or(a, "dropout", c.dropout_fraction);
            c.als.max_iterations = get_or(a, "als_max_iterations", c.als.max_iterations);
            c.als.tolerance = get_or(a, "als_tolerance", c.als.tolerance);
            c.als.ridge = get_or(a, "ridge", c.als.ridge);
        }
        spec.algorithms.push_back(entry);
    }
    if (doc.contains("checkpoints")) spec.checkpoints = doc["checkpoints"].get<std::vector<double>>();
    spec.trials = get_or(doc, "trials", spec.trials);
    spec.master_seed = get_or(doc, "master_seed", spec.master_seed);
    if (doc.contains("metrics")) {
        const auto& mt = doc["metrics"];
        spec.metrics.epsilons = get_or(mt, "epsilons", spec.metrics.epsilons);
        spec.metrics.p_levels = get_or(mt, "p_levels", spec.metrics.p_levels);
        spec.metrics.ndcg_k = get_or(mt, "ndcg_k", spec.metrics.ndcg_k);
        spec.metrics.mcnemar = parse_mcnemar_form(get_or<std::string>(mt, "mcnemar", "corrected"));
        spec.metrics.ndcg_gain = parse_ndcg_gain(get_or<std::string>(mt, "ndcg_gain", "mean"));
    }
    if (doc.contains("output")) {
        spec.output_csv = get_or<std::string>(doc["output"], "csv", "");
        spec.output_json = get_or<std::string>(doc["output"], "json", "");
    }
    spec.workers = get_or(doc, "workers", spec.workers);
    spec.record_timing = get_or(doc, "record_timing", spec.record_timing);
    spec.validate();
    return spec;
}

ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open experiment spec '" + path.string() + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return parse_experiment_spec(doc);
}

json to_json(const ExperimentSpec& spec) {
    json doc;
    if (spec.oracle.kind == OracleSource::Kind::file) {
        doc["oracle"] = {{"kind", "file"}, {"path", spec.oracle.path.string()}};
    } else {
        doc["oracle"] = {{"kind", "synthetic"},
                         {"methods", spec.oracle.methods},
                         {"examples", spec.oracle.examples},
                         {"means", spec.oracle.means},
                         {"noise", noise_name(spec.oracle.noise.kind)},
                         {"sigma", spec.oracle.noise.sigma},
                         {"profile_spread", spec.oracle.profile_spread},
                         {"seed", spec.oracle.seed}};
    }
    doc["algorithms"] = json::array();
    for (const auto& a : spec.algorithms) {
        const auto& c = a.config;
        doc["algorithms"].push_back({{"name", std::string(algorithm_name(a.kind))},
                                     {"a", c.exploration_a},
                                     {"rank", c.rank},
                                     {"ensemble", c.ensemble_size},
                                     {"warmup_frac", c.warmup_fraction},
                                     {"eta", c.uncertainty_scale},
                                     {"batch", c.batch_size},
                                     {"dropout", c.dropout_fraction},
                                     {"als_max_iterations", c.als.max_iterations},
                                     {"als_tolerance", c.als.tolerance},
                                     {"ridge", c.als.ridge}});
    }
    doc["checkpoints"] = spec.checkpoints;
    doc["trials"] = spec.trials;
    doc["master_seed"] = spec.master_seed;
    doc["metrics"] = {{"epsilons", spec.metrics.epsilons},
                      {"p_levels", spec.metrics.p_levels},
                      {"ndcg_k", spec.metrics.ndcg_k},
                      {"mcnemar", to_string(spec.metrics.mcnemar)},
                      {"ndcg_gain", to_string(spec.metrics.ndcg_gain)}};
    doc["output"] = {{"csv", spec.output_csv.string()}, {"json", spec.output_json.string()}};
    doc["workers"] = spec.workers;
    doc["record_timing"] = spec.record_timing;
    return doc;
}

MatrixOracle materialize_oracle(const OracleSource& source) {
    if (source.kind == OracleSource::Kind::file) return load_matrix(source.path);
    auto stream = derive_rng(source.seed, "synthetic-instance");
    std::vector<double> profile;
    if (source.profile_spread > 0.0) profile = rank_one_profile(source.examples, source.profile_spread, stream);
    return synth_planted(source.methods, source.examples, source.means, source.noise, stream, profile).oracle;
}

std::uint64_t trial_seed(std::uint64_t master_seed, AlgorithmKind kind, std::size_t trial) {
    return derive_seed(master_seed, std::string(algorithm_name(kind)) + "/trial-" + std::to_string(trial));
}

// ---------------------------------------------------------------------------
// Metrics per prediction

MetricEvaluator::MetricEvaluator(const GroundTruth& truth, const MetricSettings& settings)
    : truth_(truth), settings_(settings) {
    for (double e : settings.epsilons) columns_.push_back({"precision_gap", e});
    for (double p : settings.p_levels) columns_.push_back({"precision_significance", p});
    columns_.push_back({"ndcg", static_cast<double>(settings.ndcg_k)});
    if (!settings.p_levels.empty()) {
        p_vs_best_.resize(truth.methods(), 1.0);
        for (std::size_t i = 0; i < truth.methods(); ++i)
            if (i != truth.best_index) p_vs_best_[i] = mcnemar_p(truth, i, truth.best_index, settings.mcnemar);
    }
}

std::vector<double> MetricEvaluator::evaluate(const Prediction& prediction) const {
    std::vector<double> out;
    out.reserve(columns_.size());
    const MethodIndex pred = prediction.best_index;
    for (double e : settings_.epsilons) out.push_back(precision_gap(truth_, pred, e));
    const bool tied_best = pred == truth_.best_index || truth_.means[pred] == truth_.best_mean();
    for (double p : settings_.p_levels) out.push_back(tied_best || p_vs_best_[pred] > p ? 1.0 : 0.0);
    auto ranking = ranking_from_means(prediction.estimated_means);
    std::size_t k = std::min(settings_.ndcg_k, truth_.methods());
    out.push_back(ndcg_at_k(truth_, ranking, k, settings_.ndcg_gain));
    return out;
}

// ---------------------------------------------------------------------------
// Running

namespace {

TrialResult run_trial(const ExperimentSpec& spec, const AlgorithmEntry& entry, std::size_t trial,
                      const ScoreOracle& oracle, const MetricEvaluator& evaluator,
                      const std::vector<std::size_t>& budgets) {
    using clock = std::chrono::steady_clock;
    TrialResult out;
    out.algorithm = std::string(algorithm_name(entry.kind));
    out.trial = trial;
    out.seed = trial_seed(spec.master_seed, entry.kind, trial);

    AlgorithmConfig config = entry.config;
    config.budget_total = budgets.back();
    auto start = clock::now();
    RunResult run = run_algorithm(entry.kind, oracle, config, out.seed);
    out.wall_time_s = std::chrono::duration<double>(clock::now() - start).count();

    const std::size_t m = oracle.methods();
    const std::size_t n = oracle.examples();
    ScoringState state(m, n);
    std::size_t replayed = 0;
    for (std::size_t c = 0; c < budgets.size(); ++c) {
        auto cp_start = clock::now();
        for (; replayed < budgets[c]; ++replayed) {
            const auto& p = run.pairs[replayed];
            state.record(p.method, p.example, p.score);
        }
        Prediction prediction = budgets[c] == budgets.back()
                                    ? run.prediction
                                    : predict_from_state(entry.kind, state, config, out.seed);
        CheckpointRecord record;
        record.fraction = spec.checkpoints[c];
        record.evaluations_used = state.evaluations_used();
        record.best_index = prediction.best_index;
        record.estimated_means = prediction.estimated_means;
        record.metric_values = evaluator.evaluate(prediction);
        record.wall_time_s = std::chrono::duration<double>(clock::now() - cp_start).count();
        out.checkpoints.push_back(std::move(record));
    }
    return out;
}

}  // namespace

std::vector<AggregateRow> aggregate_trials(const ExperimentReport& report, const std::vector<std::string>& algorithms) {
    std::vector<AggregateRow> rows;
    for (const auto& name : algorithms) {
        std::vector<const TrialResult*> trials;
        for (const auto& t : report.trials)
            if (t.algorithm == name) trials.push_back(&t);
        std::sort(trials.begin(), trials.end(), [](auto* a, auto* b) { return a->trial < b->trial; });
        if (trials.empty()) continue;
        for (std::size_t c = 0; c < report.checkpoints.size(); ++c) {
            for (std::size_t k = 0; k < report.metrics.size(); ++k) {
                AggregateRow row;
                row.algorithm = name;
                row.checkpoint_fraction = report.checkpoints[c];
                row.metric_name = report.metrics[k].name;
                row.metric_param = report.metrics[k].param;
                row.trial_count = trials.size();
                double sum = 0.0;
                for (auto* t : trials) sum += t->checkpoints[c].metric_values[k];
                row.mean_value = sum / static_cast<double>(trials.size());
                if (trials.size() > 1) {
                    double ss = 0.0;
                    for (auto* t : trials) {
                        double d = t->checkpoints[c].metric_values[k] - row.mean_value;
                        ss += d * d;
                    }
                    double sd = std::sqrt(ss / static_cast<double>(trials.size() - 1));
                    row.stderr_value = sd / std::sqrt(static_cast<double>(trials.size()));
                }
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

ExperimentReport run_experiment(const ExperimentSpec& spec, const ScoreOracle& oracle, const GroundTruth& truth) {
    spec.validate();
    const std::size_t m = oracle.methods();
    const std::size_t n = oracle.examples();
    if (truth.methods() != m || static_cast<std::size_t>(truth.scores.cols()) != n) {
        throw ConfigError("ground truth does not match the oracle dimensions");
    }

    ExperimentReport report;
    report.methods = m;
    report.examples = n;
    report.checkpoints = spec.checkpoints;
    report.spec = to_json(spec);
    report.include_timing = spec.record_timing;
    MetricEvaluator evaluator(truth, spec.metrics);
    report.metrics = evaluator.columns();

    std::vector<std::size_t> budgets;
    for (double f : spec.checkpoints) budgets.push_back(budget_from_fraction(f, m, n));
    for (const auto& entry : spec.algorithms) {
        AlgorithmConfig config = entry.config;
        config.budget_total = budgets.back();
        config.validate(m, n, uses_factorization(entry.kind));
    }

    const std::size_t jobs = spec.algorithms.size() * spec.trials;
    std::vector<std::optional<TrialResult>> results(jobs);
    std::vector<std::string> errors(jobs);
    std::atomic<bool> failed{false};
    parallel_for(jobs, spec.workers, [&](std::size_t job) {
        if (failed || stop_requested()) return;
        const auto& entry = spec.algorithms[job / spec.trials];
        try {
            results[job] = run_trial(spec, entry, job % spec.trials, oracle, evaluator, budgets);
        } catch (const std::exception& e) {
            errors[job] = std::string(algorithm_name(entry.kind)) + " trial " + std::to_string(job % spec.trials) +
                          ": " + e.what();
            failed = true;
        }
    });

    for (auto& r : results)
        if (r) report.trials.push_back(std::move(*r));
    if (failed) {
        report.status = "failed";
        for (const auto& e : errors) {
            if (!e.empty()) {
                report.error = e;
                break;
            }
        }
    } else if (report.trials.size() < jobs) {
        report.status = "interrupted";
        report.error = "stopped after " + std::to_string(report.trials.size()) + " of " + std::to_string(jobs) +
                       " trials";
    }
    std::vector<std::string> names;
    for (const auto& entry : spec.algorithms) names.emplace_back(algorithm_name(entry.kind));
    report.aggregate = aggregate_trials(report, names);
    return report;
}

ExperimentReport run_experiment(const ExperimentSpec& spec) {
    spec.validate();
    auto flush = [&](const ExperimentReport& report) {
        if (!spec.output_json.empty()) write_report(report, spec.output_json, ReportFormat::json);
        if (!spec.output_csv.empty()) write_report(report, spec.output_csv, ReportFormat::csv);
    };
    ExperimentReport marker;
    marker.status = "running";
    marker.spec = to_json(spec);
    marker.checkpoints = spec.checkpoints;
    if (!spec.output_json.empty()) write_report(marker, spec.output_json, ReportFormat::json);

    ExperimentReport report;
    try {
        MatrixOracle oracle = materialize_oracle(spec.oracle);
        GroundTruth truth = GroundTruth::from_matrix(oracle.matrix());
        report = run_experiment(spec, oracle, truth);
    } catch (const std::exception& e) {
        report = marker;
        report.status = "failed";
        report.error = e.what();
        flush(report);
        throw;
    }
    flush(report);
    return report;
}

// ---------------------------------------------------------------------------
// Persistence

std::string format_report_csv(const ExperimentReport& report) {
    std::string out = "algorithm,checkpoint_fraction,metric_name,metric_param,mean_value,trial_count,stderr\n";
    for (const auto& row : report.aggregate) {
        out += row.algorithm + "," + shortest(row.checkpoint_fraction) + "," + row.metric_name + "," +
               shortest(row.metric_param) + "," + shortest(row.mean_value) + "," + std::to_string(row.trial_count) +
               "," + shortest(row.stderr_value) + "\n";
    }
    return out;
}

json report_to_json(const ExperimentReport& report) {
    json doc;
    doc["status"] = report.status;
    doc["error"] = report.error;
    doc["methods"] = report.methods;
    doc["examples"] = report.examples;
    doc["checkpoints"] = report.checkpoints;
    doc["metrics"] = json::array();
    for (const auto& m : report.metrics) doc["metrics"].push_back({{"name", m.name}, {"param", m.param}});
    doc["spec"] = report.spec;
    doc["trials"] = json::array();
    for (const auto& t : report.trials) {
        json jt = {{"algorithm", t.algorithm}, {"trial", t.trial}, {"seed", t.seed}};
        if (report.include_timing) jt["wall_time_s"] = t.wall_time_s;
        jt["checkpoints"] = json::array();
        for (const auto& c : t.checkpoints) {
            json jc = {{"fraction", c.fraction}, {"evaluations_used", c.evaluations_used}, {"best_index", c.best_index}};
            json means = json::array();
            for (double v : c.estimated_means) means.push_back(number_or_null(v));
            jc["estimated_means"] = std::move(means);
            jc["metric_values"] = c.metric_values;
            if (report.include_timing) jc["wall_time_s"] = c.wall_time_s;
            jt["checkpoints"].push_back(std::move(jc));
        }
        doc["trials"].push_back(std::move(jt));
    }
    doc["aggregate"] = json::array();
    for (const auto& row : report.aggregate) {
        doc["aggregate"].push_back({{"algorithm", row.algorithm},
                                    {"checkpoint_fraction", row.checkpoint_fraction},
                                    {"metric_name", row.metric_name},
                                    {"metric_param", row.metric_param},
                                    {"mean_value", row.mean_value},
                                    {"trial_count", row.trial_count},
                                    {"stderr", row.stderr_value}});
    }
    return doc;
}

ExperimentReport report_from_json(const json& doc) {
    ExperimentReport report;
    try {
        report.status = doc.at("status").get<std::string>();
        report.error = doc.value("error", "");
        report.methods = doc.value("methods", std::size_t{0});
        report.examples = doc.value("examples", std::size_t{0});
        report.checkpoints = doc.value("checkpoints", std::vector<double>{});
        for (const auto& m : doc.value("metrics", json::array()))
            report.metrics.push_back({m.at("name").get<std::string>(), m.at("param").get<double>()});
        report.spec = doc.value("spec", json());
        for (const auto& jt : doc.value("trials", json::array())) {
            TrialResult t;
            t.algorithm = jt.at("algorithm").get<std::string>();
            t.trial = jt.at("trial").get<std::size_t>();
            t.seed = jt.at("seed").get<std::uint64_t>();
            if (jt.contains("wall_time_s")) {
                t.wall_time_s = jt["wall_time_s"].get<double>();
                report.include_timing = true;
            }
            for (const auto& jc : jt.at("checkpoints")) {
                CheckpointRecord c;
                c.fraction = jc.at("fraction").get<double>();
                c.evaluations_used = jc.at("evaluations_used").get<std::size_t>();
                c.best_index = jc.at("best_index").get<std::size_t>();
                for (const auto& v : jc.at("estimated_means")) c.estimated_means.push_back(number_from(v));
                c.metric_values = jc.at("metric_values").get<std::vector<double>>();
                c.wall_time_s = jc.value("wall_time_s", 0.0);
                t.checkpoints.push_back(std::move(c));
            }
            report.trials.push_back(std::move(t));
        }
        for (const auto& jr : doc.value("aggregate", json::array())) {
            AggregateRow row;
            row.algorithm = jr.at("algorithm").get<std::string>();
            row.checkpoint_fraction = jr.at("checkpoint_fraction").get<double>();
            row.metric_name = jr.at("metric_name").get<std::string>();
            row.metric_param = jr.at("metric_param").get<double>();
            row.mean_value = jr.at("mean_value").get<double>();
            row.trial_count = jr.at("trial_count").get<std::size_t>();
            row.stderr_value = jr.at("stderr").get<double>();
            report.aggregate.push_back(std::move(row));
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed report: ") + e.what());
    }
    return report;
}

ExperimentReport read_report_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open report '" + path.string() + "'");
    try {
        return report_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void write_report(const ExperimentReport& report, const std::filesystem::path& path, ReportFormat format) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write report '" + path.string() + "'");
    if (format == ReportFormat::csv) {
        out << format_report_csv(report);
    } else {
        out << report_to_json(report).dump(1) << "\n";
    }
    if (!out) throw IoError("write failed for report '" + path.string() + "'");
}

}  // namespace bestarm
