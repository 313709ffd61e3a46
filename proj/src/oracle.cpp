#include "bestarm/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "bestarm/metrics.hpp"

namespace bestarm {

using nlohmann::json;

const char* to_string(BackendKind kind) {
    switch (kind) {
        case BackendKind::matrix: return "matrix";
        case BackendKind::file: return "file";
        case BackendKind::remote: return "remote";
    }
    return "unknown";
}

std::vector<double> ScoreOracle::query_batch(std::span<const PairIndex> pairs) const {
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) out.push_back(query(p.method, p.example));
    return out;
}

void ScoreOracle::set_names(std::vector<std::string> methods, std::vector<std::string> examples) {
    if (methods.empty()) {
        for (std::size_t i = 0; i < this->methods(); ++i) methods.push_back("m" + std::to_string(i));
    }
    if (examples.empty()) {
        for (std::size_t j = 0; j < this->examples(); ++j) examples.push_back(std::to_string(j));
    }
    if (methods.size() != this->methods() || examples.size() != this->examples()) {
        throw RaggedMatrixError("name lists do not match matrix dimensions");
    }
    method_names_ = std::move(methods);
    example_ids_ = std::move(examples);
}

void ScoreOracle::check_index(MethodIndex i, ExampleIndex j) const {
    if (i >= methods() || j >= examples()) {
        throw IndexError("query (" + std::to_string(i) + ", " + std::to_string(j) + ") outside " +
                         std::to_string(methods()) + "x" + std::to_string(examples()));
    }
}

MatrixOracle::MatrixOracle(Eigen::MatrixXd scores, std::vector<std::string> method_names,
                           std::vector<std::string> example_ids, BackendKind kind)
    : scores_(std::move(scores)), kind_(kind) {
    if (scores_.rows() == 0 || scores_.cols() == 0) throw RaggedMatrixError("score matrix is empty");
    for (Eigen::Index i = 0; i < scores_.rows(); ++i) {
        for (Eigen::Index j = 0; j < scores_.cols(); ++j) {
            double v = scores_(i, j);
            if (!(v >= 0.0 && v <= 1.0)) {
                std::ostringstream os;
                os << "score " << v << " at row " << i << ", column " << j << " outside [0, 1]";
                throw RangeError(os.str());
            }
        }
    }
    set_names(std::move(method_names), std::move(example_ids));
}

double MatrixOracle::query(MethodIndex i, ExampleIndex j) const {
    check_index(i, j);
    return scores_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
}

// ---------------------------------------------------------------------------
// File formats

MatrixFormat format_from_path(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".csv") return MatrixFormat::csv;
    if (ext == ".json") return MatrixFormat::json;
    throw ParseError("cannot infer matrix format from '" + path.string() + "' (expected .csv or .json)");
}

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no, const std::string& source) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
        char c = line[k];
        if (quoted) {
            if (c == '"') {
                if (k + 1 < line.size() && line[k + 1] == '"') {
                    field += '"';
                    ++k;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field += c;
        }
    }
    if (quoted) throw ParseError(source + ": line " + std::to_string(line_no) + ": unterminated quote");
    fields.push_back(std::move(field));
    return fields;
}

std::string trim(std::string s) {
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

double parse_cell(const std::string& raw, std::size_t line_no, std::size_t column, const std::string& source) {
    std::string text = trim(raw);
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (!text.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (text.empty() || ec != std::errc() || ptr != last) {
        throw ParseError(source + ": line " + std::to_string(line_no) + ", column " + std::to_string(column) +
                         ": '" + text + "' is not a number");
    }
    return value;
}

std::string quote_csv(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string shortest(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace

MatrixOracle parse_matrix_csv(const std::string& text, const std::string& source) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> example_ids;
    std::vector<std::string> method_names;
    std::vector<std::vector<double>> rows;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (trim(line).empty()) continue;
        auto fields = split_csv_line(line, line_no, source);
        if (!header_seen) {
            if (fields.size() < 2) throw ParseError(source + ": header needs at least one example column");
            example_ids.assign(fields.begin() + 1, fields.end());
            for (auto& id : example_ids) id = trim(id);
            header_seen = true;
            continue;
        }
        if (fields.size() != example_ids.size() + 1) {
            throw RaggedMatrixError(source + ": line " + std::to_string(line_no) + " has " +
                                    std::to_string(fields.size() - 1) + " scores, expected " +
                                    std::to_string(example_ids.size()));
        }
        method_names.push_back(trim(fields[0]));
        std::vector<double> row;
        row.reserve(example_ids.size());
        for (std::size_t c = 1; c < fields.size(); ++c) {
            double v = parse_cell(fields[c], line_no, c + 1, source);
            if (!(v >= 0.0 && v <= 1.0)) {
                throw RangeError(source + ": line " + std::to_string(line_no) + ", column " + std::to_string(c + 1) +
                                 " (method '" + method_names.back() + "', example '" + example_ids[c - 1] +
                                 "'): score " + trim(fields[c]) + " outside [0, 1]");
            }
            row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    if (!header_seen) throw ParseError(source + ": empty file");
    if (rows.empty()) throw ParseError(source + ": no method rows");
    Eigen::MatrixXd scores(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(example_ids.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < example_ids.size(); ++j)
            scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return MatrixOracle(std::move(scores), std::move(method_names), std::move(example_ids), BackendKind::file);
}

MatrixOracle parse_matrix_json(const std::string& text, const std::string& source) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(source + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("scores") || !doc["scores"].is_array()) {
        throw ParseError(source + ": expected an object with a 'scores' array");
    }
    const auto& grid = doc["scores"];
    if (grid.empty()) throw ParseError(source + ": no method rows");
    std::size_t m = grid.size();
    std::size_t n = 0;
    for (std::size_t i = 0; i < m; ++i) {
        if (!grid[i].is_array()) throw ParseError(source + ": scores[" + std::to_string(i) + "] is not an array");
        if (i == 0) n = grid[i].size();
        if (grid[i].size() != n) {
            throw RaggedMatrixError(source + ": scores[" + std::to_string(i) + "] has " +
                                    std::to_string(grid[i].size()) + " entries, expected " + std::to_string(n));
        }
    }
    if (n == 0) throw ParseError(source + ": rows are empty");
    std::vector<std::string> methods;
    std::vector<std::string> examples;
    if (doc.contains("methods")) {
        for (const auto& name : doc["methods"]) methods.push_back(name.is_string() ? name.get<std::string>() : name.dump());
        if (methods.size() != m) throw RaggedMatrixError(source + ": 'methods' length does not match row count");
    }
    if (doc.contains("examples")) {
        for (const auto& id : doc["examples"]) examples.push_back(id.is_string() ? id.get<std::string>() : id.dump());
        if (examples.size() != n) throw RaggedMatrixError(source + ": 'examples' length does not match column count");
    }
    Eigen::MatrixXd scores(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const auto& cell = grid[i][j];
            if (!cell.is_number()) {
                throw ParseError(source + ": scores[" + std::to_string(i) + "][" + std::to_string(j) +
                                 "] is not a number");
            }
            double v = cell.get<double>();
            if (!(v >= 0.0 && v <= 1.0)) {
                throw RangeError(source + ": scores[" + std::to_string(i) + "][" + std::to_string(j) + "] = " +
                                 shortest(v) + " outside [0, 1]");
            }
            scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        }
    }
    return MatrixOracle(std::move(scores), std::move(methods), std::move(examples), BackendKind::file);
}

MatrixOracle load_matrix(const std::filesystem::path& path, MatrixFormat format) {
    auto text = read_file(path);
    return format == MatrixFormat::csv ? parse_matrix_csv(text, path.string()) : parse_matrix_json(text, path.string());
}

MatrixOracle load_matrix(const std::filesystem::path& path) { return load_matrix(path, format_from_path(path)); }

std::string format_matrix_csv(const MatrixOracle& oracle) {
    std::string out = "method";
    for (const auto& id : oracle.example_ids()) out += "," + quote_csv(id);
    out += "\n";
    const auto& s = oracle.matrix();
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
        out += quote_csv(oracle.method_names()[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < s.cols(); ++j) out += "," + shortest(s(i, j));
        out += "\n";
    }
    return out;
}

std::string format_matrix_json(const MatrixOracle& oracle) {
    // Hand-written so that numbers use the same shortest round-trip form as the CSV writer.
    std::string out = "{\"methods\": ";
    out += json(oracle.method_names()).dump();
    out += ", \"examples\": ";
    out += json(oracle.example_ids()).dump();
    out += ", \"scores\": [";
    const auto& s = oracle.matrix();
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
        out += i ? ",\n  [" : "\n  [";
        for (Eigen::Index j = 0; j < s.cols(); ++j) {
            if (j) out += ", ";
            out += shortest(s(i, j));
        }
        out += "]";
    }
    out += "\n]}\n";
    return out;
}

void save_matrix(const MatrixOracle& oracle, const std::filesystem::path& path, MatrixFormat format) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << (format == MatrixFormat::csv ? format_matrix_csv(oracle) : format_matrix_json(oracle));
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// Remote backend

RemoteOracle::RemoteOracle(RemoteSettings settings, std::size_t methods, std::size_t examples,
                           std::vector<std::string> method_names, std::vector<std::string> example_ids)
    : settings_(std::move(settings)), methods_(methods), examples_(examples) {
    if (methods == 0 || examples == 0) throw ConfigError("remote oracle needs positive dimensions");
    const std::string& url = settings_.url;
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("remote URL '" + url + "' lacks a scheme");
    auto path_start = url.find('/', scheme_end + 3);
    host_ = url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
    if (settings_.max_in_flight == 0) settings_.max_in_flight = 1;
    set_names(std::move(method_names), std::move(example_ids));
}

std::size_t RemoteOracle::requests_sent() const {
    std::lock_guard lock(mutex_);
    return requests_;
}

double RemoteOracle::fetch(MethodIndex i, ExampleIndex j) const {
    httplib::Client client(host_);
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(settings_.timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(settings_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    json body = {{"run_id", settings_.run_id}, {"method", method_names()[i]}, {"example", example_ids()[j]}};
    const std::string payload = body.dump();
    auto backoff = settings_.initial_backoff;
    std::string last_error;
    for (std::size_t attempt = 0; attempt <= settings_.retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        {
            std::lock_guard lock(mutex_);
            ++requests_;
        }
        auto res = client.Post(path_, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500 || res->status == 429 || res->status == 408) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw TransportError("scoring endpoint answered HTTP " + std::to_string(res->status) + " for (" +
                                 method_names()[i] + ", " + example_ids()[j] + ")");
        }
        json reply;
        try {
            reply = json::parse(res->body);
        } catch (const json::parse_error& e) {
            throw TransportError(std::string("malformed scoring response: ") + e.what());
        }
        if (!reply.is_object() || !reply.contains("score") || !reply["score"].is_number()) {
            throw TransportError("scoring response lacks a numeric 'score': " + res->body);
        }
        double score = reply["score"].get<double>();
        if (!(score >= 0.0 && score <= 1.0)) {
            throw RangeError("remote score " + shortest(score) + " for (" + method_names()[i] + ", " +
                             example_ids()[j] + ") outside [0, 1]");
        }
        return score;
    }
    throw TransportError("scoring endpoint failed after " + std::to_string(settings_.retries) + " retries for (" +
                         method_names()[i] + ", " + example_ids()[j] + "): " + last_error);
}

double RemoteOracle::query(MethodIndex i, ExampleIndex j) const {
    check_index(i, j);
    {
        std::lock_guard lock(mutex_);
        if (auto it = cache_.find({i, j}); it != cache_.end()) return it->second;
    }
    double score = fetch(i, j);
    std::lock_guard lock(mutex_);
    return cache_.emplace(std::make_pair(i, j), score).first->second;
}

std::vector<double> RemoteOracle::query_batch(std::span<const PairIndex> pairs) const {
    for (const auto& p : pairs) check_index(p.method, p.example);
    std::vector<double> out(pairs.size(), 0.0);
    std::vector<std::exception_ptr> errors(pairs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < pairs.size(); k = next++) {
            try {
                out[k] = query(pairs[k].method, pairs[k].example);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    std::size_t threads = std::min(settings_.max_in_flight, pairs.size());
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic instances

std::vector<double> linspace(double lo, double hi, std::size_t count) {
    std::vector<double> out(count);
    if (count == 1) {
        out[0] = lo;
        return out;
    }
    for (std::size_t k = 0; k < count; ++k)
        out[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1);
    return out;
}

std::vector<double> rank_one_profile(std::size_t examples, double spread, RandomStream& stream) {
    if (!(spread >= 0.0 && spread < 1.0)) throw ConfigError("profile spread must be in [0, 1)");
    std::vector<double> profile(examples);
    for (auto& v : profile) v = stream.uniform(1.0 - spread, 1.0 + spread);
    double mean = 0.0;
    for (double v : profile) mean += v;
    mean /= static_cast<double>(examples);
    for (auto& v : profile) v /= mean;
    return profile;
}

PlantedInstance synth_planted(std::size_t methods, std::size_t examples, std::span<const double> means,
                              NoiseModel noise, RandomStream& stream, std::span<const double> column_profile) {
    if (methods == 0 || examples == 0) throw ConfigError("planted instance needs positive dimensions");
    if (means.size() != methods) throw ConfigError("need one target mean per method");
    for (double mu : means)
        if (!(mu >= 0.0 && mu <= 1.0)) throw ConfigError("target means must lie in [0, 1]");
    if (noise.kind == NoiseKind::gaussian && !(noise.sigma >= 0.0)) throw ConfigError("sigma must be non-negative");
    if (!column_profile.empty() && column_profile.size() != examples) {
        throw ConfigError("column profile needs one multiplier per example");
    }

    Eigen::MatrixXd scores(static_cast<Eigen::Index>(methods), static_cast<Eigen::Index>(examples));
    for (std::size_t i = 0; i < methods; ++i) {
        for (std::size_t j = 0; j < examples; ++j) {
            double p = means[i] * (column_profile.empty() ? 1.0 : column_profile[j]);
            p = std::clamp(p, 0.0, 1.0);
            double v = p;
            switch (noise.kind) {
                case NoiseKind::none: break;
                case NoiseKind::bernoulli: v = stream.bernoulli(p) ? 1.0 : 0.0; break;
                case NoiseKind::gaussian: v = std::clamp(p + stream.normal(0.0, noise.sigma), 0.0, 1.0); break;
            }
            scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        }
    }
    MatrixOracle oracle(std::move(scores));
    GroundTruth truth = GroundTruth::from_matrix(oracle.matrix());
    return PlantedInstance{std::move(oracle), truth.means, truth.best_index, truth.h1};
}

}  // namespace bestarm
