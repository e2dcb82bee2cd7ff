#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "core.hpp"
#include "graph_penalty.hpp"
#include "harness.hpp"
#include "regressors.hpp"
#include "skeleton_builder.hpp"

namespace skelreg {

// Shortest round-trip decimal form; the same value always prints the same
// bytes, which keeps every emitted file reproducible.
inline std::string format_double(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ConfigError("not a number: '" + s + "'");
    return v;
}

inline long long parse_int(const std::string& s) {
    long long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ConfigError("not an integer: '" + s + "'");
    return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

// ---------------------------------------------------------------------------
// Skeleton JSON.
// ---------------------------------------------------------------------------

inline json skeleton_to_json(const Skeleton& s) {
    json j;
    j["dim"] = s.dim();
    json knots = json::array();
    for (int r = 0; r < s.n_knots(); ++r) {
        json row = json::array();
        for (int c = 0; c < s.dim(); ++c) row.push_back(s.knots(r, c));
        knots.push_back(std::move(row));
    }
    j["knots"] = std::move(knots);
    json edges = json::array();
    for (const auto& e : s.edges) {
        edges.push_back({{"i", e.i},
                         {"j", e.j},
                         {"length", e.length},
                         {"vd_weight", e.vd_weight},
                         {"count", e.count}});
    }
    j["edges"] = std::move(edges);
    j["component"] = s.component;
    j["meta"] = s.meta;
    return j;
}

inline Skeleton skeleton_from_json(const json& j, bool validate = true) {
    Skeleton s;
    const int dim = j.at("dim").get<int>();
    const auto& knots = j.at("knots");
    s.knots.resize(static_cast<Eigen::Index>(knots.size()), dim);
    for (std::size_t r = 0; r < knots.size(); ++r) {
        if (static_cast<int>(knots[r].size()) != dim)
            throw ShapeError("knot row length disagrees with dim");
        for (int c = 0; c < dim; ++c)
            s.knots(static_cast<Eigen::Index>(r), c) = knots[r][static_cast<std::size_t>(c)].get<double>();
    }
    for (const auto& e : j.at("edges")) {
        EdgeRecord r;
        r.i = e.at("i").get<int>();
        r.j = e.at("j").get<int>();
        r.length = e.at("length").get<double>();
        r.vd_weight = e.at("vd_weight").get<double>();
        r.count = e.at("count").get<int>();
        s.edges.push_back(r);
    }
    s.component = j.at("component").get<std::vector<int>>();
    if (j.contains("meta")) s.meta = j.at("meta");
    if (validate) {
        const auto violations = validate_skeleton(s);
        if (!violations.empty())
            throw ShapeError("invalid skeleton: " + violations.front().invariant +
                             " (" + violations.front().detail + ")");
    }
    return s;
}

inline void save_skeleton(const std::string& path, const Skeleton& s) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << skeleton_to_json(s).dump(2) << "\n";
}

inline Skeleton load_skeleton(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path);
    json j;
    in >> j;
    return skeleton_from_json(j);
}

// ---------------------------------------------------------------------------
// CSV data files: columns x1..xd, then optional y, then optional component.
// ---------------------------------------------------------------------------

struct CsvData {
    PointCloud cloud;
    std::vector<int> component;  // empty when the column is absent
};

inline void write_data_csv(const std::string& path, const PointCloud& cloud,
                           const std::vector<int>* component = nullptr) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    for (Eigen::Index c = 0; c < cloud.dim(); ++c) {
        if (c > 0) out << ",";
        out << "x" << (c + 1);
    }
    if (cloud.responses) out << ",y";
    if (component) out << ",component";
    out << "\n";
    for (Eigen::Index r = 0; r < cloud.size(); ++r) {
        for (Eigen::Index c = 0; c < cloud.dim(); ++c) {
            if (c > 0) out << ",";
            out << format_double(cloud.points(r, c));
        }
        if (cloud.responses) out << "," << format_double((*cloud.responses)(r));
        if (component)
            out << "," << (*component)[static_cast<std::size_t>(r)];
        out << "\n";
    }
}

inline CsvData read_data_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path);
    std::string line;
    if (!std::getline(in, line)) throw ShapeError("empty CSV: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = split(line, ',');

    int dim = 0;
    int y_col = -1, comp_col = -1;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string expect = "x" + std::to_string(c + 1);
        if (header[c] == expect && y_col < 0 && comp_col < 0) {
            dim = static_cast<int>(c) + 1;
        } else if (header[c] == "y" && y_col < 0 && comp_col < 0) {
            y_col = static_cast<int>(c);
        } else if (header[c] == "component" && comp_col < 0) {
            comp_col = static_cast<int>(c);
        } else {
            throw ShapeError("unexpected CSV column '" + header[c] + "'");
        }
    }
    if (dim == 0) throw ShapeError("CSV has no coordinate columns");

    std::vector<std::vector<double>> rows;
    std::vector<double> ys;
    std::vector<int> comps;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> cells = split(line, ',');
        if (cells.size() != header.size())
            throw ShapeError("CSV row width disagrees with header");
        std::vector<double> row(static_cast<std::size_t>(dim));
        for (int c = 0; c < dim; ++c)
            row[static_cast<std::size_t>(c)] = parse_double(cells[static_cast<std::size_t>(c)]);
        rows.push_back(std::move(row));
        if (y_col >= 0) ys.push_back(parse_double(cells[static_cast<std::size_t>(y_col)]));
        if (comp_col >= 0)
            comps.push_back(static_cast<int>(parse_int(cells[static_cast<std::size_t>(comp_col)])));
    }
    if (rows.empty()) throw ShapeError("CSV has no data rows");

    CsvData data;
    data.cloud.points.resize(static_cast<Eigen::Index>(rows.size()), dim);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (int c = 0; c < dim; ++c)
            data.cloud.points(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
    if (y_col >= 0) {
        Vector y(static_cast<Eigen::Index>(ys.size()));
        for (std::size_t i = 0; i < ys.size(); ++i)
            y(static_cast<Eigen::Index>(i)) = ys[i];
        data.cloud.responses = std::move(y);
    }
    data.component = std::move(comps);
    data.cloud.check();
    return data;
}

// ---------------------------------------------------------------------------
// Position CSV: row_id,kind,index,t.
// ---------------------------------------------------------------------------

inline void write_positions_csv(const std::string& path,
                                const std::vector<SkeletonPosition>& pos) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << "row_id,kind,index,t\n";
    for (std::size_t i = 0; i < pos.size(); ++i) {
        const bool knot = pos[i].kind == SkeletonPosition::Kind::knot;
        out << i << "," << (knot ? "knot" : "edge") << "," << pos[i].index
            << "," << format_double(knot ? 0.0 : pos[i].t) << "\n";
    }
}

inline std::vector<SkeletonPosition> read_positions_csv(
    const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path);
    std::string line;
    if (!std::getline(in, line)) throw ShapeError("empty CSV: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "row_id,kind,index,t")
        throw ShapeError("unexpected position CSV header");
    std::vector<SkeletonPosition> out;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != 4) throw ShapeError("position CSV row width");
        if (static_cast<std::size_t>(parse_int(cells[0])) != out.size())
            throw ShapeError("position CSV row_id out of order");
        if (cells[1] == "knot") {
            out.push_back(SkeletonPosition::at_knot(static_cast<int>(parse_int(cells[2]))));
        } else if (cells[1] == "edge") {
            out.push_back(SkeletonPosition::on_edge(
                static_cast<int>(parse_int(cells[2])), parse_double(cells[3])));
        } else {
            throw ShapeError("unknown position kind '" + cells[1] + "'");
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Fitted models.
// ---------------------------------------------------------------------------

// Everything needed to predict later: the skeleton, the method, and either
// the training sample (kernel and neighbor methods) or the knot coefficients
// (spline).
struct FitModel {
    MethodKind kind = MethodKind::skernel;
    Skeleton skeleton;
    bool locality = true;
    KernelSpec kernel;
    int k_neighbors = 5;
    PenaltySpec penalty;
    Vector beta;
    std::vector<SkeletonPosition> train_positions;
    Vector train_responses;
};

inline json positions_to_json(const std::vector<SkeletonPosition>& pos) {
    json arr = json::array();
    for (const auto& p : pos) {
        arr.push_back(
            {{"kind", p.kind == SkeletonPosition::Kind::knot ? "knot" : "edge"},
             {"index", p.index},
             {"t", p.t}});
    }
    return arr;
}

inline std::vector<SkeletonPosition> positions_from_json(const json& arr) {
    std::vector<SkeletonPosition> out;
    for (const auto& p : arr) {
        if (p.at("kind") == "knot")
            out.push_back(SkeletonPosition::at_knot(p.at("index").get<int>()));
        else
            out.push_back(SkeletonPosition::on_edge(p.at("index").get<int>(),
                                                    p.at("t").get<double>()));
    }
    return out;
}

inline json model_to_json(const FitModel& m) {
    json j;
    j["method"] = method_name(m.kind);
    j["skeleton"] = skeleton_to_json(m.skeleton);
    j["locality"] = m.locality;
    switch (m.kind) {
        case MethodKind::skernel:
            j["kernel"] = {{"family", kernel_name(m.kernel.family)},
                           {"bandwidth", m.kernel.bandwidth},
                           {"rhns_multiple", m.kernel.rhns_multiple}};
            break;
        case MethodKind::sknn:
            j["k"] = m.k_neighbors;
            break;
        case MethodKind::slspline: {
            j["penalty"] = {{"kind", penalty_name(m.penalty.kind)},
                            {"order", m.penalty.order},
                            {"lambda", m.penalty.lambda}};
            json beta = json::array();
            for (Eigen::Index i = 0; i < m.beta.size(); ++i)
                beta.push_back(m.beta(i));
            j["beta"] = std::move(beta);
            break;
        }
        default:
            throw ConfigError("only skeleton methods are serialized");
    }
    if (m.kind != MethodKind::slspline) {
        j["train"] = {{"positions", positions_to_json(m.train_positions)},
                      {"responses", json::array()}};
        for (Eigen::Index i = 0; i < m.train_responses.size(); ++i)
            j["train"]["responses"].push_back(m.train_responses(i));
    }
    return j;
}

inline FitModel model_from_json(const json& j) {
    FitModel m;
    const std::string method = j.at("method").get<std::string>();
    m.skeleton = skeleton_from_json(j.at("skeleton"));
    m.locality = j.value("locality", true);
    if (method == "skernel") {
        m.kind = MethodKind::skernel;
        m.kernel.family =
            kernel_from_name(j.at("kernel").at("family").get<std::string>());
        m.kernel.bandwidth = j.at("kernel").at("bandwidth").get<double>();
        m.kernel.rhns_multiple = j.at("kernel").at("rhns_multiple").get<bool>();
    } else if (method == "sknn") {
        m.kind = MethodKind::sknn;
        m.k_neighbors = j.at("k").get<int>();
    } else if (method == "slspline") {
        m.kind = MethodKind::slspline;
        m.penalty.kind =
            penalty_from_name(j.at("penalty").at("kind").get<std::string>());
        m.penalty.order = j.at("penalty").at("order").get<int>();
        m.penalty.lambda = j.at("penalty").at("lambda").get<double>();
        const auto& beta = j.at("beta");
        m.beta.resize(static_cast<Eigen::Index>(beta.size()));
        for (std::size_t i = 0; i < beta.size(); ++i)
            m.beta(static_cast<Eigen::Index>(i)) = beta[i].get<double>();
    } else {
        throw ConfigError("unknown model method '" + method + "'");
    }
    if (j.contains("train")) {
        m.train_positions = positions_from_json(j.at("train").at("positions"));
        const auto& resp = j.at("train").at("responses");
        m.train_responses.resize(static_cast<Eigen::Index>(resp.size()));
        for (std::size_t i = 0; i < resp.size(); ++i)
            m.train_responses(static_cast<Eigen::Index>(i)) = resp[i].get<double>();
    }
    return m;
}

inline void save_model(const std::string& path, const FitModel& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << model_to_json(m).dump(2) << "\n";
}

inline FitModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path);
    json j;
    in >> j;
    return model_from_json(j);
}

// ---------------------------------------------------------------------------
// Experiment reports.
// ---------------------------------------------------------------------------

inline json report_to_json(const ExperimentReport& report) {
    json methods = json::object();
    for (const auto& cell : report.cells) {
        json entry;
        entry["median"] = cell.median;
        entry["p5"] = cell.p5;
        entry["p95"] = cell.p95;
        entry["sse"] = cell.sse;
        methods[cell.method][cell.param_key()] = std::move(entry);
    }
    json best = json::object();
    for (const auto& [method, idx] : report.best) {
        best[method] = {{"params", report.cells[idx].param_key()},
                        {"median", report.cells[idx].median}};
    }
    return json{{"methods", std::move(methods)}, {"best", std::move(best)}};
}

inline void write_report_json(const std::string& path,
                              const ExperimentReport& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << report_to_json(report).dump(2) << "\n";
}

// One row per (cell, replicate). Fixed parameters fold into the method
// column; the swept parameter supplies name and value.
inline void write_plot_csv(const std::string& path,
                           const ExperimentReport& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << "method,param_name,param_value,replicate,sse\n";
    for (const auto& cell : report.cells) {
        std::string method = cell.method;
        std::string pname = "-";
        double pvalue = 0.0;
        if (!cell.params.empty()) {
            pname = cell.params.back().first;
            pvalue = cell.params.back().second;
            if (cell.params.size() > 1) {
                method += "[";
                for (std::size_t i = 0; i + 1 < cell.params.size(); ++i) {
                    if (i > 0) method += ",";
                    method += cell.params[i].first + "=" +
                              ReportCell::format_value(cell.params[i].second);
                }
                method += "]";
            }
        }
        for (std::size_t rep = 0; rep < cell.sse.size(); ++rep) {
            out << method << "," << pname << ","
                << ReportCell::format_value(pvalue) << "," << rep << ","
                << format_double(cell.sse[rep]) << "\n";
        }
    }
}

// ---------------------------------------------------------------------------
// Experiment config files: one key=value per line, '#' starts a comment,
// lists are comma-separated. Unknown keys are errors.
// ---------------------------------------------------------------------------

inline ExperimentConfig parse_experiment_config(std::istream& in) {
    ExperimentConfig cfg;
    std::string line;
    int lineno = 0;
    auto int_list = [](const std::string& v) {
        std::vector<int> out;
        for (const auto& tok : split(v, ','))
            if (!tok.empty()) out.push_back(static_cast<int>(parse_int(tok)));
        return out;
    };
    auto double_list = [](const std::string& v) {
        std::vector<double> out;
        for (const auto& tok : split(v, ','))
            if (!tok.empty()) out.push_back(parse_double(tok));
        return out;
    };
    auto parse_bool = [](const std::string& v) {
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        throw ConfigError("not a boolean: '" + v + "'");
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        // Trim.
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t");
        line = line.substr(first, last - first + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              " is not key=value");
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);

        if (key == "dataset") cfg.dataset = value;
        else if (key == "sizes") cfg.sizes = int_list(value);
        else if (key == "noise_points") cfg.noise_points = static_cast<int>(parse_int(value));
        else if (key == "swissroll_n") cfg.swissroll_n = static_cast<int>(parse_int(value));
        else if (key == "ambient_dim") cfg.ambient_dim = static_cast<int>(parse_int(value));
        else if (key == "noise_dim_magnitude") cfg.noise_dim_magnitude = parse_double(value);
        else if (key == "variance_notation") cfg.variance_notation = parse_bool(value);
        else if (key == "n_replicates") cfg.n_replicates = static_cast<int>(parse_int(value));
        else if (key == "n_folds") cfg.n_folds = static_cast<int>(parse_int(value));
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_int(value));
        else if (key == "knot_counts") cfg.knot_counts = int_list(value);
        else if (key == "n_components") cfg.n_components = static_cast<int>(parse_int(value));
        else if (key == "linkage") cfg.linkage = linkage_from_name(value);
        else if (key == "restarts") cfg.restarts = static_cast<int>(parse_int(value));
        else if (key == "max_iter") cfg.max_iter = static_cast<int>(parse_int(value));
        else if (key == "min_cell") cfg.min_cell = static_cast<int>(parse_int(value));
        else if (key == "locality") cfg.locality = parse_bool(value);
        else if (key == "skernel_bandwidths") cfg.skernel_bandwidths = double_list(value);
        else if (key == "kernel") cfg.kernel_family = kernel_from_name(value);
        else if (key == "sknn_k") cfg.sknn_k = int_list(value);
        else if (key == "slspline") cfg.slspline = parse_bool(value);
        else if (key == "slspline_penalties") {
            for (const auto& tok : split(value, ',')) {
                if (tok.empty()) continue;
                const auto parts = split(tok, ':');
                if (parts.size() != 3)
                    throw ConfigError("penalty must be kind:order:lambda, got '" + tok + "'");
                PenaltySpec pen;
                pen.kind = penalty_from_name(parts[0]);
                pen.order = static_cast<int>(parse_int(parts[1]));
                pen.lambda = parse_double(parts[2]);
                cfg.slspline_penalties.push_back(pen);
            }
        }
        else if (key == "eknn_k") cfg.eknn_k = int_list(value);
        else if (key == "ridge_lambdas") cfg.ridge_lambdas = double_list(value);
        else if (key == "lasso_lambdas") cfg.lasso_lambdas = double_list(value);
        else throw ConfigError("unknown config key '" + key + "'");
    }
    return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path);
    return parse_experiment_config(in);
}

}  // namespace skelreg
