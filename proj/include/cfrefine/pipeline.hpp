#ifndef CFREFINE_PIPELINE_HPP
#define CFREFINE_PIPELINE_HPP

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <istream>
#include <iterator>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "cfrefine/cf_tree.hpp"
#include "cfrefine/dataset.hpp"
#include "cfrefine/error.hpp"
#include "cfrefine/gaussian.hpp"
#include "cfrefine/metrics.hpp"

namespace cfrefine {

using Json = nlohmann::ordered_json;

struct RunConfig {
    std::string input;
    CsvOptions csv;
    CFTreeParams tree;
    RefineParams refine;
    std::optional<std::size_t> n_min; // defaults to d + 2 once d is known
    bool do_refine = true;
    std::string output;
    std::string format = "json";

    RefineParams resolved_refine(std::size_t dim) const {
        RefineParams p = refine;
        p.n_min = n_min.value_or(RefineParams::default_n_min(dim));
        return p;
    }

    void validate() const {
        tree.validate();
        RefineParams probe = refine;
        probe.n_min = n_min.value_or(2);
        probe.validate();
        if (format != "json" && format != "csv") {
            throw UsageError("--format must be json or csv, got '" + format + "'");
        }
    }
};

struct PipelineResult {
    std::vector<MicroCluster> phase1;
    std::vector<MicroCluster> clusters; // final; equals phase1 when refinement is off
    double phase1_ms = 0.0;
    double phase2_ms = 0.0;
};

/// Builds the CF-tree in row order, then optionally runs one Gaussian
/// refinement pass over its leaf micro-clusters. Timings exclude loading.
inline PipelineResult run_pipeline(const Dataset& ds, const CFTreeParams& tree_params,
                                   const RefineParams& refine_params, bool do_refine) {
    using clock = std::chrono::steady_clock;
    auto ms_since = [](clock::time_point t0) {
        return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    };

    PipelineResult res;
    auto t0 = clock::now();
    CFTree tree(tree_params, ds.dim);
    for (std::size_t i = 0; i < ds.rows(); ++i) tree.insert(i, ds.row(i));
    res.phase1 = tree.leaf_micro_clusters();
    res.phase1_ms = ms_since(t0);

    t0 = clock::now();
    res.clusters = do_refine ? refine(res.phase1, ds, refine_params) : res.phase1;
    res.phase2_ms = do_refine ? ms_since(t0) : 0.0;
    return res;
}

/// Cluster index of every row, in row order.
inline std::vector<long long> assignment_of(const std::vector<MicroCluster>& clusters,
                                            std::size_t rows) {
    std::vector<long long> a(rows, -1);
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        for (std::size_t r : clusters[c].members) {
            if (r >= rows || a[r] != -1) {
                throw DataError("cluster membership is not a partition of the rows (row " +
                                std::to_string(r) + ")");
            }
            a[r] = static_cast<long long>(c);
        }
    }
    for (std::size_t r = 0; r < rows; ++r) {
        if (a[r] == -1) throw DataError("row " + std::to_string(r) + " is in no cluster");
    }
    return a;
}

inline Json metrics_json(const ContingencyTable& t) {
    const auto pr = precision_recall(t);
    Json m;
    m["entropy"] = entropy(t);
    m["purity"] = purity(t);
    m["weighted_precision"] = pr.weighted_precision;
    m["weighted_recall"] = pr.weighted_recall;
    return m;
}

/// Full report for one run. Everything except "timings_ms" is a
/// deterministic function of the dataset and the configuration.
inline Json cluster_report(const Dataset& ds, const RunConfig& cfg, const PipelineResult& res) {
    const RefineParams rp = cfg.resolved_refine(ds.dim);
    Json j;
    Json params;
    params["input"] = cfg.input;
    params["features"] = cfg.csv.feature_columns;
    params["label"] = cfg.csv.label_column ? Json(*cfg.csv.label_column) : Json(nullptr);
    params["branching_factor"] = cfg.tree.branching_factor;
    params["threshold"] = cfg.tree.threshold;
    params["refine"] = cfg.do_refine;
    params["rho"] = rp.rho;
    params["n_min"] = rp.n_min;
    params["epsilon_scale"] = rp.epsilon_scale;
    j["params"] = params;
    j["rows"] = ds.rows();
    j["dimension"] = ds.dim;
    j["phase1_cluster_count"] = res.phase1.size();
    j["phase2_cluster_count"] = res.clusters.size();

    Json clusters = Json::array();
    for (std::size_t c = 0; c < res.clusters.size(); ++c) {
        const auto& mc = res.clusters[c];
        Json e;
        e["id"] = c;
        e["size"] = mc.cf.n;
        e["centroid"] = centroid(mc.cf);
        e["radius"] = radius(mc.cf);
        e["diameter"] = diameter(mc.cf);
        clusters.push_back(std::move(e));
    }
    j["clusters"] = std::move(clusters);

    const auto assignment = assignment_of(res.clusters, ds.rows());
    j["assignment"] = assignment;
    if (ds.labeled()) j["metrics"] = metrics_json(build_contingency(assignment, ds.labels));

    j["timings_ms"] = Json{{"phase1", res.phase1_ms},
                           {"phase2", res.phase2_ms},
                           {"total", res.phase1_ms + res.phase2_ms}};
    return j;
}

inline void write_assignment_csv(std::ostream& out, const std::vector<long long>& assignment) {
    out << "row_id,cluster\n";
    for (std::size_t r = 0; r < assignment.size(); ++r) out << r << "," << assignment[r] << "\n";
}

/// Six significant digits, as used for every CSV table.
inline std::string format_sig6(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

struct SweepRow {
    double threshold = 0.0;
    std::size_t phase1_count = 0;
    std::size_t phase2_count = 0;
    double ratio = 0.0;
};

/// Thresholds t_min, t_min + step, ... up to t_max (inclusive, with a
/// small tolerance for accumulated rounding in the bounds).
inline std::vector<double> sweep_thresholds(double t_min, double t_max, double t_step) {
    if (!(t_min > 0.0) || !(t_max >= t_min) || !(t_step > 0.0) || !std::isfinite(t_max)) {
        throw UsageError("sweep range requires 0 < t-min <= t-max and t-step > 0");
    }
    const auto steps = static_cast<std::size_t>(std::floor((t_max - t_min) / t_step + 1e-9));
    std::vector<double> ts;
    for (std::size_t i = 0; i <= steps; ++i) ts.push_back(t_min + static_cast<double>(i) * t_step);
    return ts;
}

inline std::vector<SweepRow> run_sweep(const Dataset& ds, const RunConfig& cfg, double t_min,
                                       double t_max, double t_step) {
    std::vector<SweepRow> rows;
    const RefineParams rp = cfg.resolved_refine(ds.dim);
    for (double t : sweep_thresholds(t_min, t_max, t_step)) {
        CFTreeParams tp = cfg.tree;
        tp.threshold = t;
        const auto res = run_pipeline(ds, tp, rp, cfg.do_refine);
        SweepRow row;
        row.threshold = t;
        row.phase1_count = res.phase1.size();
        row.phase2_count = res.clusters.size();
        row.ratio = static_cast<double>(row.phase2_count) / static_cast<double>(row.phase1_count);
        rows.push_back(row);
    }
    return rows;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "threshold,phase1_count,phase2_count,ratio\n";
    for (const auto& r : rows) {
        out << format_sig6(r.threshold) << "," << r.phase1_count << "," << r.phase2_count << ","
            << format_sig6(r.ratio) << "\n";
    }
}

struct ScaleRow {
    std::size_t multiple = 0;
    std::size_t rows = 0;
    double wall_ms = 0.0;
    double delta_ms = 0.0;
};

/// Times the pipeline on k = 1..max_multiple copies of the dataset. With
/// repeats > 1 each multiple is run that many times and the fastest run kept.
inline std::vector<ScaleRow> run_scale(const Dataset& ds, const RunConfig& cfg,
                                       std::size_t max_multiple, std::size_t repeats = 1) {
    if (max_multiple < 2) throw UsageError("--max-multiple must be >= 2");
    if (repeats < 1) throw UsageError("--repeats must be >= 1");
    const RefineParams rp = cfg.resolved_refine(ds.dim);
    std::vector<Dataset> inputs;
    std::vector<ScaleRow> out(max_multiple);
    for (std::size_t k = 1; k <= max_multiple; ++k) {
        inputs.push_back(replicate(ds, k));
        out[k - 1].multiple = k;
        out[k - 1].rows = inputs.back().rows();
    }
    // repeats go round-robin over the multiples so a drift in machine speed
    // hits every multiple alike; the fastest run of each is kept
    for (std::size_t r = 0; r < repeats; ++r) {
        for (std::size_t k = 0; k < max_multiple; ++k) {
            const auto res = run_pipeline(inputs[k], cfg.tree, rp, cfg.do_refine);
            const double ms = res.phase1_ms + res.phase2_ms;
            if (r == 0 || ms < out[k].wall_ms) out[k].wall_ms = ms;
        }
    }
    for (std::size_t k = 1; k < max_multiple; ++k) out[k].delta_ms = out[k].wall_ms - out[k - 1].wall_ms;
    return out;
}

inline void write_scale_csv(std::ostream& out, const std::vector<ScaleRow>& rows) {
    out << "multiple,rows,wall_ms,delta_ms\n";
    for (const auto& r : rows) {
        out << r.multiple << "," << r.rows << "," << format_sig6(r.wall_ms) << ","
            << format_sig6(r.delta_ms) << "\n";
    }
}

/// Reads a row -> cluster assignment, either the "row_id,cluster" CSV or a
/// JSON report carrying an "assignment" array. Every dataset row must be
/// covered exactly once.
inline std::vector<long long> read_assignments(std::istream& in, std::size_t expected_rows,
                                               const std::string& source = "<assignments>") {
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) throw DataError(source + ": empty assignment file");

    std::vector<std::optional<long long>> seen(expected_rows);
    auto assign = [&](long long row, long long cluster) {
        if (row < 0 || static_cast<std::size_t>(row) >= expected_rows) {
            throw DataError(source + ": row id " + std::to_string(row) +
                            " is outside the dataset (" + std::to_string(expected_rows) +
                            " rows)");
        }
        auto& slot = seen[static_cast<std::size_t>(row)];
        if (slot) throw DataError(source + ": row id " + std::to_string(row) + " assigned twice");
        slot = cluster;
    };

    if (text[first] == '{' || text[first] == '[') {
        Json j;
        try {
            j = Json::parse(text);
        } catch (const Json::parse_error& e) {
            throw DataError(source + ": invalid JSON: " + e.what());
        }
        const Json& arr = j.is_object() ? j.at("assignment") : j;
        if (!arr.is_array()) throw DataError(source + ": 'assignment' must be an array");
        for (std::size_t r = 0; r < arr.size(); ++r) {
            assign(static_cast<long long>(r), arr[r].get<long long>());
        }
    } else {
        std::istringstream lines(text);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(lines, line)) {
            ++line_no;
            if (detail::trim(line).empty()) continue;
            const auto f = detail::split_fields(line);
            long long row = 0;
            long long cluster = 0;
            auto parse = [](std::string_view s, long long& v) {
                s = detail::trim(s);
                const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
                return ec == std::errc() && p == s.data() + s.size() && !s.empty();
            };
            if (f.size() != 2 || !parse(f[0], row) || !parse(f[1], cluster)) {
                if (line_no == 1) continue; // header
                throw DataError(source + ": line " + std::to_string(line_no) +
                                ": expected 'row_id,cluster'");
            }
            assign(row, cluster);
        }
    }

    std::vector<long long> out(expected_rows);
    std::vector<std::size_t> missing;
    for (std::size_t r = 0; r < expected_rows; ++r) {
        if (seen[r]) {
            out[r] = *seen[r];
        } else {
            missing.push_back(r);
        }
    }
    if (!missing.empty()) {
        std::string msg = source + ": " + std::to_string(missing.size()) +
                          " dataset rows have no assignment:";
        for (std::size_t k = 0; k < missing.size() && k < 20; ++k) {
            msg += " " + std::to_string(missing[k]);
        }
        if (missing.size() > 20) msg += " ...";
        throw DataError(msg);
    }
    return out;
}

/// Per-(cluster, class) precision and recall; zero-count pairs are omitted.
inline void write_pairs_csv(std::ostream& out, const ContingencyTable& t,
                            const std::vector<std::string>& class_names) {
    const auto pr = precision_recall(t);
    out << "cluster,class,count,precision,recall\n";
    for (std::size_t i = 0; i < t.clusters(); ++i) {
        for (std::size_t j = 0; j < t.classes(); ++j) {
            if (t.counts[i][j] == 0) continue;
            const auto cls = static_cast<std::size_t>(t.class_ids[j]);
            out << t.cluster_ids[i] << ","
                << (cls < class_names.size() ? class_names[cls] : std::to_string(cls)) << ","
                << t.counts[i][j] << "," << format_sig6(pr.precision[i][j]) << ","
                << format_sig6(pr.recall[i][j]) << "\n";
        }
    }
}

} // namespace cfrefine

#endif // CFREFINE_PIPELINE_HPP
