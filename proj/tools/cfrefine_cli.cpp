// cfrefine: CF-tree clustering with Gaussian-density refinement.
//
//   cfrefine cluster --input data/abalone.csv --label Rings --threshold 0.27 --rho 0.1
//   cfrefine sweep   --input data/abalone.csv --t-min 0.1 --t-max 1.0 --t-step 0.1
//   cfrefine scale   --input data/abalone.csv --max-multiple 8
//   cfrefine eval    --input data/abalone.csv --label Rings --assignments report.json

#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cfrefine/pipeline.hpp"

namespace {

using namespace cfrefine;

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

struct Options {
    std::string input;
    std::string features;
    std::string label;
    bool no_header = false;
    std::size_t branching = 8;
    double threshold = 0.5;
    double rho = 0.1;
    std::size_t n_min = 0; // 0: use d + 2
    double epsilon_scale = 1e-6;
    bool no_refine = false;
    std::string output = "-";
    std::string format = "json";

    double t_min = 0.1;
    double t_max = 1.0;
    double t_step = 0.1;
    std::size_t max_multiple = 8;
    std::size_t repeats = 1;
    std::string assignments;
    std::string pairs;
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

RunConfig make_config(const Options& o) {
    RunConfig cfg;
    cfg.input = o.input;
    cfg.csv.feature_columns = o.features.empty() ? abalone_features() : split_list(o.features);
    if (!o.label.empty()) cfg.csv.label_column = o.label;
    cfg.csv.has_header = !o.no_header;
    cfg.tree.branching_factor = o.branching;
    cfg.tree.threshold = o.threshold;
    cfg.refine.rho = o.rho;
    cfg.refine.epsilon_scale = o.epsilon_scale;
    if (o.n_min != 0) cfg.n_min = o.n_min;
    cfg.do_refine = !o.no_refine;
    cfg.output = o.output;
    cfg.format = o.format;
    cfg.validate();
    return cfg;
}

void with_output(const std::string& path, const std::function<void(std::ostream&)>& write) {
    if (path.empty() || path == "-") {
        write(std::cout);
        std::cout.flush();
        return;
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    write(out);
    if (!out) throw DataError("failed writing '" + path + "'");
}

void add_data_options(CLI::App* cmd, Options& o) {
    cmd->add_option("--input", o.input, "CSV file")->required();
    cmd->add_option("--features", o.features,
                    "comma-separated feature columns (default: the 7 Abalone measurements)");
    cmd->add_option("--label", o.label, "class label column");
    cmd->add_flag("--no-header", o.no_header, "file has no header; columns are 0-based indices");
    cmd->add_option("--output", o.output, "output path, '-' for stdout");
}

void add_algorithm_options(CLI::App* cmd, Options& o) {
    cmd->add_option("--branching", o.branching, "branching factor B (entries per node)")
        ->capture_default_str();
    cmd->add_option("--threshold", o.threshold, "leaf entry diameter threshold T")
        ->capture_default_str();
    cmd->add_option("--rho", o.rho, "normalized density split threshold")->capture_default_str();
    cmd->add_option("--n-min", o.n_min, "smallest micro-cluster eligible for splitting (default d+2)");
    cmd->add_option("--epsilon-scale", o.epsilon_scale, "covariance ridge scale")
        ->capture_default_str();
    cmd->add_flag("--no-refine", o.no_refine, "skip the Gaussian refinement phase");
}

int cmd_cluster(const Options& o) {
    const RunConfig cfg = make_config(o);
    const Dataset ds = load_csv(cfg.input, cfg.csv);
    const auto res = run_pipeline(ds, cfg.tree, cfg.resolved_refine(ds.dim), cfg.do_refine);
    if (cfg.format == "csv") {
        const auto assignment = assignment_of(res.clusters, ds.rows());
        with_output(cfg.output, [&](std::ostream& out) { write_assignment_csv(out, assignment); });
    } else {
        const Json report = cluster_report(ds, cfg, res);
        with_output(cfg.output, [&](std::ostream& out) { out << report.dump(2) << "\n"; });
    }
    return kOk;
}

int cmd_sweep(const Options& o) {
    const RunConfig cfg = make_config(o);
    const Dataset ds = load_csv(cfg.input, cfg.csv);
    const auto rows = run_sweep(ds, cfg, o.t_min, o.t_max, o.t_step);
    with_output(cfg.output, [&](std::ostream& out) { write_sweep_csv(out, rows); });
    return kOk;
}

int cmd_scale(const Options& o) {
    const RunConfig cfg = make_config(o);
    if (o.max_multiple < 2) throw UsageError("--max-multiple must be >= 2");
    const Dataset ds = load_csv(cfg.input, cfg.csv);
    const auto rows = run_scale(ds, cfg, o.max_multiple, o.repeats);
    with_output(cfg.output, [&](std::ostream& out) { write_scale_csv(out, rows); });
    return kOk;
}

int cmd_eval(const Options& o) {
    const RunConfig cfg = make_config(o);
    if (!cfg.csv.label_column) throw UsageError("eval requires --label");
    const Dataset ds = load_csv(cfg.input, cfg.csv);
    std::ifstream in(o.assignments);
    if (!in) throw DataError("cannot open '" + o.assignments + "'");
    const auto assignment = read_assignments(in, ds.rows(), o.assignments);
    const auto table = build_contingency(assignment, ds.labels);

    Json j;
    j["rows"] = ds.rows();
    j["clusters"] = table.clusters();
    j["classes"] = table.classes();
    j["metrics"] = metrics_json(table);
    with_output(cfg.output, [&](std::ostream& out) { out << j.dump(2) << "\n"; });
    if (!o.pairs.empty()) {
        with_output(o.pairs, [&](std::ostream& out) { write_pairs_csv(out, table, ds.class_names); });
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"CF-tree clustering with Gaussian-density refinement of micro-clusters"};
    app.require_subcommand(1);
    Options o;

    auto* cluster = app.add_subcommand("cluster", "build the CF-tree, refine, write a report");
    add_data_options(cluster, o);
    add_algorithm_options(cluster, o);
    cluster->add_option("--format", o.format, "json report or csv row->cluster table")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();

    auto* sweep = app.add_subcommand("sweep", "micro-cluster counts over a range of thresholds");
    add_data_options(sweep, o);
    add_algorithm_options(sweep, o);
    sweep->add_option("--t-min", o.t_min)->capture_default_str();
    sweep->add_option("--t-max", o.t_max)->capture_default_str();
    sweep->add_option("--t-step", o.t_step)->capture_default_str();

    auto* scale = app.add_subcommand("scale", "runtime on the dataset appended to itself k times");
    add_data_options(scale, o);
    add_algorithm_options(scale, o);
    scale->add_option("--max-multiple", o.max_multiple)->capture_default_str();
    scale->add_option("--repeats", o.repeats, "runs per multiple; the fastest is reported")
        ->capture_default_str();

    auto* eval = app.add_subcommand("eval", "entropy, purity, precision, recall of an assignment");
    add_data_options(eval, o);
    eval->add_option("--assignments", o.assignments, "row_id,cluster CSV or a cluster JSON report")
        ->required();
    eval->add_option("--pairs", o.pairs, "also write per-(cluster,class) precision/recall CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (cluster->parsed()) return cmd_cluster(o);
        if (sweep->parsed()) return cmd_sweep(o);
        if (scale->parsed()) return cmd_scale(o);
        if (eval->parsed()) return cmd_eval(o);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kData;
    }
    return kUsage;
}
