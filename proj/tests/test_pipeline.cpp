#include <algorithm>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "cfrefine/pipeline.hpp"

using namespace cfrefine;

namespace {

const Dataset& abalone() {
    static const Dataset ds =
        load_csv(CFREFINE_DATA_DIR "/abalone.csv", {abalone_features(), std::string("Rings"), true});
    return ds;
}

RunConfig abalone_config(double threshold, bool refine_on = true) {
    RunConfig cfg;
    cfg.input = "abalone.csv";
    cfg.csv = {abalone_features(), std::string("Rings"), true};
    cfg.tree.threshold = threshold;
    cfg.do_refine = refine_on;
    return cfg;
}

Json without_timings(Json j) {
    j.erase("timings_ms");
    return j;
}

} // namespace

TEST(Pipeline, RefineOffKeepsPhaseOneClusters) {
    const auto cfg = abalone_config(0.27, false);
    const auto res = run_pipeline(abalone(), cfg.tree, cfg.resolved_refine(7), false);
    EXPECT_EQ(res.clusters.size(), res.phase1.size());
    const auto report = cluster_report(abalone(), cfg, res);
    EXPECT_EQ(report["phase1_cluster_count"], report["phase2_cluster_count"]);
}

TEST(Pipeline, RefineOnAddsClustersOnAbalone) {
    const auto cfg = abalone_config(0.27);
    const auto res = run_pipeline(abalone(), cfg.tree, cfg.resolved_refine(7), true);
    EXPECT_GT(res.clusters.size(), res.phase1.size());
}

TEST(Pipeline, ReportIsConsistent) {
    const auto cfg = abalone_config(0.4);
    const auto res = run_pipeline(abalone(), cfg.tree, cfg.resolved_refine(7), true);
    const auto j = cluster_report(abalone(), cfg, res);
    const auto& assignment = j["assignment"];
    ASSERT_EQ(assignment.size(), abalone().rows());
    std::vector<std::size_t> sizes(j["clusters"].size(), 0);
    for (const auto& a : assignment) ++sizes[a.get<std::size_t>()];
    for (std::size_t c = 0; c < sizes.size(); ++c) {
        EXPECT_EQ(sizes[c], j["clusters"][c]["size"].get<std::size_t>());
    }
    EXPECT_EQ(j["params"]["n_min"], 9);
    EXPECT_TRUE(j.contains("metrics"));
    EXPECT_TRUE(j["timings_ms"].contains("phase1"));
}

TEST(Pipeline, ReportIsDeterministic) {
    const auto cfg = abalone_config(0.27);
    const auto a = run_pipeline(abalone(), cfg.tree, cfg.resolved_refine(7), true);
    const auto b = run_pipeline(abalone(), cfg.tree, cfg.resolved_refine(7), true);
    EXPECT_EQ(without_timings(cluster_report(abalone(), cfg, a)).dump(),
              without_timings(cluster_report(abalone(), cfg, b)).dump());
}

TEST(Pipeline, ConfigValidation) {
    auto cfg = abalone_config(0.27);
    cfg.refine.rho = -0.1;
    EXPECT_THROW(cfg.validate(), UsageError);
    cfg = abalone_config(0.27);
    cfg.n_min = 1;
    EXPECT_THROW(cfg.validate(), UsageError);
    cfg = abalone_config(0.27);
    cfg.format = "xml";
    EXPECT_THROW(cfg.validate(), UsageError);
    cfg = abalone_config(0.27);
    cfg.tree.branching_factor = 1;
    EXPECT_THROW(cfg.validate(), UsageError);
}

TEST(Sweep, ThresholdGrid) {
    const auto ts = sweep_thresholds(0.1, 1.0, 0.1);
    ASSERT_EQ(ts.size(), 10u);
    EXPECT_DOUBLE_EQ(ts.front(), 0.1);
    EXPECT_NEAR(ts.back(), 1.0, 1e-12);
    EXPECT_EQ(sweep_thresholds(0.5, 0.5, 0.1).size(), 1u);
    EXPECT_THROW(sweep_thresholds(0.0, 1.0, 0.1), UsageError);
    EXPECT_THROW(sweep_thresholds(0.5, 0.4, 0.1), UsageError);
    EXPECT_THROW(sweep_thresholds(0.1, 1.0, 0.0), UsageError);
}

TEST(Sweep, CsvLayout) {
    const auto rows = run_sweep(abalone(), abalone_config(0.27), 0.3, 0.5, 0.1);
    ASSERT_EQ(rows.size(), 3u);
    std::ostringstream out;
    write_sweep_csv(out, rows);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "threshold,phase1_count,phase2_count,ratio");
    std::getline(in, line);
    EXPECT_EQ(line.substr(0, 4), "0.3,");
    for (const auto& r : rows) {
        EXPECT_DOUBLE_EQ(r.ratio, static_cast<double>(r.phase2_count) / r.phase1_count);
    }
}

TEST(Scale, RowsAreMultiplesOfTheDataset) {
    const auto rows = run_scale(abalone(), abalone_config(0.27), 3);
    ASSERT_EQ(rows.size(), 3u);
    for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_EQ(rows[k].multiple, k + 1);
        EXPECT_EQ(rows[k].rows, 4177 * (k + 1));
    }
    EXPECT_EQ(rows[0].delta_ms, 0.0);
    EXPECT_DOUBLE_EQ(rows[2].delta_ms, rows[2].wall_ms - rows[1].wall_ms);
    EXPECT_THROW(run_scale(abalone(), abalone_config(0.27), 1), UsageError);
}

TEST(FormatSig6, SixSignificantDigits) {
    EXPECT_EQ(format_sig6(1.0 / 3.0), "0.333333");
    EXPECT_EQ(format_sig6(1234567.0), "1.23457e+06");
    EXPECT_EQ(format_sig6(2.0), "2");
}

TEST(ReadAssignments, CsvWithHeader) {
    std::istringstream in("row_id,cluster\n1,7\n0,3\n2,7\n");
    EXPECT_EQ(read_assignments(in, 3), (std::vector<long long>{3, 7, 7}));
}

TEST(ReadAssignments, JsonReportOrArray) {
    std::istringstream report(R"({"assignment": [2, 0, 1]})");
    EXPECT_EQ(read_assignments(report, 3), (std::vector<long long>{2, 0, 1}));
    std::istringstream array("[4, 4]");
    EXPECT_EQ(read_assignments(array, 2), (std::vector<long long>{4, 4}));
}

TEST(ReadAssignments, CoverageErrors) {
    std::istringstream missing("row_id,cluster\n0,1\n3,1\n");
    try {
        read_assignments(missing, 4);
        FAIL() << "expected coverage error";
    } catch (const DataError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("2 dataset rows"), std::string::npos) << msg;
        EXPECT_NE(msg.find(" 1 2"), std::string::npos) << msg;
    }
    std::istringstream dup("0,1\n0,2\n");
    EXPECT_THROW(read_assignments(dup, 1), DataError);
    std::istringstream outside("0,1\n5,2\n");
    EXPECT_THROW(read_assignments(outside, 1), DataError);
    std::istringstream garbage("row_id,cluster\n0,x\n");
    EXPECT_THROW(read_assignments(garbage, 1), DataError);
    std::istringstream empty("");
    EXPECT_THROW(read_assignments(empty, 1), DataError);
}

TEST(Eval, GroundTruthIsPerfect) {
    std::vector<long long> truth(abalone().labels.begin(), abalone().labels.end());
    const auto m = metrics_json(build_contingency(truth, abalone().labels));
    EXPECT_DOUBLE_EQ(m["purity"].get<double>(), 1.0);
    EXPECT_DOUBLE_EQ(m["entropy"].get<double>(), 0.0);
}

TEST(Eval, SingleClusterPurityIsLargestClassShare) {
    const auto& ds = abalone();
    std::vector<std::size_t> hist(ds.class_names.size(), 0);
    for (int l : ds.labels) ++hist[static_cast<std::size_t>(l)];
    const double share = static_cast<double>(*std::max_element(hist.begin(), hist.end())) /
                         static_cast<double>(ds.rows());
    const std::vector<long long> one(ds.rows(), 0);
    EXPECT_NEAR(purity(build_contingency(one, ds.labels)), share, 1e-15);
    EXPECT_NEAR(share, 689.0 / 4177.0, 1e-15);
}

TEST(Eval, ReportRoundTripGivesSameMetrics) {
    const auto cfg = abalone_config(0.27);
    const auto res = run_pipeline(abalone(), cfg.tree, cfg.resolved_refine(7), true);
    const auto report = cluster_report(abalone(), cfg, res);
    std::istringstream in(report.dump());
    const auto assignment = read_assignments(in, abalone().rows());
    EXPECT_EQ(metrics_json(build_contingency(assignment, abalone().labels)), report["metrics"]);

    std::ostringstream csv;
    write_assignment_csv(csv, assignment);
    std::istringstream csv_in(csv.str());
    EXPECT_EQ(read_assignments(csv_in, abalone().rows()), assignment);
}

TEST(Eval, PairsTable) {
    const auto t = build_contingency({0, 0, 1}, {0, 1, 1});
    std::ostringstream out;
    write_pairs_csv(out, t, {"A", "B"});
    EXPECT_EQ(out.str(),
              "cluster,class,count,precision,recall\n"
              "0,A,1,0.5,1\n"
              "0,B,1,0.5,0.5\n"
              "1,B,1,1,0.5\n");
}
