#ifndef CFREFINE_METRICS_HPP
#define CFREFINE_METRICS_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cfrefine/error.hpp"

namespace cfrefine {

/// Cluster-by-class counts. Rows follow ascending cluster id, columns
/// ascending class id.
struct ContingencyTable {
    std::vector<std::vector<std::size_t>> counts;
    std::vector<std::size_t> cluster_sizes;
    std::vector<std::size_t> class_sizes;
    std::vector<long long> cluster_ids;
    std::vector<int> class_ids;
    std::size_t total = 0;

    std::size_t clusters() const { return counts.size(); }
    std::size_t classes() const { return class_sizes.size(); }

    /// Builds the margins from a raw count matrix.
    static ContingencyTable from_counts(std::vector<std::vector<std::size_t>> counts) {
        ContingencyTable t;
        const std::size_t c = counts.empty() ? 0 : counts.front().size();
        t.class_sizes.assign(c, 0);
        for (std::size_t i = 0; i < counts.size(); ++i) {
            if (counts[i].size() != c) throw DataError("contingency table rows are ragged");
            std::size_t row = 0;
            for (std::size_t j = 0; j < c; ++j) {
                row += counts[i][j];
                t.class_sizes[j] += counts[i][j];
            }
            t.cluster_sizes.push_back(row);
            t.total += row;
            t.cluster_ids.push_back(static_cast<long long>(i));
        }
        for (std::size_t j = 0; j < c; ++j) t.class_ids.push_back(static_cast<int>(j));
        t.counts = std::move(counts);
        return t;
    }
};

/// assignments[r] is the cluster of row r; labels[r] its class.
inline ContingencyTable build_contingency(const std::vector<long long>& assignments,
                                          const std::vector<int>& labels) {
    if (labels.size() < assignments.size()) {
        throw DataError("row " + std::to_string(labels.size()) + " is assigned but has no label");
    }
    std::map<long long, std::size_t> cluster_index;
    std::map<int, std::size_t> class_index;
    for (std::size_t r = 0; r < assignments.size(); ++r) {
        cluster_index.emplace(assignments[r], 0);
        class_index.emplace(labels[r], 0);
    }
    ContingencyTable t;
    for (auto& [id, idx] : cluster_index) {
        idx = t.cluster_ids.size();
        t.cluster_ids.push_back(id);
    }
    for (auto& [id, idx] : class_index) {
        idx = t.class_ids.size();
        t.class_ids.push_back(id);
    }
    t.counts.assign(t.cluster_ids.size(), std::vector<std::size_t>(t.class_ids.size(), 0));
    t.cluster_sizes.assign(t.cluster_ids.size(), 0);
    t.class_sizes.assign(t.class_ids.size(), 0);
    for (std::size_t r = 0; r < assignments.size(); ++r) {
        const std::size_t i = cluster_index[assignments[r]];
        const std::size_t j = class_index[labels[r]];
        ++t.counts[i][j];
        ++t.cluster_sizes[i];
        ++t.class_sizes[j];
    }
    t.total = assignments.size();
    return t;
}

namespace detail {

inline void require_rows(const ContingencyTable& t, const char* what) {
    if (t.total == 0) throw DataError(std::string(what) + ": empty contingency table");
}

inline std::size_t majority_class(const std::vector<std::size_t>& row) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < row.size(); ++j) {
        if (row[j] > row[best]) best = j;
    }
    return best;
}

} // namespace detail

/// Size-weighted cluster entropy in bits.
inline double entropy(const ContingencyTable& t) {
    detail::require_rows(t, "entropy");
    const double m = static_cast<double>(t.total);
    double e = 0.0;
    for (std::size_t i = 0; i < t.clusters(); ++i) {
        const double mi = static_cast<double>(t.cluster_sizes[i]);
        if (mi == 0.0) continue;
        double ei = 0.0;
        for (std::size_t count : t.counts[i]) {
            if (count == 0) continue;
            const double p = static_cast<double>(count) / mi;
            ei -= p * std::log2(p);
        }
        e += (mi / m) * ei;
    }
    return e;
}

inline double purity(const ContingencyTable& t) {
    detail::require_rows(t, "purity");
    std::size_t hits = 0;
    for (const auto& row : t.counts) {
        if (!row.empty()) hits += row[detail::majority_class(row)];
    }
    return static_cast<double>(hits) / static_cast<double>(t.total);
}

struct PrecisionRecall {
    std::vector<std::vector<double>> precision; // [cluster][class]
    std::vector<std::vector<double>> recall;
    double weighted_precision = 0.0; // over each cluster's majority class
    double weighted_recall = 0.0;
};

inline PrecisionRecall precision_recall(const ContingencyTable& t) {
    detail::require_rows(t, "precision_recall");
    PrecisionRecall pr;
    const double m = static_cast<double>(t.total);
    for (std::size_t i = 0; i < t.clusters(); ++i) {
        std::vector<double> p(t.classes(), 0.0);
        std::vector<double> r(t.classes(), 0.0);
        for (std::size_t j = 0; j < t.classes(); ++j) {
            const double mij = static_cast<double>(t.counts[i][j]);
            if (t.cluster_sizes[i] > 0) p[j] = mij / static_cast<double>(t.cluster_sizes[i]);
            if (t.class_sizes[j] > 0) r[j] = mij / static_cast<double>(t.class_sizes[j]);
        }
        if (t.classes() > 0) {
            const std::size_t maj = detail::majority_class(t.counts[i]);
            const double w = static_cast<double>(t.cluster_sizes[i]) / m;
            pr.weighted_precision += w * p[maj];
            pr.weighted_recall += w * r[maj];
        }
        pr.precision.push_back(std::move(p));
        pr.recall.push_back(std::move(r));
    }
    return pr;
}

} // namespace cfrefine

#endif // CFREFINE_METRICS_HPP
