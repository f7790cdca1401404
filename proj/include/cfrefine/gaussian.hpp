#ifndef CFREFINE_GAUSSIAN_HPP
#define CFREFINE_GAUSSIAN_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cfrefine/cf_tree.hpp"
#include "cfrefine/dataset.hpp"
#include "cfrefine/error.hpp"

namespace cfrefine {

/// Dense row-major square matrix, sized for per-cluster covariances.
class SquareMatrix {
public:
    SquareMatrix() = default;
    explicit SquareMatrix(std::size_t n, double fill = 0.0) : n_(n), a_(n * n, fill) {}

    static SquareMatrix identity(std::size_t n) {
        SquareMatrix m(n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t size() const { return n_; }
    double& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }

    double trace() const {
        double t = 0.0;
        for (std::size_t i = 0; i < n_; ++i) t += (*this)(i, i);
        return t;
    }

private:
    std::size_t n_ = 0;
    std::vector<double> a_;
};

/// Lower Cholesky factor L with L L^T = m, or nullopt if m is not
/// numerically positive definite.
inline std::optional<SquareMatrix> cholesky(const SquareMatrix& m) {
    const std::size_t n = m.size();
    SquareMatrix l(n);
    for (std::size_t j = 0; j < n; ++j) {
        double diag = m(j, j);
        for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
        if (!(diag > 0.0) || !std::isfinite(diag)) return std::nullopt;
        const double ljj = std::sqrt(diag);
        l(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = m(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / ljj;
        }
    }
    return l;
}

struct RefineParams {
    double rho = 0.1;            // split members whose normalized density is below this
    std::size_t n_min = 2;       // smaller clusters are never split
    double epsilon_scale = 1e-6; // ridge added to the covariance, relative to trace/d

    static std::size_t default_n_min(std::size_t dim) { return dim + 2; }

    void validate() const {
        if (!(rho >= 0.0 && rho <= 1.0)) {
            throw UsageError("rho must lie in [0, 1], got " + std::to_string(rho));
        }
        if (n_min < 2) throw UsageError("n_min must be >= 2, got " + std::to_string(n_min));
        if (!(epsilon_scale > 0.0) || !std::isfinite(epsilon_scale)) {
            throw UsageError("epsilon_scale must be positive, got " +
                             std::to_string(epsilon_scale));
        }
    }
};

struct GaussianModel {
    std::vector<double> mu;
    SquareMatrix sigma; // regularized covariance
    SquareMatrix chol;  // lower factor of sigma
    double log_det = 0.0;

    std::size_t dimension() const { return mu.size(); }

    /// Model with a given mean and covariance, no regularization applied.
    static GaussianModel from(std::vector<double> mean, SquareMatrix cov) {
        if (cov.size() != mean.size()) throw DataError("GaussianModel: mean/covariance size mismatch");
        auto l = cholesky(cov);
        if (!l) throw NumericalError("GaussianModel: covariance is not positive definite");
        GaussianModel g;
        g.mu = std::move(mean);
        g.sigma = std::move(cov);
        g.chol = std::move(*l);
        for (std::size_t i = 0; i < g.mu.size(); ++i) g.log_det += 2.0 * std::log(g.chol(i, i));
        return g;
    }
};

template <class Rows>
std::vector<double> mean_vector(const Rows& points) {
    if (std::empty(points)) throw DataError("mean_vector: no points");
    const std::size_t d = std::size(*std::begin(points));
    std::vector<double> mu(d, 0.0);
    std::size_t n = 0;
    for (const auto& p : points) {
        if (std::size(p) != d) throw DataError("mean_vector: ragged point dimensions");
        for (std::size_t j = 0; j < d; ++j) mu[j] += p[j];
        ++n;
    }
    for (double& v : mu) v /= static_cast<double>(n);
    return mu;
}

/// Maximum-likelihood (1/n) covariance about `mu`. For the unbiased
/// estimator divide by (n - 1) instead.
template <class Rows>
SquareMatrix covariance_matrix(const Rows& points, std::span<const double> mu) {
    const std::size_t n = static_cast<std::size_t>(std::size(points));
    if (n < 2) throw DataError("covariance_matrix: need at least 2 points, got " + std::to_string(n));
    const std::size_t d = mu.size();
    SquareMatrix s(d);
    std::vector<double> c(d);
    for (const auto& p : points) {
        if (std::size(p) != d) throw DataError("covariance_matrix: point dimension mismatch");
        for (std::size_t j = 0; j < d; ++j) c[j] = p[j] - mu[j];
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j <= i; ++j) s(i, j) += c[i] * c[j];
        }
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            s(i, j) *= inv_n;
            s(j, i) = s(i, j);
        }
    }
    return s;
}

/// Mean and covariance plus a ridge eps*I, eps = epsilon_scale * max(trace/d, 1e-12).
template <class Rows>
GaussianModel fit_gaussian(const Rows& points, const RefineParams& params) {
    GaussianModel g;
    g.mu = mean_vector(points);
    g.sigma = covariance_matrix(points, g.mu);
    const std::size_t d = g.mu.size();
    const double eps =
        params.epsilon_scale * std::max(g.sigma.trace() / static_cast<double>(d), 1e-12);
    for (std::size_t i = 0; i < d; ++i) g.sigma(i, i) += eps;

    try {
        return GaussianModel::from(std::move(g.mu), std::move(g.sigma));
    } catch (const NumericalError&) {
        throw NumericalError("fit_gaussian: covariance of " + std::to_string(std::size(points)) +
                             " points is not positive definite after regularization");
    }
}

/// Log of the multivariate normal pdf, via one forward substitution with
/// the Cholesky factor.
inline double log_density(std::span<const double> x, const GaussianModel& g) {
    const std::size_t d = g.dimension();
    if (x.size() != d) throw DataError("log_density: dimension mismatch");
    std::vector<double> y(d);
    double quad = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        double s = x[i] - g.mu[i];
        for (std::size_t k = 0; k < i; ++k) s -= g.chol(i, k) * y[k];
        y[i] = s / g.chol(i, i);
        quad += y[i] * y[i];
    }
    const double log_2pi = std::log(2.0 * std::numbers::pi);
    return -0.5 * static_cast<double>(d) * log_2pi - 0.5 * g.log_det - 0.5 * quad;
}

struct NormalizedDensities {
    std::vector<double> values;
    bool degenerate = false; // all densities equal; nothing to split on
};

/// Min-max normalization of densities given as logs. Shifting by the max
/// log first keeps exp() in range; min-max ignores the common scale factor.
inline NormalizedDensities normalize_densities(std::span<const double> log_f) {
    if (log_f.empty()) throw DataError("normalize_densities: no values");
    const auto [lo_it, hi_it] = std::minmax_element(log_f.begin(), log_f.end());
    const double hi = *hi_it;
    NormalizedDensities out;
    out.values.resize(log_f.size());
    if (*lo_it == hi) {
        std::fill(out.values.begin(), out.values.end(), 1.0);
        out.degenerate = true;
        return out;
    }
    const double r_min = std::exp(*lo_it - hi);
    const double range = 1.0 - r_min;
    if (!(range > 0.0)) {
        std::fill(out.values.begin(), out.values.end(), 1.0);
        out.degenerate = true;
        return out;
    }
    for (std::size_t k = 0; k < log_f.size(); ++k) {
        out.values[k] = (std::exp(log_f[k] - hi) - r_min) / range;
    }
    out.values[static_cast<std::size_t>(lo_it - log_f.begin())] = 0.0;
    out.values[static_cast<std::size_t>(hi_it - log_f.begin())] = 1.0;
    return out;
}

namespace detail {

inline std::vector<std::span<const double>> gather_rows(const Dataset& ds,
                                                        const std::vector<std::size_t>& ids) {
    std::vector<std::span<const double>> rows;
    rows.reserve(ids.size());
    for (std::size_t id : ids) {
        if (id >= ds.rows()) {
            throw DataError("micro-cluster member " + std::to_string(id) +
                            " is outside the dataset (" + std::to_string(ds.rows()) + " rows)");
        }
        rows.push_back(ds.row(id));
    }
    return rows;
}

inline MicroCluster make_cluster(const Dataset& ds, std::vector<std::size_t> ids) {
    MicroCluster mc;
    mc.cf = cf_of(gather_rows(ds, ids), ds.dim);
    mc.members = std::move(ids);
    return mc;
}

} // namespace detail

/// Splits off the members whose normalized density falls below rho. Returns
/// the cluster unchanged when it is smaller than n_min, when normalization is
/// degenerate, or when one side would be empty; otherwise returns the kept
/// part followed by the low-density part.
inline std::vector<MicroCluster> split_cluster(const MicroCluster& mc, const Dataset& ds,
                                               const RefineParams& params) {
    if (mc.members.size() < params.n_min) return {mc};

    const auto rows = detail::gather_rows(ds, mc.members);
    GaussianModel g;
    try {
        g = fit_gaussian(rows, params);
    } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + " (micro-cluster starting at row " +
                             std::to_string(mc.members.front()) + ")");
    }

    std::vector<double> log_f(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) log_f[k] = log_density(rows[k], g);
    const auto norm = normalize_densities(log_f);
    if (norm.degenerate) return {mc};

    std::vector<std::size_t> kept;
    std::vector<std::size_t> low;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        (norm.values[k] < params.rho ? low : kept).push_back(mc.members[k]);
    }
    if (kept.empty() || low.empty()) return {mc};

    std::vector<MicroCluster> out;
    out.push_back(detail::make_cluster(ds, std::move(kept)));
    out.push_back(detail::make_cluster(ds, std::move(low)));
    return out;
}

/// One refinement pass over all micro-clusters, results in input order.
inline std::vector<MicroCluster> refine(const std::vector<MicroCluster>& clusters,
                                        const Dataset& ds, const RefineParams& params) {
    params.validate();
    std::vector<MicroCluster> out;
    out.reserve(clusters.size() * 2);
    for (const auto& mc : clusters) {
        for (auto& part : split_cluster(mc, ds, params)) out.push_back(std::move(part));
    }
    return out;
}

} // namespace cfrefine

#endif // CFREFINE_GAUSSIAN_HPP
