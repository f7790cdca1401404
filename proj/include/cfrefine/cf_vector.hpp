#ifndef CFREFINE_CF_VECTOR_HPP
#define CFREFINE_CF_VECTOR_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cfrefine/error.hpp"

namespace cfrefine {

/// Clustering feature <n, LS, SS> of a point set. LS and SS are kept per
/// dimension; radius and diameter sum SS over dimensions on demand.
struct CFVector {
    std::size_t n = 0;
    std::vector<double> ls;
    std::vector<double> ss;

    CFVector() = default;

    explicit CFVector(std::size_t dim) : ls(dim, 0.0), ss(dim, 0.0) {}

    /// Singleton CF of one point.
    static CFVector of_point(std::span<const double> x) {
        CFVector cf(x.size());
        cf.n = 1;
        for (std::size_t j = 0; j < x.size(); ++j) {
            cf.ls[j] = x[j];
            cf.ss[j] = x[j] * x[j];
        }
        return cf;
    }

    std::size_t dimension() const { return ls.size(); }

    void absorb(std::span<const double> x) {
        if (x.size() != ls.size()) {
            throw DataError("CF dimension mismatch: " + std::to_string(ls.size()) +
                            " vs point of dimension " + std::to_string(x.size()));
        }
        ++n;
        for (std::size_t j = 0; j < x.size(); ++j) {
            ls[j] += x[j];
            ss[j] += x[j] * x[j];
        }
    }

    CFVector& operator+=(const CFVector& other) {
        if (other.dimension() != dimension()) {
            throw DataError("CF dimension mismatch: " + std::to_string(dimension()) +
                            " vs " + std::to_string(other.dimension()));
        }
        n += other.n;
        for (std::size_t j = 0; j < ls.size(); ++j) {
            ls[j] += other.ls[j];
            ss[j] += other.ss[j];
        }
        return *this;
    }

    friend bool operator==(const CFVector&, const CFVector&) = default;
};

inline CFVector cf_add(const CFVector& a, const CFVector& b) {
    CFVector out = a;
    out += b;
    return out;
}

/// CF of a point collection; `rows` is any range of ranges of double.
template <class Rows>
CFVector cf_of(const Rows& rows, std::size_t dim) {
    CFVector cf(dim);
    for (const auto& row : rows) {
        cf.absorb(std::span<const double>(std::data(row), std::size(row)));
    }
    return cf;
}

namespace detail {

inline void require_nonempty(const CFVector& cf, const char* what) {
    if (cf.n == 0) {
        throw DataError(std::string(what) + " is undefined for an empty CF (n = 0)");
    }
}

inline double sum_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

inline double squared_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

} // namespace detail

inline std::vector<double> centroid(const CFVector& cf) {
    detail::require_nonempty(cf, "centroid");
    std::vector<double> c(cf.ls.size());
    const double n = static_cast<double>(cf.n);
    for (std::size_t j = 0; j < c.size(); ++j) c[j] = cf.ls[j] / n;
    return c;
}

/// Root-mean-square distance of members to the centroid.
inline double radius(const CFVector& cf) {
    detail::require_nonempty(cf, "radius");
    const double n = static_cast<double>(cf.n);
    double centroid_sq = 0.0;
    for (double s : cf.ls) centroid_sq += (s / n) * (s / n);
    const double radicand = detail::sum_of(cf.ss) / n - centroid_sq;
    return std::sqrt(std::max(radicand, 0.0));
}

/// Root-mean-square pairwise member distance; 0 for a single point.
inline double diameter(const CFVector& cf) {
    detail::require_nonempty(cf, "diameter");
    if (cf.n == 1) return 0.0;
    const double n = static_cast<double>(cf.n);
    const double radicand =
        (2.0 * n * detail::sum_of(cf.ss) - 2.0 * detail::squared_norm(cf.ls)) / (n * (n - 1.0));
    return std::sqrt(std::max(radicand, 0.0));
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double d = a[j] - b[j];
        s += d * d;
    }
    return s;
}

} // namespace cfrefine

#endif // CFREFINE_CF_VECTOR_HPP
