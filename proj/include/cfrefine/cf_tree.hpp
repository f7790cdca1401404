#ifndef CFREFINE_CF_TREE_HPP
#define CFREFINE_CF_TREE_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cfrefine/cf_vector.hpp"
#include "cfrefine/error.hpp"

namespace cfrefine {

struct CFTreeParams {
    std::size_t branching_factor = 8; // max entries per node, leaves included
    double threshold = 0.5;           // max diameter of a leaf entry

    void validate() const {
        if (branching_factor < 2) {
            throw UsageError("branching factor must be >= 2, got " +
                             std::to_string(branching_factor));
        }
        if (!(threshold > 0.0) || !std::isfinite(threshold)) {
            throw UsageError("diameter threshold must be a positive finite number, got " +
                             std::to_string(threshold));
        }
    }
};

/// A leaf-level cluster: its CF plus the row ids it summarizes.
struct MicroCluster {
    CFVector cf;
    std::vector<std::size_t> members;
};

struct CFNode;

/// One slot of a node. Internal entries own a child subtree; leaf entries
/// hold the row ids of their members.
struct CFEntry {
    CFVector cf;
    std::unique_ptr<CFNode> child;
    std::vector<std::size_t> members;
};

struct CFNode {
    bool leaf = true;
    std::vector<CFEntry> entries;

    CFVector summary(std::size_t dim) const {
        CFVector cf(dim);
        for (const auto& e : entries) cf += e.cf;
        return cf;
    }
};

namespace detail {

inline double centroid_distance_sq(const CFVector& cf, std::span<const double> x) {
    const double n = static_cast<double>(cf.n);
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double d = cf.ls[j] / n - x[j];
        s += d * d;
    }
    return s;
}

inline double centroid_distance_sq(const CFVector& a, const CFVector& b) {
    const double na = static_cast<double>(a.n);
    const double nb = static_cast<double>(b.n);
    double s = 0.0;
    for (std::size_t j = 0; j < a.ls.size(); ++j) {
        const double d = a.ls[j] / na - b.ls[j] / nb;
        s += d * d;
    }
    return s;
}

// Entry wrapping `node` for insertion into its parent.
inline CFEntry entry_for(CFNode node, std::size_t dim) {
    CFEntry e;
    e.cf = node.summary(dim);
    e.child = std::make_unique<CFNode>(std::move(node));
    return e;
}

} // namespace detail

/// Index of the entry whose centroid is nearest (Euclidean) to `x`; ties go
/// to the lowest index.
inline std::size_t choose_closest_entry(const CFNode& node, std::span<const double> x) {
    if (node.entries.empty()) {
        throw DataError("choose_closest_entry: node has no entries");
    }
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < node.entries.size(); ++i) {
        const double d = detail::centroid_distance_sq(node.entries[i].cf, x);
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

/// Splits an overflowing node in two. The farthest pair of entry centroids
/// seeds the halves and every other entry joins the nearer seed (ties to
/// the first). Entry order within each half follows the input order.
/// With a `capacity`, an entry whose nearer half is already full goes to
/// the other half instead.
inline std::pair<CFNode, CFNode> split_node(
    CFNode node, std::size_t capacity = std::numeric_limits<std::size_t>::max()) {
    auto& entries = node.entries;
    if (entries.size() < 2) {
        throw DataError("split_node: need at least 2 entries, got " +
                        std::to_string(entries.size()));
    }
    std::size_t seed_a = 0;
    std::size_t seed_b = 1;
    double far = -1.0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        for (std::size_t j = i + 1; j < entries.size(); ++j) {
            const double d = detail::centroid_distance_sq(entries[i].cf, entries[j].cf);
            if (d > far) {
                far = d;
                seed_a = i;
                seed_b = j;
            }
        }
    }

    std::vector<bool> to_first(entries.size(), true);
    std::size_t count_a = 1;
    std::size_t count_b = 1;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i == seed_b) {
            to_first[i] = false;
        } else if (i != seed_a) {
            const double da = detail::centroid_distance_sq(entries[i].cf, entries[seed_a].cf);
            const double db = detail::centroid_distance_sq(entries[i].cf, entries[seed_b].cf);
            bool first = da <= db;
            if (first && count_a >= capacity) first = false;
            else if (!first && count_b >= capacity) first = true;
            to_first[i] = first;
            ++(first ? count_a : count_b);
        }
    }

    CFNode first;
    CFNode second;
    first.leaf = second.leaf = node.leaf;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        (to_first[i] ? first : second).entries.push_back(std::move(entries[i]));
    }
    return {std::move(first), std::move(second)};
}

/// Post-split refinement at the node where split propagation stopped: if
/// the closest pair of child entries is not the pair the split just made,
/// the two children are merged into one node, which is re-split at once if
/// it exceeds `branching_factor`. Only internal nodes are touched; merging
/// leaf entries would grow micro-clusters past the diameter threshold.
inline void merge_refine(CFNode& node, std::pair<std::size_t, std::size_t> excluded,
                         std::size_t branching_factor) {
    if (node.leaf || node.entries.size() < 3) return;
    if (excluded.first > excluded.second) std::swap(excluded.first, excluded.second);

    std::size_t ci = 0;
    std::size_t cj = 1;
    double near = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < node.entries.size(); ++i) {
        for (std::size_t j = i + 1; j < node.entries.size(); ++j) {
            const double d =
                detail::centroid_distance_sq(node.entries[i].cf, node.entries[j].cf);
            if (d < near) {
                near = d;
                ci = i;
                cj = j;
            }
        }
    }
    if (ci == excluded.first && cj == excluded.second) return;

    const std::size_t dim = node.entries[ci].cf.dimension();
    CFEntry& keep = node.entries[ci];
    CFEntry& gone = node.entries[cj];
    keep.cf += gone.cf;
    for (auto& e : gone.child->entries) keep.child->entries.push_back(std::move(e));
    node.entries.erase(node.entries.begin() + static_cast<std::ptrdiff_t>(cj));

    CFEntry& merged = node.entries[ci];
    if (merged.child->entries.size() > branching_factor) {
        auto [a, b] = split_node(std::move(*merged.child), branching_factor);
        merged = detail::entry_for(std::move(a), dim);
        node.entries.insert(node.entries.begin() + static_cast<std::ptrdiff_t>(ci) + 1,
                            detail::entry_for(std::move(b), dim));
    }
}

/// In-memory CF-tree built by a single sequential scan. Not safe for
/// concurrent inserts; a finished tree may be read from any thread.
class CFTree {
public:
    CFTree(CFTreeParams params, std::size_t dim)
        : params_(params), dim_(dim), root_(std::make_unique<CFNode>()) {
        params_.validate();
        if (dim_ == 0) throw UsageError("CF tree dimension must be >= 1");
    }

    void insert(std::size_t row_id, std::span<const double> x) {
        if (x.size() != dim_) {
            throw DataError("insert: point of dimension " + std::to_string(x.size()) +
                            " into tree of dimension " + std::to_string(dim_));
        }
        for (double v : x) {
            if (!std::isfinite(v)) {
                throw DataError("insert: row " + std::to_string(row_id) +
                                " has a non-finite value");
            }
        }
        const CFVector point = CFVector::of_point(x);
        if (insert_into(*root_, row_id, x, point)) {
            auto [a, b] = split_node(std::move(*root_));
            auto root = std::make_unique<CFNode>();
            root->leaf = false;
            root->entries.push_back(detail::entry_for(std::move(a), dim_));
            root->entries.push_back(detail::entry_for(std::move(b), dim_));
            root_ = std::move(root);
            ++height_;
        }
        ++size_;
    }

    /// One micro-cluster per leaf entry, in left-to-right order.
    std::vector<MicroCluster> leaf_micro_clusters() const {
        std::vector<MicroCluster> out;
        collect(*root_, out);
        return out;
    }

    const CFNode& root() const { return *root_; }
    const CFTreeParams& params() const { return params_; }
    std::size_t dimension() const { return dim_; }
    std::size_t size() const { return size_; }
    std::size_t height() const { return height_; }

private:
    // Returns true when `node` now holds more than B entries and the caller
    // must split it.
    bool insert_into(CFNode& node, std::size_t row_id, std::span<const double> x,
                     const CFVector& point) {
        const std::size_t cap = params_.branching_factor;
        if (node.leaf) {
            if (!node.entries.empty()) {
                CFEntry& e = node.entries[choose_closest_entry(node, x)];
                CFVector tentative = cf_add(e.cf, point);
                if (diameter(tentative) <= params_.threshold) {
                    e.cf = std::move(tentative);
                    e.members.push_back(row_id);
                    return false;
                }
            }
            CFEntry fresh;
            fresh.cf = point;
            fresh.members.push_back(row_id);
            node.entries.push_back(std::move(fresh));
            return node.entries.size() > cap;
        }

        const std::size_t i = choose_closest_entry(node, x);
        node.entries[i].cf += point;
        if (!insert_into(*node.entries[i].child, row_id, x, point)) return false;

        auto [a, b] = split_node(std::move(*node.entries[i].child));
        node.entries[i] = detail::entry_for(std::move(a), dim_);
        node.entries.insert(node.entries.begin() + static_cast<std::ptrdiff_t>(i) + 1,
                            detail::entry_for(std::move(b), dim_));
        if (node.entries.size() > cap) return true;
        merge_refine(node, {i, i + 1}, cap);
        return false;
    }

    static void collect(const CFNode& node, std::vector<MicroCluster>& out) {
        for (const auto& e : node.entries) {
            if (node.leaf) {
                out.push_back(MicroCluster{e.cf, e.members});
            } else {
                collect(*e.child, out);
            }
        }
    }

    CFTreeParams params_;
    std::size_t dim_;
    std::unique_ptr<CFNode> root_;
    std::size_t size_ = 0;
    std::size_t height_ = 1;
};

} // namespace cfrefine

#endif // CFREFINE_CF_TREE_HPP
