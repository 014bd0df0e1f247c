#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dwarfeval/error.hpp"
#include "dwarfeval/parallel.hpp"
#include "dwarfeval/rng.hpp"

namespace dwarfeval::kernels {

using Key = std::int64_t;
using NodeId = std::uint32_t;
inline constexpr NodeId no_node = UINT32_MAX;

/// A B+Tree node. Internal nodes hold `children.size() - 1` separator keys,
/// separator i being the smallest key reachable through child i + 1.
/// Leaves hold sorted keys and the id of the next leaf.
struct BPNode {
    bool leaf = true;
    std::vector<Key> keys;
    std::vector<NodeId> children;
    NodeId next = no_node;
};

class BPTree {
public:
    BPTree() = default;

    /// Wraps an arbitrary node graph; used to inspect hand-built trees.
    BPTree(std::size_t order, std::vector<BPNode> nodes, NodeId root)
        : order_(order), nodes_(std::move(nodes)), root_(root) {}

    std::size_t order() const { return order_; }
    NodeId root() const { return root_; }
    const std::vector<BPNode>& nodes() const { return nodes_; }
    const BPNode& node(NodeId id) const { return nodes_.at(id); }

    std::size_t height() const {
        std::size_t h = 1;
        for (NodeId id = root_; !nodes_[id].leaf; id = nodes_[id].children.front()) ++h;
        return h;
    }

    bool contains(Key key) const {
        NodeId id = root_;
        while (!nodes_[id].leaf) {
            const auto& n = nodes_[id];
            const auto pos = std::upper_bound(n.keys.begin(), n.keys.end(), key) - n.keys.begin();
            id = n.children[static_cast<std::size_t>(pos)];
        }
        const auto& leaf = nodes_[id];
        return std::binary_search(leaf.keys.begin(), leaf.keys.end(), key);
    }

    /// Leftmost leaf, the start of the leaf chain.
    NodeId first_leaf() const {
        NodeId id = root_;
        while (!nodes_[id].leaf) id = nodes_[id].children.front();
        return id;
    }

private:
    std::size_t order_ = 0;
    std::vector<BPNode> nodes_;
    NodeId root_ = no_node;
};

constexpr std::size_t ceil_half(std::size_t b) { return (b + 1) / 2; }

namespace detail {

/// Splits `total` items into groups of at most `hi`, filling left to right,
/// then moves items from the right end of earlier groups into the last
/// group until it reaches `lo`. Empty when no valid split exists.
inline std::vector<std::size_t> group_sizes(std::size_t total, std::size_t lo, std::size_t hi) {
    const std::size_t groups = (total + hi - 1) / hi;
    std::vector<std::size_t> sizes(groups, hi);
    sizes.back() = total - hi * (groups - 1);
    std::size_t deficit = sizes.back() < lo ? lo - sizes.back() : 0;
    for (std::size_t g = groups - 1; g-- > 0 && deficit > 0;) {
        const std::size_t take = std::min(deficit, sizes[g] - lo);
        sizes[g] -= take;
        sizes.back() += take;
        deficit -= take;
    }
    if (deficit > 0) return {};
    return sizes;
}

} // namespace detail

/// Bulk-loads a tree of order `b` from sorted unique keys.
///
/// Leaves are filled to b-1 keys left to right and the rightmost leaves are
/// rebalanced up to the ceil(b/2) minimum; internal levels are grouped the
/// same way with fan-out in [ceil(b/2), b]. A root leaf holds up to b-1
/// keys, or exactly b when no multi-leaf split exists (odd b, b keys).
/// For b = 3 every non-root leaf must hold exactly 2 keys, so an odd key
/// count above 3 has no valid tree and is rejected.
inline BPTree bptree_build(std::span<const Key> keys, std::size_t b) {
    if (b < 3) throw Error(ErrorKind::invalid_input, "B+Tree order must be at least 3");
    if (keys.empty()) throw Error(ErrorKind::invalid_input, "B+Tree needs at least one key");
    for (std::size_t i = 1; i < keys.size(); ++i) {
        if (keys[i - 1] >= keys[i])
            throw Error(ErrorKind::invalid_input,
                        "keys must be sorted ascending and unique (violation at index " + std::to_string(i) + ")");
    }

    std::vector<BPNode> nodes;
    const std::size_t n = keys.size();
    std::vector<std::size_t> leaf_sizes;
    if (n <= b - 1) {
        leaf_sizes = {n};
    } else {
        leaf_sizes = detail::group_sizes(n, ceil_half(b), b - 1);
        if (leaf_sizes.empty()) {
            if (n != b)
                throw Error(ErrorKind::invalid_input,
                            "no B+Tree of order " + std::to_string(b) + " can hold " + std::to_string(n) +
                                " keys with leaf occupancy in [" + std::to_string(ceil_half(b)) + ", " +
                                std::to_string(b - 1) + "]");
            leaf_sizes = {n};
        }
    }

    // Leaves, plus the smallest key under each node of the current level.
    std::vector<NodeId> level;
    std::vector<Key> level_min;
    std::size_t offset = 0;
    for (std::size_t s : leaf_sizes) {
        BPNode leaf;
        leaf.keys.assign(keys.begin() + static_cast<std::ptrdiff_t>(offset),
                         keys.begin() + static_cast<std::ptrdiff_t>(offset + s));
        level_min.push_back(leaf.keys.front());
        if (!level.empty()) nodes[level.back()].next = static_cast<NodeId>(nodes.size());
        level.push_back(static_cast<NodeId>(nodes.size()));
        nodes.push_back(std::move(leaf));
        offset += s;
    }

    while (level.size() > 1) {
        std::vector<std::size_t> sizes =
            level.size() <= b ? std::vector<std::size_t>{level.size()}
                              : detail::group_sizes(level.size(), ceil_half(b), b);
        // With fan-out range [ceil(b/2), b] and more than b nodes a split always exists.
        std::vector<NodeId> parents;
        std::vector<Key> parent_min;
        std::size_t pos = 0;
        for (std::size_t s : sizes) {
            BPNode inner;
            inner.leaf = false;
            for (std::size_t c = 0; c < s; ++c) {
                inner.children.push_back(level[pos + c]);
                if (c > 0) inner.keys.push_back(level_min[pos + c]);
            }
            parent_min.push_back(level_min[pos]);
            parents.push_back(static_cast<NodeId>(nodes.size()));
            nodes.push_back(std::move(inner));
            pos += s;
        }
        level = std::move(parents);
        level_min = std::move(parent_min);
    }
    return BPTree(b, std::move(nodes), level.front());
}

/// Counts queries present in the tree. Queries are split into fixed chunks
/// searched concurrently; the integer total is thread-count independent.
inline std::size_t bptree_search(const BPTree& t, std::span<const Key> queries, ParallelConfig par) {
    constexpr std::size_t chunk = 8192;
    const std::size_t blocks = (queries.size() + chunk - 1) / chunk;
    std::vector<std::size_t> hits(blocks, 0);
    parallel_blocks(par, blocks, [&](std::size_t blk) {
        const std::size_t lo = blk * chunk;
        const std::size_t hi = std::min(queries.size(), lo + chunk);
        std::size_t h = 0;
        for (std::size_t i = lo; i < hi; ++i) h += t.contains(queries[i]) ? 1 : 0;
        hits[blk] = h;
    });
    std::size_t total = 0;
    for (std::size_t h : hits) total += h;
    return total;
}

enum class BPConstraint {
    none,
    order,
    dangling_child,
    internal_child_count,
    root_child_count,
    separator_count,
    leaf_key_count,
    root_leaf_key_count,
    unsorted_keys,
    separator_bounds,
    leaf_depth,
    leaf_chain,
};

inline std::string_view to_string(BPConstraint c) {
    switch (c) {
    case BPConstraint::none: return "none";
    case BPConstraint::order: return "order >= 3";
    case BPConstraint::dangling_child: return "child ids reference existing nodes";
    case BPConstraint::internal_child_count: return "ceil(b/2) <= m <= b for internal nodes";
    case BPConstraint::root_child_count: return "2 <= m <= b for an internal root";
    case BPConstraint::separator_count: return "separator count = m - 1";
    case BPConstraint::leaf_key_count: return "ceil(b/2) <= keys <= b-1 for leaves";
    case BPConstraint::root_leaf_key_count: return "1 <= keys <= b for a root leaf";
    case BPConstraint::unsorted_keys: return "keys strictly ascending within a node";
    case BPConstraint::separator_bounds: return "subtree keys lie between bounding separators";
    case BPConstraint::leaf_depth: return "all leaves at equal depth";
    case BPConstraint::leaf_chain: return "leaf chain visits every leaf in ascending key order";
    }
    return "?";
}

struct BPValidation {
    bool ok = true;
    BPConstraint violated = BPConstraint::none;
    NodeId node = no_node;
    std::size_t depth = 0;
    std::string message;
};

/// Checks every structural invariant; reports the first violation found in
/// depth-first order.
inline BPValidation validate_bptree(const BPTree& t) {
    BPValidation report;
    auto fail = [&](BPConstraint c, NodeId id, std::size_t depth, std::string detail) {
        if (!report.ok) return;
        report.ok = false;
        report.violated = c;
        report.node = id;
        report.depth = depth;
        report.message = "node " + std::to_string(id) + " (depth " + std::to_string(depth) +
                         "): " + std::string(to_string(c)) + (detail.empty() ? "" : ": " + detail);
    };

    const std::size_t b = t.order();
    const auto& nodes = t.nodes();
    if (b < 3) {
        fail(BPConstraint::order, t.root(), 0, "order " + std::to_string(b));
        return report;
    }
    if (t.root() >= nodes.size()) {
        fail(BPConstraint::dangling_child, t.root(), 0, "root id out of range");
        return report;
    }

    std::optional<std::size_t> leaf_depth;
    std::vector<NodeId> leaves_in_order;

    struct Frame {
        NodeId id;
        std::size_t depth;
        std::optional<Key> lo; // inclusive
        std::optional<Key> hi; // exclusive
    };
    std::vector<Frame> stack{{t.root(), 0, std::nullopt, std::nullopt}};
    std::size_t visited = 0;
    while (!stack.empty() && report.ok) {
        const Frame f = stack.back();
        stack.pop_back();
        if (++visited > nodes.size()) {
            fail(BPConstraint::dangling_child, f.id, f.depth, "node reachable more than once");
            break;
        }
        const BPNode& n = nodes[f.id];
        const bool is_root = f.id == t.root();

        for (std::size_t i = 1; i < n.keys.size(); ++i) {
            if (n.keys[i - 1] >= n.keys[i]) fail(BPConstraint::unsorted_keys, f.id, f.depth, "");
        }
        for (Key k : n.keys) {
            if ((f.lo && k < *f.lo) || (f.hi && k >= *f.hi))
                fail(BPConstraint::separator_bounds, f.id, f.depth, "key " + std::to_string(k));
        }

        if (n.leaf) {
            const std::size_t m = n.keys.size();
            if (is_root) {
                if (m < 1 || m > b)
                    fail(BPConstraint::root_leaf_key_count, f.id, f.depth, std::to_string(m) + " keys");
            } else if (m < ceil_half(b) || m > b - 1) {
                fail(BPConstraint::leaf_key_count, f.id, f.depth, std::to_string(m) + " keys");
            }
            if (!leaf_depth) leaf_depth = f.depth;
            if (*leaf_depth != f.depth)
                fail(BPConstraint::leaf_depth, f.id, f.depth, "expected depth " + std::to_string(*leaf_depth));
            leaves_in_order.push_back(f.id);
            continue;
        }

        const std::size_t m = n.children.size();
        if (is_root) {
            if (m < 2 || m > b) fail(BPConstraint::root_child_count, f.id, f.depth, "m = " + std::to_string(m));
        } else if (m < ceil_half(b) || m > b) {
            fail(BPConstraint::internal_child_count, f.id, f.depth, "m = " + std::to_string(m));
        }
        if (m == 0 || n.keys.size() != m - 1) {
            fail(BPConstraint::separator_count, f.id, f.depth,
                 std::to_string(n.keys.size()) + " separators for " + std::to_string(m) + " children");
            continue;
        }
        // Push right-to-left so children pop in key order.
        for (std::size_t c = m; c-- > 0;) {
            const NodeId child = n.children[c];
            if (child >= nodes.size()) {
                fail(BPConstraint::dangling_child, f.id, f.depth, "child id " + std::to_string(child));
                break;
            }
            const std::optional<Key> lo = c == 0 ? f.lo : std::optional<Key>(n.keys[c - 1]);
            const std::optional<Key> hi = c + 1 == m ? f.hi : std::optional<Key>(n.keys[c]);
            stack.push_back({child, f.depth + 1, lo, hi});
        }
    }
    if (!report.ok) return report;

    // The chain must start at the leftmost leaf and walk leaves in DFS order.
    NodeId cur = leaves_in_order.front();
    std::optional<Key> last;
    for (std::size_t i = 0; i < leaves_in_order.size(); ++i) {
        if (cur != leaves_in_order[i]) {
            fail(BPConstraint::leaf_chain, leaves_in_order[i], *leaf_depth, "chain skips or reorders leaves");
            return report;
        }
        for (Key k : nodes[cur].keys) {
            if (last && k <= *last) {
                fail(BPConstraint::leaf_chain, cur, *leaf_depth, "keys not ascending across leaves");
                return report;
            }
            last = k;
        }
        cur = nodes[cur].next;
    }
    if (cur != no_node) fail(BPConstraint::leaf_chain, leaves_in_order.back(), *leaf_depth, "chain runs past last leaf");
    return report;
}

struct KeyQuerySet {
    std::vector<Key> keys;    // sorted, unique
    std::vector<Key> queries; // shuffled
    std::size_t present = 0;  // queries drawn from `keys`
};

/// `key_count` distinct 64-bit keys and `query_count` queries, half present
/// in the key set and half absent.
inline KeyQuerySet generate_keys(std::size_t key_count, std::size_t query_count, std::uint64_t seed) {
    if (key_count == 0) throw Error(ErrorKind::invalid_size, "key count must be positive");
    Rng rng(seed);
    KeyQuerySet s;
    s.keys.reserve(key_count);
    while (s.keys.size() < key_count) {
        while (s.keys.size() < key_count) s.keys.push_back(static_cast<Key>(rng.next() >> 1));
        std::sort(s.keys.begin(), s.keys.end());
        s.keys.erase(std::unique(s.keys.begin(), s.keys.end()), s.keys.end());
    }

    s.present = query_count / 2 + query_count % 2;
    s.queries.reserve(query_count);
    for (std::size_t i = 0; i < s.present; ++i) s.queries.push_back(s.keys[rng.below(key_count)]);
    while (s.queries.size() < query_count) {
        const Key q = static_cast<Key>(rng.next() >> 1);
        if (!std::binary_search(s.keys.begin(), s.keys.end(), q)) s.queries.push_back(q);
    }
    rng.shuffle(s.queries.begin(), s.queries.end());
    return s;
}

} // namespace dwarfeval::kernels
