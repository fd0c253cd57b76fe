#pragma once

#include <cstdint>
#include <cstdio>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "qsp/core.hpp"

namespace qsp {

inline constexpr std::int32_t kTerminal = -1;
inline constexpr std::int32_t kZeroStub = -2;

/// Out-edge of a node. A zero-stub edge (child == kZeroStub, weight 0)
/// stands for an all-zero sub-vector and carries no subtree.
struct DdEdge {
    Complex weight{0.0, 0.0};
    std::int32_t child = kZeroStub;

    bool live() const { return child != kZeroStub; }
};

/// Node at `level`; level n-1 is the root level, level 0 the last qudit.
/// Out-edge count equals the dimension of the level's qudit. Live nodes are
/// canonical: unit L2 norm over out-weights, first live weight real >= 0.
struct DdNode {
    std::int32_t level = 0;
    std::vector<DdEdge> edges;
};

enum class DdForm { tree, reduced };

/// Levelled DAG with complex edge weights and one incoming root weight.
/// Node storage is an arena; every edge points to a strictly smaller index,
/// the root is the last node. The terminal is implicit (kTerminal).
struct DecisionDiagram {
    QuditRegister reg;
    Complex root_weight{1.0, 0.0};
    std::int32_t root = 0;
    std::vector<DdNode> nodes;
    DdForm form = DdForm::tree;

    const DdNode& node(std::int32_t id) const { return nodes[static_cast<std::size_t>(id)]; }
    std::int64_t node_count() const { return static_cast<std::int64_t>(nodes.size()); }

    /// Register position of the qudit a node at `level` acts on.
    int position_of_level(std::int32_t level) const { return reg.size() - 1 - level; }
};

namespace detail {

/// Canonical per-node normalization: divides the out-edges by norm * phase of
/// the first live weight and returns that factor (to be multiplied into the
/// in-edges). Returns 0 when no live edge remains.
inline Complex normalize_edges(std::vector<DdEdge>& edges, const ToleranceConfig& tol) {
    double norm2 = 0.0;
    int first_live = -1;
    for (std::size_t k = 0; k < edges.size(); ++k) {
        if (!edges[k].live()) {
            continue;
        }
        norm2 += std::norm(edges[k].weight);
        if (first_live < 0 && std::abs(edges[k].weight) > tol.eps_zero) {
            first_live = static_cast<int>(k);
        }
    }
    if (first_live < 0) {
        return {0.0, 0.0};
    }
    double norm = std::sqrt(norm2);
    Complex lead = edges[static_cast<std::size_t>(first_live)].weight;
    Complex factor = norm * (lead / std::abs(lead));
    for (DdEdge& e : edges) {
        if (e.live()) {
            e.weight /= factor;
        }
    }
    // pin the canonical form exactly
    edges[static_cast<std::size_t>(first_live)].weight =
        Complex(std::abs(edges[static_cast<std::size_t>(first_live)].weight), 0.0);
    return factor;
}

inline std::pair<std::int64_t, std::int64_t> weight_bucket(const Complex& w, double eps) {
    return {std::llround(w.real() / eps), std::llround(w.imag() / eps)};
}

struct NodeKeyHash {
    std::size_t operator()(const std::vector<std::int64_t>& key) const {
        std::size_t h = 1469598103934665603ull;
        for (std::int64_t v : key) {
            h ^= static_cast<std::size_t>(v);
            h *= 1099511628211ull;
        }
        return h;
    }
};

inline std::vector<std::int64_t> node_key(const DdNode& node, double eps) {
    std::vector<std::int64_t> key;
    key.reserve(1 + 3 * node.edges.size());
    key.push_back(node.level);
    for (const DdEdge& e : node.edges) {
        auto [re, im] = weight_bucket(e.weight, eps);
        key.push_back(re);
        key.push_back(im);
        key.push_back(e.child);
    }
    return key;
}

inline constexpr std::int32_t kNoRemoval = -3;

/// Rebuilds a diagram bottom-up through a unique table, renormalizing every
/// node and dropping `removed` (all its in-edges become zero-stubs; emptied
/// ancestors cascade). Returns nullopt when nothing survives.
inline std::optional<DecisionDiagram> rebuild_reduced(const DecisionDiagram& in,
                                                      std::int32_t removed,
                                                      const ToleranceConfig& tol) {
    std::vector<DdNode> nodes;
    std::unordered_map<std::vector<std::int64_t>, std::int32_t, NodeKeyHash> unique;
    struct Rebuilt {
        std::int32_t id;
        Complex factor;
    };
    std::unordered_map<std::int32_t, std::optional<Rebuilt>> memo;

    std::function<std::optional<Rebuilt>(std::int32_t)> rec =
        [&](std::int32_t old_id) -> std::optional<Rebuilt> {
        if (old_id == removed) {
            return std::nullopt;
        }
        if (auto it = memo.find(old_id); it != memo.end()) {
            return it->second;
        }
        const DdNode& old = in.node(old_id);
        DdNode node{old.level, std::vector<DdEdge>(old.edges.size())};
        for (std::size_t k = 0; k < old.edges.size(); ++k) {
            const DdEdge& e = old.edges[k];
            if (!e.live()) {
                continue;
            }
            if (e.child == kTerminal) {
                node.edges[k] = DdEdge{e.weight, kTerminal};
                continue;
            }
            auto sub = rec(e.child);
            if (!sub) {
                continue; // edge becomes a stub
            }
            Complex w = e.weight * sub->factor;
            if (std::abs(w) <= tol.eps_zero) {
                continue;
            }
            node.edges[k] = DdEdge{w, sub->id};
        }
        Complex factor = normalize_edges(node.edges, tol);
        std::optional<Rebuilt> result;
        if (factor != Complex{0.0, 0.0}) {
            auto key = node_key(node, tol.eps_distinct);
            auto [it, inserted] = unique.try_emplace(key, static_cast<std::int32_t>(nodes.size()));
            if (inserted) {
                nodes.push_back(std::move(node));
            }
            result = Rebuilt{it->second, factor};
        }
        memo.emplace(old_id, result);
        return result;
    };

    auto top = rec(in.root);
    if (!top) {
        return std::nullopt;
    }
    return DecisionDiagram{in.reg, in.root_weight * top->factor, top->id, std::move(nodes),
                           DdForm::reduced};
}

} // namespace detail

/// Builds the unreduced tree for a nonzero state by recursive splitting:
/// each level-k node divides its sub-vector into arity equal parts, all-zero
/// parts become stub edges, live nodes get canonical normalization. The
/// product of root_weight and the edge weights along any root-to-leaf path
/// equals the corresponding amplitude.
inline DecisionDiagram build_tree(const StateVector& s, const ToleranceConfig& tol = {}) {
    if (s.norm() <= tol.eps_zero) {
        throw DegenerateStateError("build_tree: zero state");
    }
    const QuditRegister& reg = s.reg;
    const int n = reg.size();
    std::vector<DdNode> nodes;

    auto all_zero = [&](std::span<const Complex> v) {
        for (const Complex& a : v) {
            if (std::abs(a) > tol.eps_zero) {
                return false;
            }
        }
        return true;
    };

    std::function<std::pair<std::int32_t, Complex>(int, std::span<const Complex>)> build =
        [&](int level, std::span<const Complex> v) -> std::pair<std::int32_t, Complex> {
        const int d = reg.dim(n - 1 - level);
        DdNode node{level, std::vector<DdEdge>(static_cast<std::size_t>(d))};
        const std::size_t part = v.size() / static_cast<std::size_t>(d);
        for (int k = 0; k < d; ++k) {
            auto sub = v.subspan(static_cast<std::size_t>(k) * part, part);
            if (all_zero(sub)) {
                continue;
            }
            if (level == 0) {
                node.edges[static_cast<std::size_t>(k)] = DdEdge{sub[0], kTerminal};
            } else {
                auto [child, factor] = build(level - 1, sub);
                node.edges[static_cast<std::size_t>(k)] = DdEdge{factor, child};
            }
        }
        Complex factor = detail::normalize_edges(node.edges, tol);
        nodes.push_back(std::move(node));
        return {static_cast<std::int32_t>(nodes.size()) - 1, factor};
    };

    auto [root, weight] = build(n - 1, std::span<const Complex>(s.amplitudes));
    if (weight == Complex{0.0, 0.0}) {
        throw DegenerateStateError("build_tree: all amplitudes below eps_zero");
    }
    return DecisionDiagram{reg, weight, root, std::move(nodes), DdForm::tree};
}

/// Amplitude of one basis state: product of root_weight and the edge weights
/// selected by the digits; a stub on the path short-circuits to 0.
inline Complex amplitude(const DecisionDiagram& dd, const BasisIndex& idx) {
    if (static_cast<int>(idx.size()) != dd.reg.size()) {
        throw ShapeError("amplitude: index length does not match register");
    }
    Complex acc = dd.root_weight;
    std::int32_t cur = dd.root;
    for (int pos = 0; pos < dd.reg.size(); ++pos) {
        int digit = idx[static_cast<std::size_t>(pos)];
        if (digit < 0 || digit >= dd.reg.dim(pos)) {
            throw std::out_of_range("amplitude: digit out of range");
        }
        const DdEdge& e = dd.node(cur).edges[static_cast<std::size_t>(digit)];
        if (!e.live()) {
            return {0.0, 0.0};
        }
        acc *= e.weight;
        cur = e.child;
    }
    return acc;
}

/// Reassembles the dense vector (inverse of build_tree up to normalization).
inline StateVector to_state_vector(const DecisionDiagram& dd) {
    std::vector<Complex> amps(static_cast<std::size_t>(dd.reg.total_dimension()), Complex{0.0, 0.0});
    std::function<void(std::int32_t, std::int64_t, Complex)> fill =
        [&](std::int32_t id, std::int64_t offset, Complex acc) {
        const DdNode& node = dd.node(id);
        const int pos = dd.position_of_level(node.level);
        const std::int64_t stride = dd.reg.stride(pos);
        for (std::size_t k = 0; k < node.edges.size(); ++k) {
            const DdEdge& e = node.edges[k];
            if (!e.live()) {
                continue;
            }
            std::int64_t at = offset + static_cast<std::int64_t>(k) * stride;
            if (node.level == 0) {
                amps[static_cast<std::size_t>(at)] = acc * e.weight;
            } else {
                fill(e.child, at, acc * e.weight);
            }
        }
    };
    fill(dd.root, 0, dd.root_weight);
    return StateVector{dd.reg, std::move(amps)};
}

/// Merges structurally identical nodes (same level, weights within
/// eps_distinct, same children) through a unique table. State-preserving.
inline DecisionDiagram reduce(const DecisionDiagram& dd, const ToleranceConfig& tol = {}) {
    auto out = detail::rebuild_reduced(dd, detail::kNoRemoval, tol);
    if (!out) {
        throw DegenerateStateError("reduce: diagram has no live paths");
    }
    return std::move(*out);
}

/// Probability mass routed through each node: single downward pass, a child
/// accumulates parent contribution times |edge weight|^2. Indexed by node id;
/// the root holds |root_weight|^2.
inline std::vector<double> contributions(const DecisionDiagram& dd) {
    std::vector<double> c(dd.nodes.size(), 0.0);
    c[static_cast<std::size_t>(dd.root)] = std::norm(dd.root_weight);
    for (std::int32_t id = dd.root; id >= 0; --id) {
        const DdNode& node = dd.node(id);
        if (node.level == 0) {
            continue;
        }
        for (const DdEdge& e : node.edges) {
            if (e.live()) {
                c[static_cast<std::size_t>(e.child)] +=
                    c[static_cast<std::size_t>(id)] * std::norm(e.weight);
            }
        }
    }
    return c;
}

struct ApproxResult {
    DecisionDiagram dd;
    double removed_mass = 0.0;
    double achieved_fidelity = 1.0;
};

/// Greedy verify-then-commit pruning: repeatedly removes the live non-root
/// node with the smallest contribution, renormalizes and re-reduces, and
/// commits only while the exact fidelity against the original state stays at
/// or above `threshold`.
inline ApproxResult approximate(const DecisionDiagram& input, double threshold,
                                const ToleranceConfig& tol = {}) {
    if (!(threshold > 0.0) || threshold > 1.0) {
        throw std::invalid_argument("approximate: threshold must be in (0, 1]");
    }
    const StateVector original = to_state_vector(input);
    DecisionDiagram cur = input.form == DdForm::reduced ? input : reduce(input, tol);
    double survive = 1.0; // product of (1 - contribution) over committed removals
    double achieved = 1.0;

    for (;;) {
        if (cur.nodes.size() <= 1) {
            break; // nothing below the root to prune
        }
        auto contrib = contributions(cur);
        std::int32_t victim = -1;
        for (std::int32_t id = 0; id < static_cast<std::int32_t>(cur.nodes.size()); ++id) {
            if (id == cur.root) {
                continue;
            }
            if (victim < 0 || contrib[static_cast<std::size_t>(id)] <
                                  contrib[static_cast<std::size_t>(victim)]) {
                victim = id;
            }
        }
        if (victim < 0) {
            break;
        }
        auto attempt = detail::rebuild_reduced(cur, victim, tol);
        if (!attempt) {
            break;
        }
        double mag = std::abs(attempt->root_weight);
        if (mag <= tol.eps_zero) {
            break;
        }
        attempt->root_weight /= mag;
        double fid = fidelity(original, to_state_vector(*attempt));
        if (fid < threshold) {
            break;
        }
        survive *= 1.0 - contrib[static_cast<std::size_t>(victim)];
        achieved = fid;
        cur = std::move(*attempt);
    }
    return ApproxResult{std::move(cur), 1.0 - survive, achieved};
}

struct DDMetrics {
    std::int64_t tree_node_count = 0;
    std::int64_t reduced_node_count = 0;
    std::int64_t distinct_weight_count = 0;
};

/// Full-tree node count for a register: root, every internal slot and one
/// leaf per amplitude, i.e. sum over k of the product of the k most
/// significant dimensions.
inline std::int64_t full_tree_node_count(const QuditRegister& reg) {
    std::int64_t total = 1;
    std::int64_t prod = 1;
    for (int k = 0; k < reg.size(); ++k) {
        prod *= reg.dim(k);
        total += prod;
    }
    return total;
}

/// Number of eps_distinct buckets among all edge weights (stubs included)
/// plus the root weight.
inline std::int64_t distinct_weight_count(const DecisionDiagram& dd,
                                          const ToleranceConfig& tol = {}) {
    std::set<std::pair<std::int64_t, std::int64_t>> buckets;
    auto insert = [&](const Complex& w) {
        buckets.insert(detail::weight_bucket(w, tol.eps_distinct));
    };
    insert(dd.root_weight);
    for (const DdNode& node : dd.nodes) {
        for (const DdEdge& e : node.edges) {
            insert(e.weight);
        }
    }
    return static_cast<std::int64_t>(buckets.size());
}

inline DDMetrics metrics(const DecisionDiagram& tree, const DecisionDiagram& reduced,
                         const ToleranceConfig& tol = {}) {
    if (tree.reg != reduced.reg) {
        throw ShapeError("metrics: registers differ");
    }
    return DDMetrics{full_tree_node_count(tree.reg), reduced.node_count() + 1,
                     distinct_weight_count(tree, tol)};
}

namespace detail {

inline std::string format_double6(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", x);
    std::string s{buf};
    if (s == "-0") {
        s = "0";
    }
    return s;
}

inline std::string format_weight(const Complex& w) {
    std::string re = format_double6(w.real());
    std::string im = format_double6(w.imag());
    if (im == "0") {
        return re;
    }
    return re + (im.front() == '-' ? im : "+" + im) + "i";
}

} // namespace detail

/// DOT rendering: node labels are levels, edge labels are weights rounded to
/// six significant digits. The output is stable for golden-file comparisons.
inline std::string to_dot(const DecisionDiagram& dd) {
    std::string out;
    out += "digraph dd {\n";
    out += "rankdir=TB;\n";
    out += "root [shape=point];\n";
    out += "t [shape=box,label=\"T\"];\n";
    out += "root -> n" + std::to_string(dd.root) + " [label=\"" +
           detail::format_weight(dd.root_weight) + "\"];\n";
    for (std::int32_t id = dd.root; id >= 0; --id) {
        const DdNode& node = dd.node(id);
        out += "n" + std::to_string(id) + " [label=\"" + std::to_string(node.level) + "\"];\n";
        for (const DdEdge& e : node.edges) {
            if (!e.live()) {
                continue;
            }
            std::string to = e.child == kTerminal ? std::string{"t"} : "n" + std::to_string(e.child);
            out += "n" + std::to_string(id) + " -> " + to + " [label=\"" +
                   detail::format_weight(e.weight) + "\"];\n";
        }
    }
    out += "}\n";
    return out;
}

} // namespace qsp
