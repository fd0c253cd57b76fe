#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "qsp/circuit.hpp"
#include "qsp/core.hpp"
#include "qsp/dd.hpp"
#include "qsp/simulator.hpp"

namespace qsp {

/// Target-less two-level rotation on one qudit, levels (i, j).
struct LocalGivens {
    int level_i = 0;
    int level_j = 1;
    double theta = 0.0;
    double phi = 0.0;
};

struct LocalPhase {
    int level_i = 0;
    int level_j = 1;
    double angle = 0.0;
};

using LocalOp = std::variant<LocalGivens, LocalPhase>;

/// For a live node of arity d: exactly d-1 Givens entries on adjacent
/// descending pairs followed by one Phase entry on levels (0, 1).
using LocalSequence = std::vector<LocalOp>;

enum class SynthesisVariant { exact, approx };

struct SynthesisMode {
    SynthesisVariant variant = SynthesisVariant::exact;
    double fidelity_threshold = 1.0; ///< approx only, in (0, 1]
    bool prune_identity = false;
    bool merge_shared_siblings = false;
};

struct SynthesisReport {
    std::int64_t tree_node_count = 0;      ///< full-tree count for the register
    std::int64_t dd_node_count = 0;        ///< nodes of the synthesized DD incl. terminal
    std::int64_t distinct_weight_count = 0;
    std::int64_t op_count = 0;
    int control_median = 0;                ///< lower median over all emitted ops
    double removed_mass = 0.0;
    double elapsed_seconds = 0.0;          ///< approximation + synthesis, no verification
    double achieved_fidelity = 0.0;        ///< simulated against the source state
};

struct SynthesisResult {
    Circuit circuit;
    SynthesisReport report;
    DecisionDiagram dd; ///< the diagram the circuit was emitted from
};

inline double normalize_angle(double x) {
    double f = std::fmod(x + std::numbers::pi, 2.0 * std::numbers::pi);
    if (f <= 0.0) {
        f += 2.0 * std::numbers::pi;
    }
    return f - std::numbers::pi;
}

/// Local preparation sequence for one node's canonical out-weight vector:
/// the composite U of the emitted ops (earliest applied first) satisfies
/// U e_0 = weights elementwise.
///
/// Construction: a residual copy of the weights is contracted pairwise from
/// the bottom, merging (v[j-1], v[j]) with theta = 2*atan2(|v_j|, |v_{j-1}|)
/// and phi = arg(v_j) - arg(v_{j-1}) - pi/2; the inverse rotations are then
/// emitted in reverse order, and a final Phase on levels (0, 1) cancels the
/// residual phase of v[0] against the already-extracted parent weight.
/// Identity rotations (theta = 0) are always part of the sequence.
inline LocalSequence node_sequence(std::span<const Complex> weights,
                                   const ToleranceConfig& tol = {}) {
    const int d = static_cast<int>(weights.size());
    if (d < 2) {
        throw ContractError("node_sequence: need at least two levels");
    }
    double norm2 = 0.0;
    for (const Complex& w : weights) {
        norm2 += std::norm(w);
    }
    if (std::abs(norm2 - 1.0) > 1e-8) {
        throw ContractError("node_sequence: weight vector is not unit norm");
    }

    std::vector<Complex> v(weights.begin(), weights.end());
    struct Reduction {
        double theta;
        double phi;
    };
    std::vector<Reduction> red(static_cast<std::size_t>(d - 1), Reduction{0.0, 0.0});
    for (int j = d - 1; j >= 1; --j) {
        const Complex a = v[static_cast<std::size_t>(j - 1)];
        const Complex b = v[static_cast<std::size_t>(j)];
        const double ma = std::abs(a);
        const double mb = std::abs(b);
        if (mb <= tol.eps_zero) {
            continue; // nothing to merge, v[j-1] stays
        }
        if (ma <= tol.eps_zero) {
            red[static_cast<std::size_t>(j - 1)] =
                Reduction{std::numbers::pi, std::arg(b) - std::numbers::pi / 2.0};
            v[static_cast<std::size_t>(j - 1)] = Complex{mb, 0.0};
        } else {
            red[static_cast<std::size_t>(j - 1)] =
                Reduction{2.0 * std::atan2(mb, ma), std::arg(b) - std::arg(a) - std::numbers::pi / 2.0};
            v[static_cast<std::size_t>(j - 1)] = (a / ma) * std::hypot(ma, mb);
        }
        v[static_cast<std::size_t>(j)] = Complex{0.0, 0.0};
    }

    LocalSequence seq;
    seq.reserve(static_cast<std::size_t>(d));
    for (int j = 1; j <= d - 1; ++j) {
        const Reduction& r = red[static_cast<std::size_t>(j - 1)];
        if (r.theta == 0.0) {
            seq.push_back(LocalGivens{j - 1, j, 0.0, 0.0});
        } else {
            // inverse of the reduction rotation: R(theta, phi)^-1 = R(theta, phi + pi)
            seq.push_back(LocalGivens{j - 1, j, r.theta, normalize_angle(r.phi + std::numbers::pi)});
        }
    }
    const double residual = std::arg(v[0]);
    seq.push_back(LocalPhase{0, 1, normalize_angle(-2.0 * residual)});
    return seq;
}

namespace detail {

/// Distinct live children of a node; kTerminal counts as a child.
inline int distinct_live_children(const DdNode& node) {
    int count = 0;
    std::int32_t seen[2] = {kZeroStub, kZeroStub};
    for (const DdEdge& e : node.edges) {
        if (!e.live()) {
            continue;
        }
        if (count == 0 || (count == 1 && e.child != seen[0])) {
            seen[count++] = e.child;
        }
        if (count == 2) {
            break;
        }
    }
    return count;
}

inline bool elidable(const DdNode& node) { return distinct_live_children(node) == 1; }

inline bool is_identity_local(const LocalOp& op, const ToleranceConfig& tol) {
    if (std::holds_alternative<LocalGivens>(op)) {
        return std::abs(std::get<LocalGivens>(op).theta) <= tol.eps_zero;
    }
    return std::abs(std::get<LocalPhase>(op).angle) <= tol.eps_zero;
}

inline Operation attach(const LocalOp& op, int target, const std::vector<ControlSpec>& controls) {
    if (std::holds_alternative<LocalGivens>(op)) {
        const auto& g = std::get<LocalGivens>(op);
        return GivensRotation{target, g.level_i, g.level_j, g.theta, g.phi, controls};
    }
    const auto& p = std::get<LocalPhase>(op);
    return PhaseRotation{target, p.level_i, p.level_j, p.angle, controls};
}

inline void emit_subtree(const DecisionDiagram& dd, std::int32_t id,
                         std::vector<ControlSpec>& controls, const SynthesisMode& mode,
                         const ToleranceConfig& tol, Circuit& out) {
    const DdNode& node = dd.node(id);
    const int pos = dd.position_of_level(node.level);

    std::vector<Complex> weights(node.edges.size(), Complex{0.0, 0.0});
    for (std::size_t k = 0; k < node.edges.size(); ++k) {
        weights[k] = node.edges[k].weight;
    }
    for (const LocalOp& op : node_sequence(weights, tol)) {
        if (mode.prune_identity && is_identity_local(op, tol)) {
            continue;
        }
        out.ops.push_back(attach(op, pos, controls));
    }
    if (node.level == 0) {
        return;
    }
    if (elidable(node)) {
        // tensor-product rule: all live edges reach one child, descend once
        // and leave this qudit out of the controls below
        for (const DdEdge& e : node.edges) {
            if (e.live()) {
                emit_subtree(dd, e.child, controls, mode, tol, out);
                return;
            }
        }
        return;
    }
    if (mode.merge_shared_siblings) {
        std::vector<std::pair<std::int32_t, std::vector<int>>> groups;
        for (std::size_t k = 0; k < node.edges.size(); ++k) {
            const DdEdge& e = node.edges[k];
            if (!e.live()) {
                continue;
            }
            auto it = std::find_if(groups.begin(), groups.end(),
                                   [&](const auto& g) { return g.first == e.child; });
            if (it == groups.end()) {
                groups.push_back({e.child, {static_cast<int>(k)}});
            } else {
                it->second.push_back(static_cast<int>(k));
            }
        }
        for (auto& [child, digits] : groups) {
            controls.push_back(ControlSpec{pos, digits});
            emit_subtree(dd, child, controls, mode, tol, out);
            controls.pop_back();
        }
        return;
    }
    for (std::size_t k = 0; k < node.edges.size(); ++k) {
        const DdEdge& e = node.edges[k];
        if (!e.live()) {
            continue;
        }
        controls.push_back(ControlSpec{pos, {static_cast<int>(k)}});
        emit_subtree(dd, e.child, controls, mode, tol, out);
        controls.pop_back();
    }
}

inline int lower_median_controls(const Circuit& circuit) {
    if (circuit.ops.empty()) {
        return 0;
    }
    std::vector<int> counts;
    counts.reserve(circuit.ops.size());
    for (const Operation& op : circuit.ops) {
        counts.push_back(static_cast<int>(controls_of(op).size()));
    }
    std::sort(counts.begin(), counts.end());
    return counts[(counts.size() - 1) / 2];
}

} // namespace detail

/// One ControlSpec per non-elided ancestor on a root-first path of
/// (node id, edge digit) pairs.
inline std::vector<ControlSpec> control_path(const DecisionDiagram& dd,
                                             const std::vector<std::pair<std::int32_t, int>>& path,
                                             bool elision) {
    std::vector<ControlSpec> out;
    for (const auto& [id, digit] : path) {
        const DdNode& node = dd.node(id);
        if (elision && detail::elidable(node)) {
            continue;
        }
        out.push_back(ControlSpec{dd.position_of_level(node.level), {digit}});
    }
    return out;
}

/// Emits the state-preparation circuit from a prepared diagram: depth-first
/// over live paths only, one local sequence per visited node, each op
/// controlled on the edge digits of its non-elided ancestors.
inline Circuit synthesize_dd(const DecisionDiagram& dd, const SynthesisMode& mode = {},
                             const ToleranceConfig& tol = {}) {
    Circuit out{dd.reg, {}};
    std::vector<ControlSpec> controls;
    detail::emit_subtree(dd, dd.root, controls, mode, tol, out);
    return out;
}

/// Synthesis of an already prepared diagram (tree, reduced or pruned); the
/// reported fidelity is measured against the diagram's own state.
inline SynthesisResult synthesize(const DecisionDiagram& dd, const SynthesisMode& mode = {},
                                  const ToleranceConfig& tol = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    Circuit circuit = synthesize_dd(dd, mode, tol);
    const auto t1 = std::chrono::steady_clock::now();

    SynthesisReport report;
    report.tree_node_count = full_tree_node_count(dd.reg);
    report.dd_node_count = dd.node_count() + 1;
    report.distinct_weight_count = distinct_weight_count(dd, tol);
    report.op_count = static_cast<std::int64_t>(circuit.ops.size());
    report.control_median = detail::lower_median_controls(circuit);
    report.elapsed_seconds = std::chrono::duration<double>(t1 - t0).count();
    report.achieved_fidelity = verify(circuit, to_state_vector(dd));
    return SynthesisResult{std::move(circuit), report, dd};
}

/// Full pipeline from a normalized state: exact mode traverses the unreduced
/// tree, approx mode reduces and prunes at the mode's fidelity threshold
/// first. The emitted circuit is verified by simulation; elapsed_seconds
/// covers diagram construction, approximation and traversal only.
inline SynthesisResult synthesize(const StateVector& source, const SynthesisMode& mode = {},
                                  const ToleranceConfig& tol = {}) {
    if (mode.variant == SynthesisVariant::approx &&
        (!(mode.fidelity_threshold > 0.0) || mode.fidelity_threshold > 1.0)) {
        throw std::invalid_argument("synthesize: fidelity threshold must be in (0, 1]");
    }
    const auto t0 = std::chrono::steady_clock::now();
    DecisionDiagram dd = build_tree(source, tol);
    double removed = 0.0;
    if (mode.variant == SynthesisVariant::approx) {
        ApproxResult pruned = approximate(reduce(dd, tol), mode.fidelity_threshold, tol);
        dd = std::move(pruned.dd);
        removed = pruned.removed_mass;
    }
    Circuit circuit = synthesize_dd(dd, mode, tol);
    const auto t1 = std::chrono::steady_clock::now();

    SynthesisReport report;
    report.tree_node_count = full_tree_node_count(source.reg);
    report.dd_node_count = dd.node_count() + 1;
    report.distinct_weight_count = distinct_weight_count(dd, tol);
    report.op_count = static_cast<std::int64_t>(circuit.ops.size());
    report.control_median = detail::lower_median_controls(circuit);
    report.removed_mass = removed;
    report.elapsed_seconds = std::chrono::duration<double>(t1 - t0).count();
    report.achieved_fidelity = verify(circuit, source);
    return SynthesisResult{std::move(circuit), report, std::move(dd)};
}

} // namespace qsp
