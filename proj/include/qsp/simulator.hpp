#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "qsp/circuit.hpp"
#include "qsp/core.hpp"

namespace qsp {

namespace detail {

inline bool controls_match(const QuditRegister& reg, const std::vector<ControlSpec>& controls,
                           std::int64_t flat) {
    for (const ControlSpec& c : controls) {
        int digit = reg.digit(flat, c.qudit);
        if (std::find(c.levels.begin(), c.levels.end(), digit) == c.levels.end()) {
            return false;
        }
    }
    return true;
}

} // namespace detail

/// Applies one operation without materializing its matrix: iterates basis
/// indices in ascending order and mixes the (i, j) target-digit pairs where
/// the controls match. Norm preserving, deterministic.
inline StateVector apply_op(const StateVector& state, const Operation& op) {
    validate_op(op, state.reg);
    const QuditRegister& reg = state.reg;
    const int target = target_of(op);
    auto [i, j] = levels_of(op);
    const std::int64_t stride = reg.stride(target);
    const std::int64_t total = reg.total_dimension();
    const auto& controls = controls_of(op);

    StateVector out = state;
    if (std::holds_alternative<GivensRotation>(op)) {
        const auto& g = std::get<GivensRotation>(op);
        const auto b = detail::givens_block(g.theta, g.phi);
        for (std::int64_t flat = 0; flat < total; ++flat) {
            if (reg.digit(flat, target) != i ||
                !detail::controls_match(reg, controls, flat)) {
                continue;
            }
            const std::int64_t partner = flat + static_cast<std::int64_t>(j - i) * stride;
            const Complex ai = out.amplitudes[static_cast<std::size_t>(flat)];
            const Complex aj = out.amplitudes[static_cast<std::size_t>(partner)];
            out.amplitudes[static_cast<std::size_t>(flat)] = b[0] * ai + b[1] * aj;
            out.amplitudes[static_cast<std::size_t>(partner)] = b[2] * ai + b[3] * aj;
        }
    } else {
        const auto& p = std::get<PhaseRotation>(op);
        const Complex fi = std::exp(Complex{0.0, -p.angle / 2.0});
        const Complex fj = std::exp(Complex{0.0, p.angle / 2.0});
        for (std::int64_t flat = 0; flat < total; ++flat) {
            const int digit = reg.digit(flat, target);
            if ((digit != i && digit != j) || !detail::controls_match(reg, controls, flat)) {
                continue;
            }
            out.amplitudes[static_cast<std::size_t>(flat)] *= digit == i ? fi : fj;
        }
    }
    return out;
}

/// All-zeros product state |0...0> over a register.
inline StateVector zero_state(const QuditRegister& reg) {
    std::vector<Complex> amps(static_cast<std::size_t>(reg.total_dimension()), Complex{0.0, 0.0});
    amps[0] = Complex{1.0, 0.0};
    return StateVector{reg, std::move(amps)};
}

inline StateVector run(const Circuit& circuit, const StateVector& initial) {
    if (circuit.reg != initial.reg) {
        throw ShapeError("run: circuit and initial state registers differ");
    }
    StateVector state = initial;
    for (const Operation& op : circuit.ops) {
        state = apply_op(state, op);
    }
    return state;
}

inline StateVector run(const Circuit& circuit) { return run(circuit, zero_state(circuit.reg)); }

/// Fidelity of the circuit output from |0...0> against a target state.
inline double verify(const Circuit& circuit, const StateVector& target) {
    if (circuit.reg != target.reg) {
        throw ShapeError("verify: register mismatch");
    }
    return fidelity(run(circuit), target);
}

} // namespace qsp
