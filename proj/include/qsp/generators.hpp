#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "qsp/core.hpp"

namespace qsp {

/// GHZ-type state over a mixed register: (1/sqrt(m)) sum_k |k,k,...,k> with
/// m = min(dims).
inline StateVector ghz(const QuditRegister& reg) {
    const int m = *std::min_element(reg.dims().begin(), reg.dims().end());
    std::vector<Complex> amps(static_cast<std::size_t>(reg.total_dimension()), Complex{0.0, 0.0});
    const double a = 1.0 / std::sqrt(static_cast<double>(m));
    for (int k = 0; k < m; ++k) {
        BasisIndex idx(static_cast<std::size_t>(reg.size()), k);
        amps[static_cast<std::size_t>(encode_index(idx, reg))] = Complex{a, 0.0};
    }
    return StateVector{reg, std::move(amps)};
}

/// Qubit-embedded W state: single excitation to level 1 of each qudit,
/// (1/sqrt(n)) sum_i |0...0, 1_i, 0...0>.
inline StateVector w_embedded(const QuditRegister& reg) {
    std::vector<Complex> amps(static_cast<std::size_t>(reg.total_dimension()), Complex{0.0, 0.0});
    const double a = 1.0 / std::sqrt(static_cast<double>(reg.size()));
    for (int q = 0; q < reg.size(); ++q) {
        BasisIndex idx(static_cast<std::size_t>(reg.size()), 0);
        idx[static_cast<std::size_t>(q)] = 1;
        amps[static_cast<std::size_t>(encode_index(idx, reg))] = Complex{a, 0.0};
    }
    return StateVector{reg, std::move(amps)};
}

/// Qudit W state: single excitation distributed over every nonzero level of
/// every qudit, (1/sqrt(M)) sum_i sum_{k=1}^{d_i-1} |0...0, k_i, 0...0> with
/// M = sum_i (d_i - 1).
inline StateVector w_qudit(const QuditRegister& reg) {
    std::vector<Complex> amps(static_cast<std::size_t>(reg.total_dimension()), Complex{0.0, 0.0});
    std::int64_t m = 0;
    for (int q = 0; q < reg.size(); ++q) {
        m += reg.dim(q) - 1;
    }
    const double a = 1.0 / std::sqrt(static_cast<double>(m));
    for (int q = 0; q < reg.size(); ++q) {
        for (int k = 1; k < reg.dim(q); ++k) {
            BasisIndex idx(static_cast<std::size_t>(reg.size()), 0);
            idx[static_cast<std::size_t>(q)] = k;
            amps[static_cast<std::size_t>(encode_index(idx, reg))] = Complex{a, 0.0};
        }
    }
    return StateVector{reg, std::move(amps)};
}

namespace detail {

/// Uniform double in [-1, 1) from the top 53 bits of one mt19937_64 draw.
/// Fully determined by the seed on every platform.
inline double uniform_pm1(std::mt19937_64& rng) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return 2.0 * u - 1.0;
}

} // namespace detail

/// Random normalized state: real and imaginary parts drawn independently
/// uniform on [-1, 1) from mt19937_64 seeded with `seed`; per amplitude the
/// real part is drawn first. Deterministic per seed.
inline StateVector random_state(const QuditRegister& reg, std::uint64_t seed) {
    std::mt19937_64 rng{seed};
    std::vector<Complex> amps(static_cast<std::size_t>(reg.total_dimension()));
    for (Complex& a : amps) {
        const double re = detail::uniform_pm1(rng);
        const double im = detail::uniform_pm1(rng);
        a = Complex{re, im};
    }
    return normalize_state(StateVector{reg, std::move(amps)});
}

} // namespace qsp
