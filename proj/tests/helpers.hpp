#pragma once

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "qsp/circuit.hpp"
#include "qsp/core.hpp"

namespace testutil {

using qsp::Complex;

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64{seed}; }

inline double uniform(std::mt19937_64& g, double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(g() >> 11) * 0x1.0p-53);
}

inline int uniform_int(std::mt19937_64& g, int lo, int hi) {
    return lo + static_cast<int>(g() % static_cast<std::uint64_t>(hi - lo + 1));
}

inline qsp::QuditRegister random_register(std::mt19937_64& g, int max_qudits, int min_dim,
                                          int max_dim) {
    const int n = uniform_int(g, 1, max_qudits);
    std::vector<int> dims(static_cast<std::size_t>(n));
    for (int& d : dims) {
        d = uniform_int(g, min_dim, max_dim);
    }
    return qsp::QuditRegister{dims};
}

/// Random unit vector in canonical form: unit L2 norm, first entry of
/// magnitude above eps real non-negative.
inline std::vector<Complex> random_canonical_weights(std::mt19937_64& g, int d,
                                                     double eps = 1e-12) {
    std::vector<Complex> w(static_cast<std::size_t>(d));
    for (Complex& x : w) {
        x = Complex{uniform(g, -1.0, 1.0), uniform(g, -1.0, 1.0)};
    }
    double norm = 0.0;
    for (const Complex& x : w) {
        norm += std::norm(x);
    }
    norm = std::sqrt(norm);
    for (Complex& x : w) {
        x /= norm;
    }
    for (Complex& x : w) {
        if (std::abs(x) > eps) {
            Complex phase = x / std::abs(x);
            for (Complex& y : w) {
                y /= phase;
            }
            break;
        }
    }
    return w;
}

/// Independent matrix-exponential oracle: sum of the Taylor series of
/// exp(-i theta/2 (cos(phi) sx + sin(phi) sy)) embedded at (i, j).
inline qsp::ComplexMatrix givens_exp_series(int d, int i, int j, double theta, double phi) {
    qsp::ComplexMatrix gen(d); // -i theta/2 * (cos(phi) sx + sin(phi) sy) at (i, j)
    const Complex mi{0.0, -1.0};
    gen(i, j) = mi * (theta / 2.0) * std::exp(Complex{0.0, -phi});
    gen(j, i) = mi * (theta / 2.0) * std::exp(Complex{0.0, phi});
    qsp::ComplexMatrix result = qsp::ComplexMatrix::identity(d);
    qsp::ComplexMatrix term = qsp::ComplexMatrix::identity(d);
    for (int k = 1; k <= 40; ++k) {
        term = term * gen;
        for (int r = 0; r < d; ++r) {
            for (int c = 0; c < d; ++c) {
                term(r, c) /= static_cast<double>(k);
                result(r, c) += term(r, c);
            }
        }
    }
    return result;
}

inline double max_vec_diff(const std::vector<Complex>& a, const std::vector<Complex>& b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        m = std::max(m, std::abs(a[k] - b[k]));
    }
    return m;
}

/// Max elementwise deviation after aligning the global phase of `b` to `a`.
inline double max_diff_up_to_phase(const qsp::ComplexMatrix& a, const qsp::ComplexMatrix& b) {
    Complex phase{1.0, 0.0};
    bool found = false;
    for (int r = 0; r < a.size() && !found; ++r) {
        for (int c = 0; c < a.size() && !found; ++c) {
            if (std::abs(a(r, c)) > 1e-8 && std::abs(b(r, c)) > 1e-8) {
                phase = a(r, c) / b(r, c);
                phase /= std::abs(phase);
                found = true;
            }
        }
    }
    double m = 0.0;
    for (int r = 0; r < a.size(); ++r) {
        for (int c = 0; c < a.size(); ++c) {
            m = std::max(m, std::abs(a(r, c) - phase * b(r, c)));
        }
    }
    return m;
}

} // namespace testutil
