#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace qsp {

using Complex = std::complex<double>;

/// Tolerances shared across the library. All values are strictly positive.
struct ToleranceConfig {
    double eps_zero = 1e-12;     ///< magnitudes at or below this count as zero
    double eps_norm = 1e-10;     ///< normalization checks
    double eps_distinct = 1e-10; ///< bucket width when counting distinct weights
    double eps_verify = 1e-9;    ///< fidelity / elementwise verification

    void validate() const {
        if (eps_zero <= 0.0 || eps_norm <= 0.0 || eps_distinct <= 0.0 || eps_verify <= 0.0) {
            throw std::invalid_argument("ToleranceConfig: tolerances must be strictly positive");
        }
    }
};

struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DegenerateStateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};

/// Ordered list of qudit dimensions, most significant first: dims()[0] is the
/// dimension of the highest-order qudit. Flat indices are mixed-radix encoded
/// in this order.
class QuditRegister {
public:
    explicit QuditRegister(std::vector<int> dims) : dims_(std::move(dims)) {
        if (dims_.empty()) {
            throw ShapeError("QuditRegister: needs at least one qudit");
        }
        for (int d : dims_) {
            if (d < 2) {
                throw ShapeError("QuditRegister: every dimension must be >= 2");
            }
        }
        strides_.assign(dims_.size(), 1);
        for (int k = static_cast<int>(dims_.size()) - 2; k >= 0; --k) {
            strides_[k] = strides_[k + 1] * dims_[k + 1];
        }
        total_ = strides_[0] * dims_[0];
    }

    int size() const { return static_cast<int>(dims_.size()); }
    int dim(int pos) const { return dims_[static_cast<std::size_t>(pos)]; }
    const std::vector<int>& dims() const { return dims_; }
    std::int64_t total_dimension() const { return total_; }

    /// Product of the dimensions below position `pos` (1 for the last qudit).
    std::int64_t stride(int pos) const { return strides_[static_cast<std::size_t>(pos)]; }

    /// Digit of `flat` at register position `pos`.
    int digit(std::int64_t flat, int pos) const {
        return static_cast<int>((flat / stride(pos)) % dim(pos));
    }

    bool operator==(const QuditRegister& other) const { return dims_ == other.dims_; }
    bool operator!=(const QuditRegister& other) const { return !(*this == other); }

private:
    std::vector<int> dims_;
    std::vector<std::int64_t> strides_;
    std::int64_t total_ = 0;
};

/// Digits of one basis state, most significant first (same order as dims).
using BasisIndex = std::vector<int>;

inline std::int64_t encode_index(const BasisIndex& digits, const QuditRegister& reg) {
    if (static_cast<int>(digits.size()) != reg.size()) {
        throw ShapeError("encode_index: digit count does not match register");
    }
    std::int64_t flat = 0;
    for (int k = 0; k < reg.size(); ++k) {
        if (digits[static_cast<std::size_t>(k)] < 0 ||
            digits[static_cast<std::size_t>(k)] >= reg.dim(k)) {
            throw std::out_of_range("encode_index: digit out of range at position " +
                                    std::to_string(k));
        }
        flat += static_cast<std::int64_t>(digits[static_cast<std::size_t>(k)]) * reg.stride(k);
    }
    return flat;
}

inline BasisIndex decode_index(std::int64_t flat, const QuditRegister& reg) {
    if (flat < 0 || flat >= reg.total_dimension()) {
        throw std::out_of_range("decode_index: flat index out of range");
    }
    BasisIndex digits(static_cast<std::size_t>(reg.size()));
    for (int k = 0; k < reg.size(); ++k) {
        digits[static_cast<std::size_t>(k)] = reg.digit(flat, k);
    }
    return digits;
}

/// Dense complex amplitude vector over a register, flat index in encode order.
struct StateVector {
    QuditRegister reg;
    std::vector<Complex> amplitudes;

    StateVector(QuditRegister r, std::vector<Complex> amps)
        : reg(std::move(r)), amplitudes(std::move(amps)) {
        if (static_cast<std::int64_t>(amplitudes.size()) != reg.total_dimension()) {
            throw ShapeError("StateVector: amplitude count does not match register dimension");
        }
    }

    double norm() const {
        double s = 0.0;
        for (const Complex& a : amplitudes) {
            s += std::norm(a);
        }
        return std::sqrt(s);
    }

    Complex at(const BasisIndex& idx) const {
        return amplitudes[static_cast<std::size_t>(encode_index(idx, reg))];
    }
};

inline StateVector normalize_state(const StateVector& s, const ToleranceConfig& tol = {}) {
    double n = s.norm();
    if (n <= tol.eps_zero) {
        throw DegenerateStateError("normalize_state: zero vector");
    }
    StateVector out = s;
    for (Complex& a : out.amplitudes) {
        a /= n;
    }
    return out;
}

/// Squared overlap |<a|b>|^2 of two normalized states over the same register.
inline double fidelity(const StateVector& a, const StateVector& b) {
    if (a.reg != b.reg) {
        throw ShapeError("fidelity: register mismatch");
    }
    Complex overlap{0.0, 0.0};
    for (std::size_t i = 0; i < a.amplitudes.size(); ++i) {
        overlap += std::conj(a.amplitudes[i]) * b.amplitudes[i];
    }
    return std::norm(overlap);
}

// --- state file format ---------------------------------------------------
//
// {"dims":[d_{n-1},...,d_0], "amplitudes":[[re,im],...]} with amplitudes in
// encode order. The parser rejects length mismatches and non-finite numbers.

inline std::string state_to_json(const StateVector& s) {
    nlohmann::ordered_json j;
    j["dims"] = s.reg.dims();
    auto& amps = j["amplitudes"] = nlohmann::ordered_json::array();
    for (const Complex& a : s.amplitudes) {
        amps.push_back({a.real(), a.imag()});
    }
    return j.dump();
}

inline StateVector state_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("state: invalid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("dims") || !j.contains("amplitudes")) {
        throw ParseError("state: expected object with \"dims\" and \"amplitudes\"");
    }
    std::vector<int> dims;
    try {
        dims = j.at("dims").get<std::vector<int>>();
    } catch (const nlohmann::json::exception&) {
        throw ParseError("state: \"dims\" must be an array of integers");
    }
    auto reg = [&]() -> QuditRegister {
        try {
            return QuditRegister{dims};
        } catch (const ShapeError& e) {
            throw ParseError(std::string("state: ") + e.what());
        }
    }();
    const auto& amps = j.at("amplitudes");
    if (!amps.is_array() ||
        static_cast<std::int64_t>(amps.size()) != reg.total_dimension()) {
        throw ParseError("state: amplitude count does not match register dimension");
    }
    std::vector<Complex> values;
    values.reserve(amps.size());
    for (const auto& entry : amps) {
        if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number() ||
            !entry[1].is_number()) {
            throw ParseError("state: each amplitude must be a [re, im] pair");
        }
        double re = entry[0].get<double>();
        double im = entry[1].get<double>();
        if (!std::isfinite(re) || !std::isfinite(im)) {
            throw ParseError("state: non-finite amplitude");
        }
        values.emplace_back(re, im);
    }
    return StateVector{reg, std::move(values)};
}

} // namespace qsp
