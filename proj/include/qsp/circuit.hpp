#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <numbers>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "qsp/core.hpp"

namespace qsp {

/// Admissible values of one control qudit. Singleton in the default
/// synthesis path; merged sibling edges produce level sets.
struct ControlSpec {
    int qudit = 0;
    std::vector<int> levels; // sorted ascending, non-empty
};

/// Two-level rotation R_{i,j}(theta, phi) = exp(-i theta/2 (cos(phi) sx + sin(phi) sy))
/// embedded at levels (i, j) of the target qudit.
struct GivensRotation {
    int target = 0;
    int level_i = 0;
    int level_j = 1;
    double theta = 0.0;
    double phi = 0.0;
    std::vector<ControlSpec> controls;
};

/// Diagonal two-level rotation diag(e^{-i angle/2}, e^{+i angle/2}) at (i, j).
struct PhaseRotation {
    int target = 0;
    int level_i = 0;
    int level_j = 1;
    double angle = 0.0;
    std::vector<ControlSpec> controls;
};

using Operation = std::variant<GivensRotation, PhaseRotation>;

struct Circuit {
    QuditRegister reg;
    std::vector<Operation> ops;
};

inline int target_of(const Operation& op) {
    return std::visit([](const auto& o) { return o.target; }, op);
}

inline std::pair<int, int> levels_of(const Operation& op) {
    return std::visit([](const auto& o) { return std::pair<int, int>{o.level_i, o.level_j}; }, op);
}

inline const std::vector<ControlSpec>& controls_of(const Operation& op) {
    return std::visit([](const auto& o) -> const std::vector<ControlSpec>& { return o.controls; },
                      op);
}

/// Checks target/level/control validity of an op against a register.
inline void validate_op(const Operation& op, const QuditRegister& reg) {
    const int target = target_of(op);
    if (target < 0 || target >= reg.size()) {
        throw ShapeError("operation: target qudit out of range");
    }
    auto [i, j] = levels_of(op);
    if (i < 0 || j <= i || j >= reg.dim(target)) {
        throw ShapeError("operation: levels out of range for target dimension");
    }
    for (const ControlSpec& c : controls_of(op)) {
        if (c.qudit < 0 || c.qudit >= reg.size()) {
            throw ShapeError("operation: control qudit out of range");
        }
        if (c.qudit == target) {
            throw ShapeError("operation: control on target qudit");
        }
        if (c.levels.empty()) {
            throw ShapeError("operation: empty control level set");
        }
        for (int lv : c.levels) {
            if (lv < 0 || lv >= reg.dim(c.qudit)) {
                throw ShapeError("operation: control level out of range");
            }
        }
    }
}

/// Small dense complex matrix, row-major.
class ComplexMatrix {
public:
    explicit ComplexMatrix(int n) : n_(n), a_(static_cast<std::size_t>(n) * n, Complex{0.0, 0.0}) {}

    static ComplexMatrix identity(int n) {
        ComplexMatrix m(n);
        for (int k = 0; k < n; ++k) {
            m(k, k) = Complex{1.0, 0.0};
        }
        return m;
    }

    int size() const { return n_; }

    Complex& operator()(int r, int c) { return a_[static_cast<std::size_t>(r) * n_ + c]; }
    const Complex& operator()(int r, int c) const {
        return a_[static_cast<std::size_t>(r) * n_ + c];
    }

    ComplexMatrix operator*(const ComplexMatrix& rhs) const {
        ComplexMatrix out(n_);
        for (int r = 0; r < n_; ++r) {
            for (int k = 0; k < n_; ++k) {
                Complex v = (*this)(r, k);
                if (v == Complex{0.0, 0.0}) {
                    continue;
                }
                for (int c = 0; c < n_; ++c) {
                    out(r, c) += v * rhs(k, c);
                }
            }
        }
        return out;
    }

    std::vector<Complex> apply(const std::vector<Complex>& v) const {
        std::vector<Complex> out(static_cast<std::size_t>(n_), Complex{0.0, 0.0});
        for (int r = 0; r < n_; ++r) {
            for (int c = 0; c < n_; ++c) {
                out[static_cast<std::size_t>(r)] += (*this)(r, c) * v[static_cast<std::size_t>(c)];
            }
        }
        return out;
    }

    ComplexMatrix adjoint() const {
        ComplexMatrix out(n_);
        for (int r = 0; r < n_; ++r) {
            for (int c = 0; c < n_; ++c) {
                out(c, r) = std::conj((*this)(r, c));
            }
        }
        return out;
    }

    double max_abs_diff(const ComplexMatrix& rhs) const {
        double m = 0.0;
        for (std::size_t k = 0; k < a_.size(); ++k) {
            m = std::max(m, std::abs(a_[k] - rhs.a_[k]));
        }
        return m;
    }

    bool is_unitary(double eps) const {
        return (adjoint() * *this).max_abs_diff(identity(n_)) <= eps;
    }

private:
    int n_;
    std::vector<Complex> a_;
};

namespace detail {

/// 2x2 block of a Givens rotation: [[m00, m01], [m10, m11]].
inline std::array<Complex, 4> givens_block(double theta, double phi) {
    const double c = std::cos(theta / 2.0);
    const double s = std::sin(theta / 2.0);
    const Complex mi{0.0, -1.0};
    return {Complex{c, 0.0}, mi * std::exp(Complex{0.0, -phi}) * s,
            mi * std::exp(Complex{0.0, phi}) * s, Complex{c, 0.0}};
}

} // namespace detail

/// d x d matrix of one operation on its target qudit, controls ignored.
inline ComplexMatrix local_matrix(const Operation& op, int d) {
    auto [i, j] = levels_of(op);
    if (i < 0 || j <= i || j >= d) {
        throw ShapeError("local_matrix: levels out of range");
    }
    ComplexMatrix m = ComplexMatrix::identity(d);
    if (std::holds_alternative<GivensRotation>(op)) {
        const auto& g = std::get<GivensRotation>(op);
        auto b = detail::givens_block(g.theta, g.phi);
        m(i, i) = b[0];
        m(i, j) = b[1];
        m(j, i) = b[2];
        m(j, j) = b[3];
    } else {
        const auto& p = std::get<PhaseRotation>(op);
        m(i, i) = std::exp(Complex{0.0, -p.angle / 2.0});
        m(j, j) = std::exp(Complex{0.0, p.angle / 2.0});
    }
    return m;
}

/// Full register-space matrix: applies the local matrix on the target factor
/// for exactly those basis states whose control digits match, identity
/// elsewhere.
inline ComplexMatrix full_matrix(const Operation& op, const QuditRegister& reg) {
    validate_op(op, reg);
    const int target = target_of(op);
    auto [i, j] = levels_of(op);
    const std::int64_t total = reg.total_dimension();
    const std::int64_t stride = reg.stride(target);
    const auto& controls = controls_of(op);

    auto controls_match = [&](std::int64_t flat) {
        for (const ControlSpec& c : controls) {
            int digit = reg.digit(flat, c.qudit);
            if (std::find(c.levels.begin(), c.levels.end(), digit) == c.levels.end()) {
                return false;
            }
        }
        return true;
    };

    ComplexMatrix m = ComplexMatrix::identity(static_cast<int>(total));
    ComplexMatrix local = local_matrix(op, reg.dim(target));
    for (std::int64_t flat = 0; flat < total; ++flat) {
        if (reg.digit(flat, target) != i || !controls_match(flat)) {
            continue;
        }
        const std::int64_t partner = flat + static_cast<std::int64_t>(j - i) * stride;
        const int fi = static_cast<int>(flat);
        const int fj = static_cast<int>(partner);
        m(fi, fi) = local(i, i);
        m(fi, fj) = local(i, j);
        m(fj, fi) = local(j, i);
        m(fj, fj) = local(j, j);
    }
    return m;
}

/// Z(angle) on levels (i, j) as three Givens rotations, returned in
/// application order. Their composite equals the PhaseRotation matrix.
inline std::array<GivensRotation, 3> rz_decompose(double angle, int level_i, int level_j) {
    const double half_pi = std::numbers::pi / 2.0;
    GivensRotation first{0, level_i, level_j, half_pi, 0.0, {}};
    GivensRotation middle{0, level_i, level_j, -angle, half_pi, {}};
    GivensRotation last{0, level_i, level_j, -half_pi, 0.0, {}};
    return {first, middle, last};
}

/// Same decomposition carrying over target and controls of a circuit op.
inline std::array<GivensRotation, 3> rz_decompose(const PhaseRotation& p) {
    auto rots = rz_decompose(p.angle, p.level_i, p.level_j);
    for (GivensRotation& g : rots) {
        g.target = p.target;
        g.controls = p.controls;
    }
    return rots;
}

// --- circuit file format ---------------------------------------------------
//
// {"dims":[...], "ops":[{"kind":"R","target":t,"levels":[i,j],"theta":str,
//  "phi":str,"controls":[{"qudit":q,"levels":[...]}]} |
//  {"kind":"RZ","target":t,"levels":[i,j],"angle":str,"controls":[...]}]}
// Angles are decimal strings with full binary-reproducible precision.

namespace detail {

inline std::string format_angle(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return std::string{buf};
}

inline double parse_angle(const std::string& s, const char* what, std::size_t op_index) {
    const char* begin = s.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end != begin + s.size() || s.empty() || !std::isfinite(v)) {
        throw ParseError("circuit: ops[" + std::to_string(op_index) + "]: bad " + what +
                         " value \"" + s + "\"");
    }
    return v;
}

inline nlohmann::ordered_json controls_to_json(const std::vector<ControlSpec>& controls) {
    auto arr = nlohmann::ordered_json::array();
    for (const ControlSpec& c : controls) {
        arr.push_back({{"qudit", c.qudit}, {"levels", c.levels}});
    }
    return arr;
}

inline std::vector<ControlSpec> controls_from_json(const nlohmann::json& j,
                                                   std::size_t op_index) {
    if (!j.is_array()) {
        throw ParseError("circuit: ops[" + std::to_string(op_index) +
                         "]: \"controls\" must be an array");
    }
    std::vector<ControlSpec> out;
    for (const auto& entry : j) {
        if (!entry.is_object() || !entry.contains("qudit") || !entry.contains("levels")) {
            throw ParseError("circuit: ops[" + std::to_string(op_index) + "]: bad control entry");
        }
        ControlSpec c;
        try {
            c.qudit = entry.at("qudit").get<int>();
            c.levels = entry.at("levels").get<std::vector<int>>();
        } catch (const nlohmann::json::exception&) {
            throw ParseError("circuit: ops[" + std::to_string(op_index) + "]: bad control entry");
        }
        out.push_back(std::move(c));
    }
    return out;
}

} // namespace detail

inline std::string serialize(const Circuit& circuit) {
    nlohmann::ordered_json j;
    j["dims"] = circuit.reg.dims();
    auto& ops = j["ops"] = nlohmann::ordered_json::array();
    for (const Operation& op : circuit.ops) {
        nlohmann::ordered_json o;
        if (std::holds_alternative<GivensRotation>(op)) {
            const auto& g = std::get<GivensRotation>(op);
            o["kind"] = "R";
            o["target"] = g.target;
            o["levels"] = {g.level_i, g.level_j};
            o["theta"] = detail::format_angle(g.theta);
            o["phi"] = detail::format_angle(g.phi);
            o["controls"] = detail::controls_to_json(g.controls);
        } else {
            const auto& p = std::get<PhaseRotation>(op);
            o["kind"] = "RZ";
            o["target"] = p.target;
            o["levels"] = {p.level_i, p.level_j};
            o["angle"] = detail::format_angle(p.angle);
            o["controls"] = detail::controls_to_json(p.controls);
        }
        ops.push_back(std::move(o));
    }
    return j.dump();
}

inline Circuit deserialize(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("circuit: invalid JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("dims") || !j.contains("ops")) {
        throw ParseError("circuit: expected object with \"dims\" and \"ops\"");
    }
    std::vector<int> dims;
    try {
        dims = j.at("dims").get<std::vector<int>>();
    } catch (const nlohmann::json::exception&) {
        throw ParseError("circuit: \"dims\" must be an array of integers");
    }
    auto reg = [&]() -> QuditRegister {
        try {
            return QuditRegister{dims};
        } catch (const ShapeError& e) {
            throw ParseError(std::string("circuit: ") + e.what());
        }
    }();
    const auto& ops = j.at("ops");
    if (!ops.is_array()) {
        throw ParseError("circuit: \"ops\" must be an array");
    }
    Circuit out{reg, {}};
    for (std::size_t k = 0; k < ops.size(); ++k) {
        const auto& o = ops[k];
        if (!o.is_object() || !o.contains("kind")) {
            throw ParseError("circuit: ops[" + std::to_string(k) + "]: missing \"kind\"");
        }
        const std::string kind = o.at("kind").is_string() ? o.at("kind").get<std::string>() : "";
        if (kind != "R" && kind != "RZ") {
            throw ParseError("circuit: ops[" + std::to_string(k) + "]: unknown kind \"" + kind +
                             "\"");
        }
        int target = 0;
        std::vector<int> levels;
        try {
            target = o.at("target").get<int>();
            levels = o.at("levels").get<std::vector<int>>();
        } catch (const nlohmann::json::exception&) {
            throw ParseError("circuit: ops[" + std::to_string(k) + "]: bad target/levels");
        }
        if (levels.size() != 2) {
            throw ParseError("circuit: ops[" + std::to_string(k) + "]: levels must be a pair");
        }
        auto controls = detail::controls_from_json(
            o.contains("controls") ? o.at("controls") : nlohmann::json::array(), k);
        Operation op;
        if (kind == "R") {
            if (!o.contains("theta") || !o.at("theta").is_string() || !o.contains("phi") ||
                !o.at("phi").is_string()) {
                throw ParseError("circuit: ops[" + std::to_string(k) +
                                 "]: R needs string \"theta\" and \"phi\"");
            }
            op = GivensRotation{target, levels[0], levels[1],
                                detail::parse_angle(o.at("theta").get<std::string>(), "theta", k),
                                detail::parse_angle(o.at("phi").get<std::string>(), "phi", k),
                                std::move(controls)};
        } else {
            if (!o.contains("angle") || !o.at("angle").is_string()) {
                throw ParseError("circuit: ops[" + std::to_string(k) +
                                 "]: RZ needs string \"angle\"");
            }
            op = PhaseRotation{target, levels[0], levels[1],
                               detail::parse_angle(o.at("angle").get<std::string>(), "angle", k),
                               std::move(controls)};
        }
        try {
            validate_op(op, reg);
        } catch (const ShapeError& e) {
            throw ParseError("circuit: ops[" + std::to_string(k) + "]: " + e.what());
        }
        out.ops.push_back(std::move(op));
    }
    return out;
}

} // namespace qsp
