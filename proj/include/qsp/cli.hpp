#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qsp/circuit.hpp"
#include "qsp/core.hpp"
#include "qsp/dd.hpp"
#include "qsp/generators.hpp"
#include "qsp/simulator.hpp"
#include "qsp/synthesis.hpp"

namespace qsp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerifyMiss = 1; // verify subcommand: below --min-fidelity
inline constexpr int kExitUsage = 2;
inline constexpr int kExitFile = 3;
inline constexpr int kExitInternal = 4; // emitted circuit missed the requested fidelity

enum class Family { ghz, w, embedded_w, random };

struct BenchmarkSpec {
    Family family = Family::ghz;
    std::vector<int> dims;
    std::uint64_t seed = 0;     // random family only
    double threshold = 0.98;    // approx-mode fidelity threshold
};

namespace detail {

inline std::optional<Family> parse_family(const std::string& name) {
    if (name == "ghz") {
        return Family::ghz;
    }
    if (name == "w") {
        return Family::w;
    }
    if (name == "embedded_w") {
        return Family::embedded_w;
    }
    if (name == "random") {
        return Family::random;
    }
    return std::nullopt;
}

inline const char* family_name(Family f) {
    switch (f) {
    case Family::ghz: return "ghz";
    case Family::w: return "w";
    case Family::embedded_w: return "embedded_w";
    case Family::random: return "random";
    }
    return "?";
}

inline StateVector make_state(const BenchmarkSpec& spec, std::uint64_t seed) {
    QuditRegister reg{spec.dims};
    switch (spec.family) {
    case Family::ghz: return ghz(reg);
    case Family::w: return w_qudit(reg);
    case Family::embedded_w: return w_embedded(reg);
    case Family::random: return random_state(reg, seed);
    }
    throw std::logic_error("unreachable");
}

inline std::string read_file(const std::string& path) {
    std::ifstream in{path, std::ios::binary};
    if (!in) {
        throw ParseError("cannot open file: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out{path, std::ios::binary};
    if (!out) {
        throw ParseError("cannot write file: " + path);
    }
    out << text;
}

inline std::string dims_label(const std::vector<int>& dims) {
    std::string s;
    for (std::size_t k = 0; k < dims.size(); ++k) {
        if (k > 0) {
            s += "x";
        }
        s += std::to_string(dims[k]);
    }
    return s;
}

/// Averaged metric: integer rendering when integral, %.6g otherwise.
inline std::string format_metric(double v) {
    if (std::abs(v - std::llround(v)) < 1e-9) {
        return std::to_string(std::llround(v));
    }
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return std::string{buf};
}

inline std::string format_fixed(double v, int digits) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return std::string{buf};
}

} // namespace detail

// --- prepare ----------------------------------------------------------------

struct PrepareOptions {
    std::string state_file;
    std::string generator;
    std::vector<int> dims;
    std::uint64_t seed = 1;
    double fidelity_target = 1.0;
    std::string out_file;
    std::string stats_file;
    std::string dot_file;
    bool prune_identity = false;
    bool merge_shared = false;
};

inline int run_prepare(const PrepareOptions& opt) {
    if (!(opt.fidelity_target > 0.0) || opt.fidelity_target > 1.0) {
        std::cerr << "prepare: --fidelity must be in (0, 1]\n";
        return kExitUsage;
    }
    StateVector source = [&]() -> StateVector {
        if (!opt.state_file.empty()) {
            return state_from_json(detail::read_file(opt.state_file));
        }
        auto family = detail::parse_family(opt.generator);
        if (!family) {
            throw std::invalid_argument("unknown generator \"" + opt.generator + "\"");
        }
        BenchmarkSpec spec{*family, opt.dims, opt.seed, 0.98};
        return detail::make_state(spec, opt.seed);
    }();

    SynthesisMode mode;
    mode.prune_identity = opt.prune_identity;
    mode.merge_shared_siblings = opt.merge_shared;
    if (opt.fidelity_target < 1.0) {
        mode.variant = SynthesisVariant::approx;
        mode.fidelity_threshold = opt.fidelity_target;
    }
    const ToleranceConfig tol;
    SynthesisResult result = synthesize(source, mode, tol);

    detail::write_file(opt.out_file, serialize(result.circuit));
    if (!opt.dot_file.empty()) {
        detail::write_file(opt.dot_file, to_dot(result.dd));
    }
    if (!opt.stats_file.empty()) {
        nlohmann::ordered_json stats;
        stats["dims"] = source.reg.dims();
        stats["mode"] = mode.variant == SynthesisVariant::exact ? "exact" : "approx";
        stats["requested_fidelity"] = opt.fidelity_target;
        stats["achieved_fidelity"] = result.report.achieved_fidelity;
        stats["removed_mass"] = result.report.removed_mass;
        stats["operations"] = result.report.op_count;
        stats["controls_median"] = result.report.control_median;
        stats["nodes_tree"] = result.report.tree_node_count;
        stats["nodes_dd"] = result.report.dd_node_count;
        stats["distinct_weights"] = result.report.distinct_weight_count;
        stats["time_s"] = result.report.elapsed_seconds;
        detail::write_file(opt.stats_file, stats.dump(2) + "\n");
    }

    const double required =
        mode.variant == SynthesisVariant::exact ? 1.0 - tol.eps_verify : opt.fidelity_target;
    if (result.report.achieved_fidelity + tol.eps_verify < required) {
        std::cerr << "prepare: verification missed the requested fidelity ("
                  << detail::format_fixed(result.report.achieved_fidelity, 12) << " < "
                  << detail::format_fixed(required, 12) << ")\n";
        return kExitInternal;
    }
    return kExitOk;
}

// --- verify -----------------------------------------------------------------

struct VerifyOptions {
    std::string circuit_file;
    std::string state_file;
    double min_fidelity = 0.0;
};

inline int run_verify(const VerifyOptions& opt) {
    Circuit circuit = deserialize(detail::read_file(opt.circuit_file));
    StateVector target = state_from_json(detail::read_file(opt.state_file));
    if (circuit.reg != target.reg) {
        throw ParseError("verify: circuit and state registers differ");
    }
    const double f = verify(circuit, target);
    std::cout << detail::format_fixed(f, 12) << "\n";
    return f >= opt.min_fidelity ? kExitOk : kExitVerifyMiss;
}

// --- bench ------------------------------------------------------------------

struct BenchOptions {
    std::string suite;
    std::string spec_file;
    int runs = 40;
    std::uint64_t seed = 1;
    std::string format = "csv";
    std::string out_file;
};

struct BenchRow {
    std::string name;
    int n_qudits = 0;
    std::string dims;
    std::string mode;
    double nodes = 0.0;
    double distinct_c = 0.0;
    double operations = 0.0;
    double controls_median = 0.0;
    double time_s = 0.0;
    double fidelity = 0.0;
};

namespace detail {

/// The benchmark set of the evaluation table: three structured families and
/// five random registers.
inline std::vector<BenchmarkSpec> table1_suite() {
    const std::vector<std::vector<int>> structured = {
        {3, 6, 2}, {9, 5, 6, 3}, {4, 7, 4, 4, 3, 5}};
    std::vector<BenchmarkSpec> out;
    for (const auto& dims : structured) {
        out.push_back({Family::embedded_w, dims, 0, 0.98});
    }
    for (const auto& dims : structured) {
        out.push_back({Family::ghz, dims, 0, 0.98});
    }
    for (const auto& dims : structured) {
        out.push_back({Family::w, dims, 0, 0.98});
    }
    const std::vector<std::vector<int>> random_regs = {
        {3, 6, 2}, {9, 5, 6, 3}, {6, 6, 5, 3, 3}, {5, 4, 2, 5, 5, 2}, {4, 7, 4, 4, 3, 5}};
    for (const auto& dims : random_regs) {
        out.push_back({Family::random, dims, 0, 0.98});
    }
    return out;
}

inline std::vector<BenchmarkSpec> suite_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bench spec: invalid JSON: ") + e.what());
    }
    if (!j.is_array()) {
        throw ParseError("bench spec: expected an array of benchmark entries");
    }
    std::vector<BenchmarkSpec> out;
    for (const auto& entry : j) {
        if (!entry.is_object() || !entry.contains("family") || !entry.contains("dims")) {
            throw ParseError("bench spec: entries need \"family\" and \"dims\"");
        }
        BenchmarkSpec spec;
        auto family = parse_family(entry.at("family").is_string()
                                       ? entry.at("family").get<std::string>()
                                       : "");
        if (!family) {
            throw ParseError("bench spec: unknown family");
        }
        spec.family = *family;
        try {
            spec.dims = entry.at("dims").get<std::vector<int>>();
            if (entry.contains("seed")) {
                spec.seed = entry.at("seed").get<std::uint64_t>();
            }
            if (entry.contains("threshold")) {
                spec.threshold = entry.at("threshold").get<double>();
            }
        } catch (const nlohmann::json::exception&) {
            throw ParseError("bench spec: bad entry field types");
        }
        if (!(spec.threshold > 0.0) || spec.threshold > 1.0) {
            throw ParseError("bench spec: threshold must be in (0, 1]");
        }
        out.push_back(std::move(spec));
    }
    return out;
}

inline std::string render_rows(const std::vector<BenchRow>& rows, const std::string& format) {
    std::string out;
    const char* header = "name,n_qudits,dims,mode,nodes_tree,distinct_c,operations,"
                         "controls_median,time_s,fidelity";
    if (format == "csv") {
        out += header;
        out += "\n";
        for (const BenchRow& r : rows) {
            out += r.name + "," + std::to_string(r.n_qudits) + "," + r.dims + "," + r.mode + "," +
                   format_metric(r.nodes) + "," + format_metric(r.distinct_c) + "," +
                   format_metric(r.operations) + "," + format_metric(r.controls_median) + "," +
                   format_fixed(r.time_s, 6) + "," + format_fixed(r.fidelity, 6) + "\n";
        }
        return out;
    }
    out += "| name | n_qudits | dims | mode | nodes_tree | distinct_c | operations | "
           "controls_median | time_s | fidelity |\n";
    out += "|---|---|---|---|---|---|---|---|---|---|\n";
    for (const BenchRow& r : rows) {
        out += "| " + r.name + " | " + std::to_string(r.n_qudits) + " | " + r.dims + " | " +
               r.mode + " | " + format_metric(r.nodes) + " | " + format_metric(r.distinct_c) +
               " | " + format_metric(r.operations) + " | " + format_metric(r.controls_median) +
               " | " + format_fixed(r.time_s, 6) + " | " + format_fixed(r.fidelity, 6) + " |\n";
    }
    return out;
}

} // namespace detail

inline int run_bench(const BenchOptions& opt) {
    std::vector<BenchmarkSpec> suite;
    if (!opt.spec_file.empty()) {
        suite = detail::suite_from_json(detail::read_file(opt.spec_file));
    } else if (opt.suite == "table1") {
        suite = detail::table1_suite();
    } else {
        std::cerr << "bench: unknown suite \"" << opt.suite << "\"\n";
        return kExitUsage;
    }

    const ToleranceConfig tol;
    std::vector<BenchRow> rows;
    for (const BenchmarkSpec& spec : suite) {
        for (int pass = 0; pass < 2; ++pass) {
            SynthesisMode mode;
            if (pass == 1) {
                mode.variant = SynthesisVariant::approx;
                mode.fidelity_threshold = spec.threshold;
            }
            BenchRow row;
            row.name = detail::family_name(spec.family);
            row.n_qudits = static_cast<int>(spec.dims.size());
            row.dims = detail::dims_label(spec.dims);
            row.mode = pass == 0 ? "exact" : "approx";
            for (int r = 0; r < opt.runs; ++r) {
                const std::uint64_t seed =
                    (spec.seed != 0 ? spec.seed : opt.seed) + static_cast<std::uint64_t>(r);
                StateVector state = detail::make_state(spec, seed);
                SynthesisResult result = synthesize(state, mode, tol);
                const double required = mode.variant == SynthesisVariant::exact
                                            ? 1.0 - tol.eps_verify
                                            : mode.fidelity_threshold;
                if (result.report.achieved_fidelity + tol.eps_verify < required) {
                    std::cerr << "bench: " << row.name << " " << row.dims << " " << row.mode
                              << ": verification missed the requested fidelity\n";
                    return kExitInternal;
                }
                row.nodes += static_cast<double>(mode.variant == SynthesisVariant::exact
                                                     ? result.report.tree_node_count
                                                     : result.report.dd_node_count);
                row.distinct_c += static_cast<double>(result.report.distinct_weight_count);
                row.operations += static_cast<double>(result.report.op_count);
                row.controls_median += static_cast<double>(result.report.control_median);
                row.time_s += result.report.elapsed_seconds;
                row.fidelity += result.report.achieved_fidelity;
            }
            const double n = static_cast<double>(opt.runs);
            row.nodes /= n;
            row.distinct_c /= n;
            row.operations /= n;
            row.controls_median /= n;
            row.time_s /= n;
            row.fidelity /= n;
            rows.push_back(std::move(row));
        }
    }

    const std::string text = detail::render_rows(rows, opt.format);
    if (opt.out_file.empty()) {
        std::cout << text;
    } else {
        detail::write_file(opt.out_file, text);
    }
    return kExitOk;
}

// --- entry point --------------------------------------------------------------

inline int cli_main(int argc, const char* const* argv) {
    CLI::App app{"qudit state preparation: compile states to multi-controlled "
                 "two-level rotation circuits via edge-weighted decision diagrams"};
    app.require_subcommand(1);

    PrepareOptions prep;
    std::string dims_arg;
    auto* prepare = app.add_subcommand("prepare", "synthesize a circuit for a state");
    auto* state_opt = prepare->add_option("--state", prep.state_file, "state JSON file");
    auto* gen_opt = prepare->add_option("--generator", prep.generator,
                                        "benchmark family: ghz|w|embedded_w|random");
    prepare->add_option("--dims", dims_arg, "comma-separated qudit dimensions");
    prepare->add_option("--seed", prep.seed, "seed for the random generator");
    prepare->add_option("--fidelity", prep.fidelity_target,
                        "target fidelity in (0, 1]; 1.0 = exact")
        ->check(CLI::Range(1e-9, 1.0));
    prepare->add_option("--out", prep.out_file, "output circuit JSON file")->required();
    prepare->add_option("--stats", prep.stats_file, "write synthesis metrics JSON");
    prepare->add_option("--dot", prep.dot_file, "write the decision diagram in DOT format");
    prepare->add_flag("--prune-identity", prep.prune_identity, "drop identity rotations");
    prepare->add_flag("--merge-shared", prep.merge_shared,
                      "merge sibling edges into shared children into one control set");
    state_opt->excludes(gen_opt);
    gen_opt->excludes(state_opt);

    VerifyOptions ver;
    auto* verify_cmd = app.add_subcommand("verify", "simulate a circuit against a state");
    verify_cmd->add_option("--circuit", ver.circuit_file, "circuit JSON file")->required();
    verify_cmd->add_option("--state", ver.state_file, "state JSON file")->required();
    verify_cmd->add_option("--min-fidelity", ver.min_fidelity, "required fidelity (default 0)");

    BenchOptions bench;
    auto* bench_cmd = app.add_subcommand("bench", "run a benchmark table");
    bench_cmd->add_option("--suite", bench.suite, "built-in suite name (table1)");
    bench_cmd->add_option("--spec", bench.spec_file, "benchmark spec JSON file");
    bench_cmd->add_option("--runs", bench.runs, "repetitions per row")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--seed", bench.seed, "base seed for random states");
    bench_cmd->add_option("--format", bench.format, "output format")
        ->check(CLI::IsMember({"csv", "md"}));
    bench_cmd->add_option("--out", bench.out_file, "output file (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (prepare->parsed()) {
            if (prep.state_file.empty() == prep.generator.empty()) {
                std::cerr << "prepare: exactly one of --state or --generator is required\n";
                return kExitUsage;
            }
            if (!prep.generator.empty()) {
                if (dims_arg.empty()) {
                    std::cerr << "prepare: --generator requires --dims\n";
                    return kExitUsage;
                }
                std::stringstream ss{dims_arg};
                std::string tok;
                while (std::getline(ss, tok, ',')) {
                    prep.dims.push_back(std::stoi(tok));
                }
            }
            return run_prepare(prep);
        }
        if (verify_cmd->parsed()) {
            return run_verify(ver);
        }
        if (bench_cmd->parsed()) {
            if (bench.suite.empty() && bench.spec_file.empty()) {
                std::cerr << "bench: either --suite or --spec is required\n";
                return kExitUsage;
            }
            return run_bench(bench);
        }
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFile;
    } catch (const ShapeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFile;
    }
    return kExitUsage;
}

} // namespace qsp::cli
