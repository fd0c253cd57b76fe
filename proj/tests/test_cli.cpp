#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qsp/cli.hpp"

namespace fs = std::filesystem;

namespace {

int invoke(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("qsprep");
    for (const std::string& a : args) {
        argv.push_back(a.c_str());
    }
    return qsp::cli::cli_main(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
    std::ifstream in{p};
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("qsprep_test_" + std::to_string(std::rand()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

} // namespace

TEST_CASE("prepare + verify round trip") {
    TempDir tmp;
    const std::string circuit = tmp.file("ghz.json");
    const std::string state = tmp.file("ghz_state.json");
    const std::string stats = tmp.file("stats.json");

    REQUIRE(invoke({"prepare", "--generator", "ghz", "--dims", "3,3", "--out", circuit, "--stats",
                    stats}) == 0);
    std::ofstream{state} << qsp::state_to_json(qsp::ghz(qsp::QuditRegister{{3, 3}}));

    REQUIRE(invoke({"verify", "--circuit", circuit, "--state", state}) == 0);
    REQUIRE(invoke({"verify", "--circuit", circuit, "--state", state, "--min-fidelity",
                    "0.999999"}) == 0);

    auto j = nlohmann::json::parse(slurp(stats));
    CHECK(j.at("mode") == "exact");
    CHECK(j.at("achieved_fidelity").get<double>() >= 1.0 - 1e-9);
    CHECK(j.at("operations").get<int>() == 12);
}

TEST_CASE("prepare writes a dot rendering on request") {
    TempDir tmp;
    const std::string circuit = tmp.file("c.json");
    const std::string dot = tmp.file("dd.dot");
    REQUIRE(invoke({"prepare", "--generator", "ghz", "--dims", "2,2", "--out", circuit, "--dot",
                    dot}) == 0);
    const std::string text = slurp(dot);
    CHECK(text.find("digraph dd {") == 0);
    CHECK(text.find("0.707107") != std::string::npos);
}

TEST_CASE("prepare approximated random state") {
    TempDir tmp;
    const std::string circuit = tmp.file("rand.json");
    const std::string stats = tmp.file("rand_stats.json");
    REQUIRE(invoke({"prepare", "--generator", "random", "--dims", "9,5,6,3", "--seed", "7",
                    "--fidelity", "0.98", "--out", circuit, "--stats", stats}) == 0);
    auto j = nlohmann::json::parse(slurp(stats));
    const double f = j.at("achieved_fidelity").get<double>();
    CHECK(j.at("mode") == "approx");
    CHECK(f >= 0.98);
    CHECK(f < 1.0);

    // a 0.98-grade circuit fails a 0.999 bar
    const std::string state = tmp.file("rand_state.json");
    std::ofstream{state} << qsp::state_to_json(
        qsp::random_state(qsp::QuditRegister{{9, 5, 6, 3}}, 7));
    CHECK(invoke({"verify", "--circuit", circuit, "--state", state, "--min-fidelity", "0.999"}) ==
          1);
}

TEST_CASE("prepare optimization flags") {
    TempDir tmp;
    const std::string full_stats = tmp.file("full.json");
    const std::string lean_stats = tmp.file("lean.json");
    REQUIRE(invoke({"prepare", "--generator", "ghz", "--dims", "3,6,2", "--out",
                    tmp.file("a.json"), "--stats", full_stats}) == 0);
    REQUIRE(invoke({"prepare", "--generator", "ghz", "--dims", "3,6,2", "--out",
                    tmp.file("b.json"), "--stats", lean_stats, "--prune-identity"}) == 0);
    auto full = nlohmann::json::parse(slurp(full_stats));
    auto lean = nlohmann::json::parse(slurp(lean_stats));
    CHECK(full.at("operations").get<int>() == 19);
    CHECK(lean.at("operations").get<int>() < 19);
    CHECK(lean.at("achieved_fidelity").get<double>() >= 1.0 - 1e-9);

    // merge-shared needs the reduced diagram, so pair it with approx mode
    const std::string merged_stats = tmp.file("merged.json");
    REQUIRE(invoke({"prepare", "--generator", "w", "--dims", "3,6,2", "--fidelity", "0.999999",
                    "--out", tmp.file("c.json"), "--stats", merged_stats, "--merge-shared"}) ==
            0);
    auto merged = nlohmann::json::parse(slurp(merged_stats));
    CHECK(merged.at("operations").get<int>() < 37);
    CHECK(merged.at("achieved_fidelity").get<double>() >= 0.999999);
}

TEST_CASE("argument errors exit with code 2") {
    TempDir tmp;
    CHECK(invoke({"prepare", "--generator", "ghz", "--dims", "3,3", "--fidelity", "1.5", "--out",
                  tmp.file("x.json")}) == 2);
    CHECK(invoke({"prepare", "--out", tmp.file("x.json")}) == 2);
    CHECK(invoke({"prepare", "--generator", "nope", "--dims", "3,3", "--out",
                  tmp.file("x.json")}) == 2);
    CHECK(invoke({"bench"}) == 2);
    CHECK(invoke({"nonsense"}) == 2);
}

TEST_CASE("file errors exit with code 3") {
    TempDir tmp;
    CHECK(invoke({"verify", "--circuit", tmp.file("missing.json"), "--state",
                  tmp.file("missing2.json")}) == 3);

    const std::string circuit = tmp.file("c.json");
    REQUIRE(invoke({"prepare", "--generator", "ghz", "--dims", "3,3", "--out", circuit}) == 0);

    // register mismatch between circuit and state
    const std::string state = tmp.file("s.json");
    std::ofstream{state} << qsp::state_to_json(qsp::ghz(qsp::QuditRegister{{2, 2}}));
    CHECK(invoke({"verify", "--circuit", circuit, "--state", state}) == 3);

    const std::string garbage = tmp.file("garbage.json");
    std::ofstream{garbage} << "{broken";
    CHECK(invoke({"verify", "--circuit", garbage, "--state", state}) == 3);
}

TEST_CASE("bench table rows") {
    TempDir tmp;
    const std::string spec = tmp.file("spec.json");
    std::ofstream{spec} << R"([
        {"family":"ghz","dims":[9,5,6,3]},
        {"family":"random","dims":[3,6,2],"seed":11}
    ])";
    const std::string out = tmp.file("bench.csv");
    REQUIRE(invoke({"bench", "--spec", spec, "--runs", "2", "--format", "csv", "--out", out}) ==
            0);
    const std::string text = slurp(out);
    std::istringstream lines{text};
    std::string header;
    std::getline(lines, header);
    CHECK(header ==
          "name,n_qudits,dims,mode,nodes_tree,distinct_c,operations,controls_median,time_s,"
          "fidelity");
    std::string ghz_exact;
    std::getline(lines, ghz_exact);
    CHECK(ghz_exact.find("ghz,4,9x5x6x3,exact,1135,3,51,1,") == 0);
    std::string ghz_approx;
    std::getline(lines, ghz_approx);
    CHECK(ghz_approx.find("ghz,4,9x5x6x3,approx,") == 0);
    std::string rnd_exact;
    std::getline(lines, rnd_exact);
    CHECK(rnd_exact.find("random,3,3x6x2,exact,58,58,57,2,") == 0);
}

TEST_CASE("bench output is reproducible apart from timings") {
    TempDir tmp;
    const std::string spec = tmp.file("spec.json");
    std::ofstream{spec} << R"([{"family":"random","dims":[3,6,2],"seed":5}])";

    auto stripped_rows = [&](const std::string& path) {
        std::istringstream lines{slurp(path)};
        std::vector<std::string> rows;
        std::string line;
        while (std::getline(lines, line)) {
            // drop the wall-clock column (second to last)
            std::vector<std::string> cells;
            std::istringstream cs{line};
            std::string cell;
            while (std::getline(cs, cell, ',')) {
                cells.push_back(cell);
            }
            if (cells.size() > 2) {
                cells.erase(cells.end() - 2);
            }
            std::string joined;
            for (const std::string& c : cells) {
                joined += c + "|";
            }
            rows.push_back(joined);
        }
        return rows;
    };

    const std::string a = tmp.file("a.csv");
    const std::string b = tmp.file("b.csv");
    REQUIRE(invoke({"bench", "--spec", spec, "--runs", "3", "--out", a}) == 0);
    REQUIRE(invoke({"bench", "--spec", spec, "--runs", "3", "--out", b}) == 0);
    CHECK(stripped_rows(a) == stripped_rows(b));
}

TEST_CASE("bench markdown format") {
    TempDir tmp;
    const std::string spec = tmp.file("spec.json");
    std::ofstream{spec} << R"([{"family":"ghz","dims":[3,3]}])";
    const std::string out = tmp.file("bench.md");
    REQUIRE(invoke({"bench", "--spec", spec, "--runs", "1", "--format", "md", "--out", out}) == 0);
    const std::string text = slurp(out);
    CHECK(text.find("| name |") == 0);
    CHECK(text.find("| ghz | 2 | 3x3 | exact | 13 | 3 | 12 |") != std::string::npos);
}
