#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "fracbessel/errors.hpp"
#include "fracbessel_cli/config.hpp"
#include "fracbessel_cli/run.hpp"

namespace fs = std::filesystem;
using namespace fracbessel;
using namespace fracbessel::cli;

namespace {

// Writes `text` to a fresh file under the temp directory and returns its path.
fs::path write_temp(const std::string& name, const std::string& text) {
    const fs::path dir = fs::temp_directory_path() / "fracbessel_cli_config_test";
    fs::create_directories(dir);
    const fs::path p = dir / name;
    std::ofstream(p) << text;
    return p;
}

const std::string kMinimal = "[operator]\nalpha = 2\n";

}  // namespace

TEST_CASE("shipped configurations load and validate") {
    for (const char* name : {"wave_single_mode.ini", "multiterm_compliant.ini", "subdiffusion.ini", "zero_source.ini"}) {
        INFO(name);
        const RunConfig c = load_config(fs::path(FRACBESSEL_CONFIG_DIR) / name);
        CHECK_NOTHROW(c.problem.validate());
    }
}

TEST_CASE("subdiffusion configuration is read field by field") {
    const RunConfig c = load_config(fs::path(FRACBESSEL_CONFIG_DIR) / "subdiffusion.ini");
    const ProblemSpec& p = c.problem;
    CHECK(p.nu.value() == 1.0);
    CHECK(p.M == 0.5);
    CHECK(p.modes == 4);
    CHECK(p.op.alpha() == 0.8);
    REQUIRE(p.op.size() == 1);
    CHECK(p.op.terms()[0].lambda == -0.5);
    CHECK(p.op.terms()[0].order == 0.4);
    CHECK(p.source.terms().size() == 2);
    CHECK(p.time_intervals == 1024);
    CHECK(p.time_stride == 128);
    REQUIRE(p.x_grid.size() == 20);
    CHECK(p.x_grid.front() == doctest::Approx(0.01));
    CHECK(p.x_grid.back() == 1.0);
    CHECK(p.tol.tail == 0.5);
    CHECK(p.source(0.0, 0.5) == doctest::Approx(0.25 * 0.5 + 0.5 * bessel_j(p.nu, bessel_zeros(p.nu, 1).gamma(1) * 0.5)));
}

TEST_CASE("compliant source flag is honoured") {
    const RunConfig c = load_config(fs::path(FRACBESSEL_CONFIG_DIR) / "multiterm_compliant.ini");
    CHECK(c.problem.source.theorem_compliant());
    const fs::path bad = write_temp("noncompliant.ini", kMinimal +
                                                            "[source]\nkind = separable\nt_profile = constant\n"
                                                            "t_value = 1\nx_profile = polynomial\nx_p = 1\nx_q = 1\n"
                                                            "theorem_compliant = true\n");
    CHECK_THROWS_AS(load_config(bad), ConfigError);
}

TEST_CASE("output directory resolves against the file location") {
    const fs::path p = write_temp("out.ini", kMinimal + "[output]\ndir = results\n");
    CHECK(load_config(p).out_dir == p.parent_path() / "results");
}

TEST_CASE("malformed files raise ConfigError") {
    const std::vector<std::pair<std::string, std::string>> cases{
        {"unknown_key.ini", kMinimal + "[problem]\nnu = 1\ncolour = red\n"},
        {"unknown_section.ini", kMinimal + "[extras]\na = 1\n"},
        {"duplicate.ini", kMinimal + "[problem]\nM = 1\nM = 2\n"},
        {"not_number.ini", kMinimal + "[problem]\nM = abc\n"},
        {"five_terms.ini", "[operator]\nalpha = 1.5\nterm1 = -1, 0.1\nterm2 = -1, 0.2\nterm3 = -1, 0.3\n"
                           "term4 = -1, 0.4\nterm5 = -1, 0.5\n"},
        {"bad_term.ini", "[operator]\nalpha = 1.5\nterm1 = -1\n"},
        {"alpha.ini", "[operator]\nalpha = 2.5\n"},
        {"missing_alpha.ini", "[problem]\nnu = 1\n"},
        {"bad_tol.ini", kMinimal + "[tolerances]\nml = 1e-17\n"},
        {"unknown_tol.ini", kMinimal + "[tolerances]\nspeed = 1\n"},
        {"x_grid.ini", kMinimal + "[grid]\nx_nodes = 0.5, 1.5\n"},
        {"profile.ini", kMinimal + "[source]\nkind = separable\nt_profile = constant\nx_profile = wavy\n"},
        {"kind.ini", kMinimal + "[source]\nkind = mystery\n"},
        {"nu.ini", kMinimal + "[problem]\nnu = 0\n"},
    };
    for (const auto& [name, text] : cases) {
        INFO(name);
        CHECK_THROWS_AS(load_config(write_temp(name, text)), ConfigError);
    }
    CHECK_THROWS_AS(load_config(fs::path("/nonexistent/config.ini")), ConfigError);
}

TEST_CASE("tolerance overrides") {
    SolverTolerances tol;
    apply_tolerance_override(tol, "mode_residual=0.05");
    CHECK(tol.mode_residual == 0.05);
    apply_tolerance_override(tol, "ml=1e-12");
    CHECK(tol.ml == 1e-12);
    CHECK_THROWS_AS(apply_tolerance_override(tol, "ml"), ConfigError);
    CHECK_THROWS_AS(apply_tolerance_override(tol, "ml=0"), ConfigError);
    CHECK_THROWS_AS(apply_tolerance_override(tol, "fast=1"), ConfigError);
    CHECK_THROWS_AS(apply_tolerance_override(tol, "ml=1e-16"), ConfigError);
}

TEST_CASE("tables load into a tensor grid") {
    const fs::path ok = write_temp("table.csv", "t,x,f\n0,0,1\n0,1,2\n1,0,3\n1,1,4\n");
    const TabulatedSource t = load_table(ok);
    CHECK(t.t_nodes().size() == 2);
    CHECK(t(0.5, 0.5) == doctest::Approx(2.5));
    CHECK_THROWS_AS(load_table(write_temp("bad_header.csv", "a,b,c\n0,0,1\n")), ConfigError);
    CHECK_THROWS_AS(load_table(write_temp("ragged.csv", "t,x,f\n0,0,1\n0,1,2\n1,0,3\n")), ConfigError);
    CHECK_THROWS_AS(load_table(write_temp("cols.csv", "t,x,f\n0,0\n")), ConfigError);

    const fs::path cfg = write_temp("tabulated.ini", kMinimal + "[source]\nkind = tabulated\nfile = table.csv\n");
    CHECK(load_config(cfg).problem.source.kind() == SourceFunction::Kind::tabulated);
}

TEST_CASE("list parsing") {
    CHECK(parse_list("1, 2.5,-3", "v") == std::vector<double>{1.0, 2.5, -3.0});
    CHECK_THROWS_AS(parse_list("1,,2", "v"), ConfigError);
    CHECK_THROWS_AS(parse_list("", "v"), ConfigError);
    CHECK_THROWS_AS(parse_list("1, x", "v"), ConfigError);
}

TEST_CASE("default configuration is valid") {
    const RunConfig c = default_config();
    CHECK_NOTHROW(c.problem.validate());
    CHECK(c.problem.source.theorem_compliant());
}

TEST_CASE("single-mode configuration reports exactly one active mode") {
    RunConfig c = load_config(fs::path(FRACBESSEL_CONFIG_DIR) / "wave_single_mode.ini");
    c.out_dir = fs::temp_directory_path() / "fracbessel_cli_config_test" / "single_mode";
    std::ostringstream log;
    CHECK(run_solve(c, log) == kExitOk);
    std::ifstream in(c.out_dir / "modes.csv");
    std::string line;
    std::getline(in, line);
    REQUIRE(line.rfind("k,gamma,max_abs_f,max_abs_U", 0) == 0);
    std::size_t rows = 0;
    std::size_t active = 0;
    while (std::getline(in, line)) {
        ++rows;
        std::vector<std::string> cols;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) cols.push_back(cell);
        if (std::stod(cols[3]) != 0.0) ++active;
    }
    CHECK(rows == c.problem.modes);
    CHECK(active == 1);
}
