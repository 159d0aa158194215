#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fracbessel/solver.hpp"

namespace fracbessel::cli {

/// Everything a run needs: the problem, where to write, and what to check.
struct RunConfig {
    ProblemSpec problem;
    std::filesystem::path out_dir = "out";
    /// Seed for the randomized property sweeps of `check`.
    std::uint64_t seed = 20240601;
    /// Names of the suites `check` runs; empty means all.
    std::vector<std::string> suites;
};

/// Reads an INI file (see README for the schema). Relative paths inside the
/// file resolve against the file's directory. Throws ConfigError.
RunConfig load_config(const std::filesystem::path& path);

/// The configuration used when no file is given.
RunConfig default_config();

/// Applies `name=value` to the tolerance block; names are the fields of
/// SolverTolerances. Throws ConfigError on unknown names or non-positive values.
void apply_tolerance_override(SolverTolerances& tol, const std::string& assignment);

/// Reads a table with header line "t,x,<name>" laid out row-major in t then x.
TabulatedSource load_table(const std::filesystem::path& path);

/// Parses "1, 2.5, -3" into numbers. Throws ConfigError naming `what`.
std::vector<double> parse_list(const std::string& text, const std::string& what);

}  // namespace fracbessel::cli
