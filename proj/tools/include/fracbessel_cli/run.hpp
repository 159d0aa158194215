#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fracbessel/mittag_leffler.hpp"
#include "fracbessel_cli/config.hpp"

namespace fracbessel::cli {

/// Process exit codes; each outcome maps to exactly one.
enum ExitCode : int {
    kExitOk = 0,
    kExitCheckFailed = 1,
    kExitResonance = 2,
    kExitNonConvergence = 3,
    kExitConfigInvalid = 4,
};

/// Solves the configured problem and writes solution.csv, modes.csv and
/// diagnostics.json into config.out_dir. A one-line summary per check goes
/// to `log`.
int run_solve(const RunConfig& config, std::ostream& log);

/// Runs the property suites and writes checks.json into config.out_dir.
int run_checks(const RunConfig& config, std::ostream& log);

/// Writes "k,gamma" rows for the first `count` zeros of J_nu.
int run_zeros(double nu, std::size_t count, std::ostream& out);

/// Prints value, layers and tail estimate of one multinomial evaluation.
int run_ml(const MLParams& params, double tol, std::ostream& out);

/// Names accepted in the `suites` list of the [check] section.
const std::vector<std::string>& suite_names();

/// Every float in the output files is written with 17 significant digits.
std::string format_double(double v);

}  // namespace fracbessel::cli
