#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fracbessel/errors.hpp"
#include "fracbessel_cli/config.hpp"
#include "fracbessel_cli/run.hpp"

namespace fb = fracbessel;
namespace cli = fracbessel::cli;

namespace {

struct SharedOptions {
    std::string config;
    std::string out;
    std::optional<std::size_t> modes;
    std::optional<unsigned> threads;
    std::vector<std::string> tol;
};

void add_shared(CLI::App* app, SharedOptions& o) {
    app->add_option("--config", o.config, "Problem file (INI)")->check(CLI::ExistingFile);
    app->add_option("--out", o.out, "Output directory");
    app->add_option("--modes", o.modes, "Number of Fourier-Bessel modes K")->check(CLI::PositiveNumber);
    app->add_option("--threads", o.threads, "Worker threads for per-mode work")->check(CLI::PositiveNumber);
    app->add_option("--tol", o.tol, "Tolerance override name=value (repeatable)");
}

cli::RunConfig resolve(const SharedOptions& o) {
    cli::RunConfig c = o.config.empty() ? cli::default_config() : cli::load_config(o.config);
    if (!o.out.empty()) c.out_dir = o.out;
    if (o.modes) c.problem.modes = *o.modes;
    if (o.threads) c.problem.threads = *o.threads;
    for (const auto& t : o.tol) cli::apply_tolerance_override(c.problem.tol, t);
    try {
        c.problem.validate();
    } catch (const fb::DomainError& e) {
        throw fb::ConfigError(e.what());
    }
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Explicit solutions of the nonlocal multi-term time-fractional Bessel problem"};
    app.require_subcommand(1);

    SharedOptions solve_opts;
    CLI::App* solve = app.add_subcommand("solve", "Solve the configured problem and write grids and diagnostics");
    add_shared(solve, solve_opts);

    SharedOptions check_opts;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> suites;
    CLI::App* check = app.add_subcommand("check", "Run the property suites");
    add_shared(check, check_opts);
    check->add_option("--seed", seed, "Seed for randomized draws");
    check->add_option("--suite", suites, "Run only this suite (repeatable)");

    double zeros_nu = 1.0;
    std::size_t zeros_count = 20;
    CLI::App* zeros = app.add_subcommand("zeros", "Print the first positive zeros of J_nu");
    zeros->add_option("--nu", zeros_nu, "Bessel order")->check(CLI::NonNegativeNumber);
    zeros->add_option("--count", zeros_count, "Number of zeros")->check(CLI::PositiveNumber);

    std::string ml_exponents;
    std::string ml_args;
    double ml_offset = 1.0;
    double ml_tol = 1e-14;
    CLI::App* ml = app.add_subcommand("ml", "Evaluate one multinomial Mittag-Leffler value");
    ml->add_option("--exponents", ml_exponents, "Comma-separated a_1..a_m")->required();
    ml->add_option("--args", ml_args, "Comma-separated z_1..z_m")->required();
    ml->add_option("--offset", ml_offset, "Offset b");
    ml->add_option("--tol", ml_tol, "Relative tolerance (>= 1e-15)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::kExitConfigInvalid;
    }

    try {
        if (*solve) return cli::run_solve(resolve(solve_opts), std::cout);
        if (*check) {
            cli::RunConfig c = resolve(check_opts);
            if (seed) c.seed = *seed;
            if (!suites.empty()) c.suites = suites;
            return cli::run_checks(c, std::cout);
        }
        if (*zeros) return cli::run_zeros(zeros_nu, zeros_count, std::cout);
        if (*ml) {
            fb::MLParams p{cli::parse_list(ml_exponents, "--exponents"), ml_offset, cli::parse_list(ml_args, "--args")};
            if (!(ml_tol >= 1e-15)) throw fb::ConfigError("--tol: must be >= 1e-15");
            try {
                p.validate();
            } catch (const fb::DomainError& e) {
                throw fb::ConfigError(e.what());
            }
            return cli::run_ml(p, ml_tol, std::cout);
        }
    } catch (const fb::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return cli::kExitConfigInvalid;
    } catch (const fb::ResonanceError& e) {
        std::cerr << "resonance: " << e.what() << '\n';
        return cli::kExitResonance;
    } catch (const fb::ConvergenceError& e) {
        std::cerr << "non-convergence: " << e.what() << '\n';
        return cli::kExitNonConvergence;
    } catch (const fb::DomainError& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return cli::kExitConfigInvalid;
    }
    return cli::kExitOk;
}
