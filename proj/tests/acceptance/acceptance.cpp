// Acceptance run: one PASS/FAIL line per criterion with the observed value,
// the tolerance and the wall time against its budget. Exit status is the
// number of failing criteria (capped at 100).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "fracbessel/errors.hpp"
#include "fracbessel/fourier_bessel.hpp"
#include "fracbessel/fractional.hpp"
#include "fracbessel/mittag_leffler.hpp"
#include "fracbessel/solver.hpp"
#include "fracbessel/specfun.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace fracbessel;

namespace {

struct Measure {
    std::string what;
    double observed = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

Measure at_most(std::string what, double observed, double tol) {
    return {std::move(what), observed, tol, observed <= tol};
}
Measure at_least(std::string what, double observed, double tol) {
    return {std::move(what), observed, tol, observed >= tol};
}

struct Criterion {
    int id;
    std::string name;
    double budget_seconds;
    std::function<std::vector<Measure>()> run;
};

struct Options {
    fs::path cli;
    fs::path work = "acceptance_work";
};

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]);
        const double ly = std::log(std::abs(y[i]));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Largest |z_i|^{1/a_i} the mode kernels see up to time t for gamma <= g.
double summation_reach(const TimeOperator& op, double g, double t) {
    double reach = std::pow(g * g * std::pow(t, op.alpha()), 1.0 / op.alpha());
    for (const auto& term : op.terms()) {
        const double a = op.alpha() - term.order;
        reach = std::max(reach, std::pow(std::abs(term.lambda) * std::pow(t, a), 1.0 / a));
    }
    return reach;
}

// Orders on a 1/20 grid keep the exponents commensurate; draws beyond this
// reach are outside what direct summation can evaluate and are redrawn.
constexpr double kEnvelope = 3000.0;
constexpr double kAssemblyReach = 200.0;

std::vector<Measure> ml_reduction() {
    double worst = 0.0;
    for (double a : {0.3, 0.8, 1.0, 1.7}) {
        for (double b : {0.5, 1.0, 2.3}) {
            for (double z : {-10.0, -3.0, -1.0, 0.0, 1.0, 3.0}) {
                worst = std::max(worst, rel_err(ml_multinomial({{a}, b, {z}}, 1e-14).value, ml_two_param(a, b, z, 1e-15)));
            }
        }
    }
    return {at_most("max relative error m=1 vs two-parameter", worst, 1e-12)};
}

std::vector<Measure> classical_limits() {
    double e = 0.0;
    for (int i = 0; i <= 20; ++i) {
        const double z = -5.0 + 0.5 * i;
        e = std::max(e, rel_err(ml_multinomial({{1.0}, 1.0, {z}}, 1e-14).value, std::exp(z)));
    }
    double c = 0.0;
    for (double g : {1.0, 5.0, 20.0}) {
        for (int i = 0; i <= 40; ++i) {
            const double t = 0.05 * i;
            c = std::max(c, std::abs(ml_multinomial({{2.0}, 1.0, {-g * g * t * t}}, 1e-14).value - std::cos(g * t)));
        }
    }
    return {at_most("E_(1),1(z) vs exp(z), relative", e, 1e-12), at_most("E_(2),1(-g^2 t^2) vs cos(g t)", c, 1e-10)};
}

std::vector<Measure> liu_identity() {
    constexpr int kDraws = 50;
    std::mt19937_64 rng(20240601);
    std::uniform_int_distribution<int> count(0, 3);
    std::uniform_int_distribution<int> order_step(1, 20);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = 0.0;
    int drawn = 0;
    int skipped = 0;
    while (drawn < kDraws) {
        const int n = count(rng);
        std::vector<LowerOrderTerm> terms;
        int max_step = 0;
        for (int i = 0; i < n; ++i) {
            const int k = order_step(rng);
            max_step = std::max(max_step, k);
            terms.push_back({-2.0 + 4.0 * unit(rng), k / 20.0});
        }
        const int alpha_step = std::min(max_step + 1 + static_cast<int>(unit(rng) * (40 - max_step)), 40);
        const TimeOperator op(alpha_step / 20.0, terms);
        const double t = 2.0 * (1.0 - unit(rng));
        const double gsq = 0.5 + 99.5 * unit(rng);
        if (summation_reach(op, std::sqrt(gsq), t) > kEnvelope) {
            ++skipped;
            continue;
        }
        ++drawn;
        const TimeKernels k(op);
        const double alpha = op.alpha();
        double rhs = 1.0;
        for (const auto& term : terms) {
            rhs += term.lambda * std::pow(t, alpha - term.order) * k.evaluate(1.0 + alpha - term.order, gsq, t);
        }
        rhs -= gsq * std::pow(t, alpha) * k.evaluate(1.0 + alpha, gsq, t);
        worst = std::max(worst, std::abs(k.evaluate(1.0, gsq, t) - rhs));
    }
    return {at_most("max |E_(.),1 - (1 + sum lambda_i t^. E_(.),1+. - g^2 t^a E_(.),1+a)|", worst, 1e-10),
            {"redrawn outside the summation envelope", static_cast<double>(skipped), 0.0, true}};
}

std::vector<Measure> bessel_zero_checks() {
    const BesselZeroTable half = bessel_zeros(BesselOrder(0.5), 20);
    double pi_gap = 0.0;
    for (std::size_t k = 1; k <= 20; ++k) pi_gap = std::max(pi_gap, std::abs(half.gamma(k) - k * std::numbers::pi));
    double residual = 0.0;
    double increases = 0.0;
    for (double nu : {0.0, 1.0, 2.5}) {
        const BesselOrder order(nu);
        const BesselZeroTable z = bessel_zeros(order, 64);
        double prev = INFINITY;
        for (std::size_t k = 1; k <= z.size(); ++k) {
            residual = std::max(residual, std::abs(bessel_j(order, z.gamma(k))));
            if (k < 5) continue;
            const double gap = std::abs(z.gamma(k) - bessel_zero_asymptotic(order, k));
            if (!(gap < prev)) increases += 1.0;
            prev = gap;
        }
    }
    return {at_most("nu=0.5 zeros vs k pi", pi_gap, 1e-12), at_most("max |J_nu(gamma_k)|", residual, 1e-12),
            at_most("non-decreasing steps of the asymptotic gap, k >= 5", increases, 0.0)};
}

std::vector<Measure> orthogonality() {
    constexpr std::size_t K = 12;
    double worst = 0.0;
    for (double nu : {0.5, 1.0, 2.5}) {
        const BesselOrder order(nu);
        const BesselZeroTable z = bessel_zeros(order, K);
        for (std::size_t l = 1; l <= K; ++l) {
            const double gl = z.gamma(l);
            for (std::size_t k = 1; k <= K; ++k) {
                // Normalised Gram entry from an independent adaptive quadrature.
                const double gk = z.gamma(k);
                const double ip = oracle::integrate(
                    [&](double x) { return x * oracle::bessel_j(nu, gl * x) * oracle::bessel_j(nu, gk * x); }, 0.0, 1.0,
                    1e-13);
                const double nk = oracle::bessel_j(nu + 1.0, gk);
                const double nl = oracle::bessel_j(nu + 1.0, gl);
                const double lib = fb_coefficient([&](double x) { return bessel_j(order, gl * x); }, order, gk);
                worst = std::max(worst, std::abs(2.0 * ip / std::abs(nk * nl) - (k == l ? 1.0 : 0.0)));
                worst = std::max(worst, std::abs(lib - (k == l ? 1.0 : 0.0)));
            }
        }
    }
    return {at_most("max |G - I| (library projection and reference quadrature)", worst, 1e-8)};
}

std::vector<Measure> mode_residual() {
    const double gamma = bessel_zeros(BesselOrder(1.0), 1).gamma(1);
    const TimeOperator wave(2.0);
    std::vector<double> r;
    for (std::size_t N : {256u, 512u, 1024u}) {
        const auto f = SampledFunction::sample(1.0, N, [](double) { return 1.0; });
        const Mode m = solve_mode(wave, gamma, f, 0.0, 1.0);
        r.push_back(verify_mode(wave, m, 1e-2, 0.0).observed);
    }
    const double order = std::min(std::log2(r[0] / r[1]), std::log2(r[1] / r[2]));
    const TimeOperator frac(0.8, {{-0.5, 0.4}});
    const auto f = SampledFunction::sample(1.0, 1024, [](double) { return 1.0; });
    const ModeResidual fr = verify_mode(frac, solve_mode(frac, gamma, f, 0.0, 1.0), 1e-2);
    return {at_least("alpha=2 observed order over N=256,512,1024", order, 1.5),
            at_most("alpha=0.8 n=1 residual at N=1024 (t >= T/16)", fr.observed, 1e-2),
            {"alpha=0.8 n=1 residual over all interior nodes (reported)", fr.observed_all, 0.0, true}};
}

std::vector<Measure> nonlocal_condition() {
    constexpr int kConfigs = 10;
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> count(0, 3);
    std::uniform_int_distribution<int> order_step(1, 20);
    double worst = 0.0;
    int redrawn = 0;
    int done = 0;
    while (done < kConfigs) {
        ProblemSpec spec;
        spec.nu = BesselOrder(0.2 + 2.8 * unit(rng));
        std::vector<LowerOrderTerm> terms;
        int max_step = 0;
        for (int i = 0, n = count(rng); i < n; ++i) {
            const int k = order_step(rng);
            max_step = std::max(max_step, k);
            terms.push_back({-2.0 + 4.0 * unit(rng), k / 20.0});
        }
        const int alpha_step = std::min(max_step + 1 + static_cast<int>(unit(rng) * (40 - max_step)), 40);
        spec.op = TimeOperator(alpha_step / 20.0, terms);
        spec.M = -2.0 + 4.0 * unit(rng);
        spec.T = 0.1 + 0.9 * unit(rng);
        spec.modes = 8;
        spec.time_intervals = 128;
        spec.verify = false;
        spec.source = SourceFunction::separable(TProfile::sine(1.0, 1.0 + 5.0 * unit(rng), unit(rng)),
                                                XProfile::polynomial(3.0 * unit(rng), 2.0 * unit(rng)));
        // Assembly evaluates the kernels at every quadrature point of every
        // mode, so the draws stay well inside the envelope to fit the budget.
        if (summation_reach(spec.op, bessel_zeros(spec.nu, spec.modes).gamma(spec.modes), spec.T) > kAssemblyReach) {
            ++redrawn;
            continue;
        }
        SolutionGrid sol;
        try {
            sol = assemble(spec);
        } catch (const ResonanceError&) {
            ++redrawn;
            continue;
        }
        ++done;
        const std::size_t nx = sol.x.size();
        const std::size_t last = sol.t.size() - 1;
        double umax = 0.0;
        double defect = 0.0;
        for (double v : sol.values) umax = std::max(umax, std::abs(v));
        for (std::size_t i = 0; i < nx; ++i) defect = std::max(defect, std::abs(sol.at(0, i) + spec.M * sol.at(last, i)));
        if (umax > 0.0) worst = std::max(worst, defect / umax);
    }
    return {at_most("max_x |u(0,x) + M u(T,x)| / max|u| over 10 configs", worst, 1e-8),
            {"redrawn (envelope or resonance)", static_cast<double>(redrawn), 0.0, true}};
}

int run_cli(const Options& o, const std::vector<std::string>& args) {
    std::string cmd = o.cli.string();
    for (const auto& a : args) cmd += " '" + a + "'";
    cmd += " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<Measure> resonance_detection(const Options& o) {
    const double T = 1.0;
    const TimeOperator op(1.9, {{-0.5, 0.5}});
    const double g1 = bessel_zeros(BesselOrder(1.0), 1).gamma(1);
    const double M = -1.0 / u0_bar(op, g1 * g1, T);
    auto write = [&](const std::string& name, double m) {
        const fs::path p = o.work / name;
        std::ofstream out(p);
        out.precision(17);
        out << "[problem]\nnu = 1.0\nT = " << T << "\nmodes = 4\nM = " << m << "\n\n"
            << "[operator]\nalpha = 1.9\nterm1 = -0.5, 0.5\n\n"
            << "[source]\nkind = separable\nt_profile = sine\nt_amplitude = 1.0\nt_omega = 2.0\n"
            << "x_profile = polynomial\nx_p = 2.0\nx_q = 1.0\n\n"
            << "[grid]\ntime_intervals = 1024\ntime_stride = 128\nx_count = 11\n";
        return p;
    };
    const fs::path bad_out = o.work / "resonant";
    const int bad = run_cli(o, {"solve", "--config", write("resonant.ini", M).string(), "--out", bad_out.string()});
    double reported = -1.0;
    try {
        std::ifstream in(bad_out / "diagnostics.json");
        const auto j = nlohmann::json::parse(in);
        reported = j.at("resonant_modes").at(0).at("k").get<double>();
    } catch (const std::exception&) {
    }
    const int good = run_cli(o, {"solve", "--config", write("shifted.ini", M * (1.0 + 1e-3)).string(), "--out",
                                 (o.work / "shifted").string()});
    return {{"exit code at M = -1/U0_1(T)", static_cast<double>(bad), 2.0, bad == 2},
            {"reported mode index", reported, 1.0, reported == 1.0},
            {"exit code at M (1 + 1e-3)", static_cast<double>(good), 0.0, good == 0}};
}

ProblemSpec decay_spec() {
    ProblemSpec spec;
    spec.nu = BesselOrder(1.0);
    spec.op = TimeOperator(1.9, {{-0.5, 0.5}});
    spec.M = -0.4;
    spec.T = 0.5;
    spec.modes = 32;
    spec.time_intervals = 512;
    spec.source = SourceFunction::separable(TProfile::polynomial({0.0, 1.0, -0.5}), XProfile::compliant(spec.nu));
    spec.source.mark_theorem_compliant();
    return spec;
}

std::vector<Measure> decay() {
    const ModeSet set = solve_modes(decay_spec());
    std::vector<double> g, f, u;
    for (std::size_t k = 5; k <= 32; ++k) {
        const Mode& m = set.modes[k - 1];
        g.push_back(m.gamma);
        f.push_back(m.f_k.max_abs());
        u.push_back(m.U_k.max_abs());
    }
    return {at_most("fitted exponent of max_t |f_k| vs gamma_k, k in [5,32]", loglog_slope(g, f), -3.3),
            at_most("fitted exponent of max_t |U_k| vs gamma_k, k in [5,32]", loglog_slope(g, u), -1.3)};
}

std::vector<Measure> truncation() {
    ProblemSpec spec;
    spec.nu = BesselOrder(1.0);
    spec.op = TimeOperator(1.9, {{-0.5, 0.5}});
    spec.M = 0.5;
    spec.T = 0.1;
    spec.time_intervals = 256;
    spec.verify = false;
    // Not compliant at x = 1, so the tail is far from negligible.
    spec.source = SourceFunction::separable(TProfile::constant(1.0), XProfile::polynomial(1.0, 0.0));
    for (int i = 0; i <= 90; ++i) spec.x_grid.push_back(0.05 + 0.01 * i);
    spec.modes = 32;
    const SolutionGrid a = assemble(spec);
    spec.modes = 64;
    const SolutionGrid b = assemble(spec);
    double diff = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) diff = std::max(diff, std::abs(a.values[i] - b.values[i]));
    return {at_most("sup |u_32 - u_64| on [0.05,0.95] x [0,T]", diff, 10.0 * a.field.tail_indicator)};
}

std::vector<Measure> pde_residual() {
    auto run = [](std::size_t nt, std::size_t nx) {
        ProblemSpec spec;
        spec.nu = BesselOrder(1.0);
        spec.op = TimeOperator(1.5, {{-0.5, 0.5}});
        spec.M = -0.4;
        spec.T = 1.0;
        spec.modes = 8;
        spec.time_intervals = nt;
        spec.residual_x_nodes = nx;
        spec.x_grid = {0.5};
        spec.source = SourceFunction::separable(TProfile::sine(1.0, 2.0), XProfile::bessel_mode(spec.nu, 1));
        const SolutionGrid s = assemble(spec);
        return s.field.pde_residual / s.field.pde_scale;
    };
    const double coarse = run(512, 256);
    const double fine = run(1024, 512);
    return {at_most("scaled residual at N_t=1024, N_x=512", fine, 5e-2),
            {"scaled residual at N_t=512, N_x=256 (must exceed the finer one)", coarse, fine, coarse > fine}};
}

std::vector<Measure> caputo_examples() {
    constexpr std::size_t N = 512;
    const auto constant = caputo(SampledFunction::sample(1.0, N, [](double) { return 3.0; }), 0.5);
    auto oracle_error = [&](double p, double beta) {
        const auto d = caputo(SampledFunction::sample(1.0, N, [p](double t) { return std::pow(t, p); }), beta);
        const double k = std::floor(beta) + 1.0;
        // k-th derivative of t^p
        auto gk = [p, k](double t) { return std::tgamma(p + 1.0) / std::tgamma(p + 1.0 - k) * std::pow(t, p - k); };
        double e = 0.0;
        for (std::size_t i = 1; i <= N; ++i) e = std::max(e, std::abs(d[i] - oracle::caputo(gk, beta, d.node(i))));
        return e;
    };
    return {at_most("D^0.5 of a constant", constant.max_abs(), 0.0), at_most("D^0.5 t vs quadrature", oracle_error(1.0, 0.5), 5e-3),
            at_most("D^1.5 t^2 vs quadrature", oracle_error(2.0, 1.5), 5e-3)};
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

}  // namespace

int main(int argc, char** argv) {
    Options o;
    std::vector<int> only;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--cli" && i + 1 < argc) {
            o.cli = argv[++i];
        } else if (a == "--work" && i + 1 < argc) {
            o.work = argv[++i];
        } else if (a == "--only" && i + 1 < argc) {
            only.push_back(std::atoi(argv[++i]));
        } else {
            std::cerr << "usage: acceptance --cli <fracbessel binary> [--work <dir>] [--only <n>]...\n";
            return 100;
        }
    }
    fs::create_directories(o.work);

    const std::vector<Criterion> criteria{
        {1, "ml reduction", 5, ml_reduction},
        {2, "classical limits", 5, classical_limits},
        {3, "recurrence identity", 30, liu_identity},
        {4, "bessel zeros", 2, bessel_zero_checks},
        {5, "orthogonality", 10, orthogonality},
        {6, "mode ODE residual", 60, mode_residual},
        {7, "nonlocal condition", 60, nonlocal_condition},
        {8, "non-resonance detection", 10, [&] { return resonance_detection(o); }},
        {9, "coefficient and mode decay", 60, decay},
        {10, "truncation convergence", 120, truncation},
        {11, "PDE residual", 120, pde_residual},
        {12, "Caputo power rules", 30, caputo_examples},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        const auto start = std::chrono::steady_clock::now();
        std::vector<Measure> ms;
        std::string error;
        try {
            ms = c.run();
        } catch (const std::exception& e) {
            error = e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        bool pass = error.empty() && secs <= c.budget_seconds;
        for (const auto& m : ms) pass = pass && m.pass;
        if (!pass) ++failures;
        std::cout << (pass ? "PASS" : "FAIL") << "  criterion " << c.id << " (" << c.name << ")  time " << fmt(secs)
                  << " s / " << c.budget_seconds << " s\n";
        for (const auto& m : ms) {
            std::cout << "      " << (m.pass ? "ok  " : "FAIL") << ' ' << m.what << ": observed " << fmt(m.observed)
                      << ", tolerance " << fmt(m.tolerance) << '\n';
        }
        if (!error.empty()) std::cout << "      error: " << error << '\n';
        std::cout.flush();
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << '\n';
    return std::min(failures, 100);
}
