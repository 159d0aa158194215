#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <ostream>
#include <random>

#include <nlohmann/json.hpp>

#include "fracbessel/errors.hpp"
#include "fracbessel_cli/run.hpp"

namespace fracbessel::cli {

namespace {

using nlohmann::json;

// Draws where some argument has |z_i|^(1/a_i) beyond this need more terms
// than direct summation allows (exponents a_i = alpha - alpha_i near 0 are the
// usual cause) and are redrawn.
constexpr double kLiuEnvelope = 3000.0;

struct Item {
    std::string name;
    double observed = 0.0;
    double tolerance = 0.0;
    bool pass = true;
};

struct Suite {
    std::string name;
    std::vector<Item> items;
    double seconds = 0.0;
    std::string error;

    bool pass() const {
        return error.empty() && std::all_of(items.begin(), items.end(), [](const Item& i) { return i.pass; });
    }
};

Item at_most(std::string name, double observed, double tolerance) {
    return {std::move(name), observed, tolerance, observed <= tolerance};
}

Item at_least(std::string name, double observed, double tolerance) {
    return {std::move(name), observed, tolerance, observed >= tolerance};
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// Least-squares slope of log|y| against log x.
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

void ml_reduction(const RunConfig& c, Suite& s) {
    const double tol = c.problem.tol.ml;
    const double bound = std::max(1e-12, 100.0 * tol);
    double worst = 0.0;
    for (double a : {0.3, 0.8, 1.0, 1.7}) {
        for (double b : {0.5, 1.0, 2.3}) {
            for (double z : {-10.0, -3.0, -1.0, 0.0, 1.0, 3.0}) {
                const double multi = ml_multinomial({{a}, b, {z}}, tol).value;
                worst = std::max(worst, rel_err(multi, ml_two_param(a, b, z, tol)));
            }
        }
    }
    s.items.push_back(at_most("max relative difference", worst, bound));
}

void classical_limits(const RunConfig& c, Suite& s) {
    const double tol = c.problem.tol.ml;
    double worst_exp = 0.0;
    for (int i = 0; i <= 20; ++i) {
        const double z = -5.0 + 0.5 * i;
        worst_exp = std::max(worst_exp, rel_err(ml_multinomial({{1.0}, 1.0, {z}}, tol).value, std::exp(z)));
    }
    s.items.push_back(at_most("E_(1),1(z) vs exp(z)", worst_exp, std::max(1e-12, 100.0 * tol)));
    const TimeKernels wave(TimeOperator(2.0));
    double worst_cos = 0.0;
    for (double g : {1.0, 5.0, 20.0}) {
        for (int i = 0; i <= 20; ++i) {
            const double t = 0.1 * i;
            worst_cos = std::max(worst_cos, std::abs(wave.u0_bar(g * g, t, {tol}) - std::cos(g * t)));
        }
    }
    s.items.push_back(at_most("E_(2),1(-g^2 t^2) vs cos(g t)", worst_cos, std::max(1e-10, 100.0 * tol)));
}

void liu_identity(const RunConfig& c, Suite& s) {
    constexpr int kDraws = 20;
    std::mt19937_64 rng(c.seed);
    std::uniform_int_distribution<int> count(0, 3);
    std::uniform_int_distribution<int> order_step(1, 20);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const MLTolerance tol{c.problem.tol.ml};
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
        const int alpha_step = max_step + 1 + static_cast<int>(unit(rng) * (40 - max_step));
        const double alpha = std::min(alpha_step, 40) / 20.0;
        const double t = 2.0 * (1.0 - unit(rng));
        const double gsq = 0.5 + 99.5 * unit(rng);
        double reach = std::pow(gsq * std::pow(t, alpha), 1.0 / alpha);
        for (const auto& term : terms) {
            const double a = alpha - term.order;
            reach = std::max(reach, std::pow(std::abs(term.lambda) * std::pow(t, a), 1.0 / a));
        }
        if (reach > kLiuEnvelope) {
            ++skipped;
            continue;
        }
        ++drawn;
        const TimeOperator op(alpha, terms);
        const TimeKernels k(op);
        double rhs = 1.0;
        double scale = 1.0;
        for (const auto& term : terms) {
            const double piece = term.lambda * std::pow(t, alpha - term.order) *
                                 k.evaluate(1.0 + alpha - term.order, gsq, t, tol);
            rhs += piece;
            scale += std::abs(piece);
        }
        const double last = gsq * std::pow(t, alpha) * k.evaluate(1.0 + alpha, gsq, t, tol);
        rhs -= last;
        scale += std::abs(last);
        worst = std::max(worst, std::abs(k.evaluate(1.0, gsq, t, tol) - rhs) / scale);
    }
    s.items.push_back(at_most("max scaled defect over " + std::to_string(kDraws) + " draws", worst,
                              std::max(1e-10, 1e4 * tol.rel)));
    s.items.push_back({"draws outside the summation envelope", static_cast<double>(skipped), 0.0, true});
}

void bessel_zero_suite(const RunConfig&, Suite& s) {
    const BesselZeroTable half = bessel_zeros(BesselOrder(0.5), 20);
    double worst = 0.0;
    for (std::size_t k = 1; k <= 20; ++k) worst = std::max(worst, std::abs(half.gamma(k) - k * std::numbers::pi));
    s.items.push_back(at_most("nu=0.5 zeros vs k pi", worst, 1e-12));
    double residual = 0.0;
    bool monotone = true;
    for (double nu : {0.0, 1.0, 2.5}) {
        const BesselOrder order(nu);
        const BesselZeroTable z = bessel_zeros(order, 64);
        double prev = INFINITY;
        for (std::size_t k = 1; k <= z.size(); ++k) {
            residual = std::max(residual, std::abs(bessel_j(order, z.gamma(k))));
            const double gap = std::abs(z.gamma(k) - bessel_zero_asymptotic(order, k));
            if (k >= 5) {
                monotone = monotone && gap < prev;
                prev = gap;
            }
        }
    }
    s.items.push_back(at_most("max |J_nu(gamma_k)|", residual, kBesselZeroTol));
    s.items.push_back({"asymptotic gap decreasing for k >= 5", monotone ? 1.0 : 0.0, 1.0, monotone});
}

void orthogonality(const RunConfig&, Suite& s) {
    constexpr std::size_t K = 12;
    double worst = 0.0;
    for (double nu : {0.5, 1.0, 2.5}) {
        const BesselOrder order(nu);
        const BesselZeroTable z = bessel_zeros(order, K);
        const RadialQuadrature quad(z.gamma(K));
        for (std::size_t l = 1; l <= K; ++l) {
            const double gl = z.gamma(l);
            auto h = [&](double x) { return bessel_j(order, gl * x); };
            for (std::size_t k = 1; k <= K; ++k) {
                const double g = fb_coefficient(h, order, z.gamma(k), quad);
                worst = std::max(worst, std::abs(g - (k == l ? 1.0 : 0.0)));
            }
        }
    }
    s.items.push_back(at_most("max |G - I|", worst, 1e-8));
}

void caputo_power(const RunConfig&, Suite& s) {
    constexpr std::size_t N = 512;
    auto worst = [&](double p, double beta) {
        const auto g = SampledFunction::sample(1.0, N, [p](double t) { return std::pow(t, p); });
        const auto d = caputo(g, beta);
        const double c = std::tgamma(p + 1.0) / std::tgamma(p + 1.0 - beta);
        double e = 0.0;
        for (std::size_t i = 1; i <= N; ++i) e = std::max(e, std::abs(d[i] - c * std::pow(g.node(i), p - beta)));
        return e;
    };
    const auto constant = caputo(SampledFunction::sample(1.0, N, [](double) { return 3.0; }), 0.5);
    s.items.push_back(at_most("D^0.5 of a constant", constant.max_abs(), 1e-14));
    s.items.push_back(at_most("D^0.5 t", worst(1.0, 0.5), 5e-3));
    s.items.push_back(at_most("D^1.5 t^2", worst(2.0, 1.5), 5e-3));
}

void mode_residual(const RunConfig& c, Suite& s) {
    const BesselOrder nu = c.problem.nu;
    const double gamma = bessel_zeros(nu, 1).gamma(1);
    const TimeOperator wave(2.0);
    std::vector<double> r;
    for (std::size_t N : {256u, 512u, 1024u}) {
        const auto f = SampledFunction::sample(1.0, N, [](double) { return 1.0; });
        const Mode m = solve_mode(wave, gamma, f, 0.0, 1.0, c.problem.tol);
        r.push_back(verify_mode(wave, m, c.problem.tol.mode_residual).observed);
    }
    const double order = std::min(std::log2(r[0] / r[1]), std::log2(r[1] / r[2]));
    s.items.push_back(at_least("alpha=2 observed order", order, 1.5));
    const TimeOperator frac(0.8, {{-0.5, 0.4}});
    const auto f = SampledFunction::sample(1.0, 1024, [](double) { return 1.0; });
    const Mode m = solve_mode(frac, gamma, f, 0.5, 1.0, c.problem.tol);
    s.items.push_back(at_most("alpha=0.8 residual", verify_mode(frac, m, c.problem.tol.mode_residual).observed,
                              c.problem.tol.mode_residual));
}

void decay(const RunConfig& c, Suite& s) {
    const BesselOrder nu = c.problem.nu;
    const BesselZeroTable z = bessel_zeros(nu, 32);
    const XProfile h = XProfile::compliant(nu);
    const RadialQuadrature quad(z.gamma(32));
    std::vector<double> g;
    std::vector<double> f;
    for (std::size_t k = 5; k <= 32; ++k) {
        g.push_back(z.gamma(k));
        f.push_back(fb_coefficient([&](double x) { return h(x); }, nu, z.gamma(k), quad));
    }
    s.items.push_back(at_most("coefficient decay exponent", loglog_slope(g, f), -3.3));
}

using SuiteFn = void (*)(const RunConfig&, Suite&);

const std::vector<std::pair<std::string, SuiteFn>>& registry() {
    static const std::vector<std::pair<std::string, SuiteFn>> r{
        {"ml_reduction", ml_reduction},   {"classical_limits", classical_limits},
        {"liu_identity", liu_identity},   {"bessel_zeros", bessel_zero_suite},
        {"orthogonality", orthogonality}, {"caputo_power", caputo_power},
        {"mode_residual", mode_residual}, {"decay", decay},
    };
    return r;
}

}  // namespace

const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        for (const auto& [name, fn] : registry()) n.push_back(name);
        return n;
    }();
    return names;
}

int run_checks(const RunConfig& config, std::ostream& log) {
    for (const auto& name : config.suites) {
        if (std::find(suite_names().begin(), suite_names().end(), name) == suite_names().end()) {
            throw ConfigError("[check] suites: unknown suite '" + name + "'");
        }
    }
    std::error_code ec;
    std::filesystem::create_directories(config.out_dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + config.out_dir.string() + "'");

    json report = json::array();
    bool all = true;
    for (const auto& [name, fn] : registry()) {
        if (!config.suites.empty() &&
            std::find(config.suites.begin(), config.suites.end(), name) == config.suites.end()) {
            continue;
        }
        Suite s{name, {}, 0.0, {}};
        const auto start = std::chrono::steady_clock::now();
        try {
            fn(config, s);
        } catch (const std::exception& e) {
            s.error = e.what();
        }
        s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        all = all && s.pass();

        char secs[32];
        std::snprintf(secs, sizeof secs, "%.2f", s.seconds);
        log << (s.pass() ? "PASS " : "FAIL ") << name << " (" << secs << " s)\n";
        json items = json::array();
        for (const auto& i : s.items) {
            log << "  " << (i.pass ? "ok   " : "bad  ") << i.name << ": " << format_double(i.observed) << " vs "
                << format_double(i.tolerance) << '\n';
            items.push_back({{"name", i.name}, {"observed", i.observed}, {"tolerance", i.tolerance}, {"pass", i.pass}});
        }
        if (!s.error.empty()) log << "  error: " << s.error << '\n';
        json entry{{"suite", name}, {"pass", s.pass()}, {"seconds", s.seconds}, {"items", items}};
        if (!s.error.empty()) entry["error"] = s.error;
        report.push_back(entry);
    }
    std::ofstream out(config.out_dir / "checks.json", std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write checks.json");
    out << json{{"seed", config.seed}, {"suites", report}}.dump(2) << '\n';
    return all ? kExitOk : kExitCheckFailed;
}

}  // namespace fracbessel::cli
