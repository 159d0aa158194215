#include "fracbessel/solver.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <thread>

#include "fracbessel/compensated_sum.hpp"
#include "fracbessel/errors.hpp"
#include "fracbessel/quadrature.hpp"

namespace fracbessel {

namespace {

constexpr std::size_t kJacobiStartNodes = 8;
constexpr std::size_t kJacobiMaxNodes = 512;
// Product integration: Gauss-Legendre points per regular cell, and the dyadic
// grading of the first cell toward the kernel singularity.
constexpr std::size_t kCellPoints = 8;
constexpr int kFirstCellLevels = 24;
constexpr std::size_t kFirstCellJacobiPoints = 16;
constexpr std::size_t kProbeCount = 8;

MLTolerance ml_tol(const SolverTolerances& tol) { return MLTolerance{tol.ml, 1e-17}; }

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

// Runs body(i) for i in [0, count) on up to `threads` workers. The first
// exception by index is rethrown after all workers finish.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body) {
    const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), count);
    std::vector<std::exception_ptr> errors(count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
                    try {
                        body(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

ResonantMode resonance_entry(std::size_t k, double M, double u0T) {
    ResonantMode r;
    r.k = k;
    r.u0_at_T = u0T;
    const double mu = M * u0T;
    r.margin = std::abs(1.0 + mu) / std::max(1.0, std::abs(mu));
    r.forbidden_M = u0T == 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / u0T;
    return r;
}

[[noreturn]] void throw_resonance(const std::vector<ResonantMode>& failing) {
    std::ostringstream os;
    os << "non-resonance condition violated for mode(s):";
    for (const auto& r : failing) {
        os << " k=" << r.k << " (U0(T)=" << fmt(r.u0_at_T) << ", forbidden M=" << fmt(r.forbidden_M)
           << ", margin=" << r.margin << ")";
    }
    throw ResonanceError(os.str(), failing);
}

// Coefficients of prod_{c' != c} (d_{c'} - s) / (c - c') as a cubic in s.
std::array<double, 4> lagrange_in_s(const std::array<double, 4>& d, std::size_t c) {
    std::array<double, 3> r{};
    std::size_t n = 0;
    double denom = 1.0;
    for (std::size_t e = 0; e < 4; ++e) {
        if (e == c) continue;
        r[n++] = d[e];
        denom *= static_cast<double>(c) - static_cast<double>(e);
    }
    const double e0 = r[0] * r[1] * r[2];
    const double e1 = r[0] * r[1] + r[0] * r[2] + r[1] * r[2];
    const double e2 = r[0] + r[1] + r[2];
    return {e0 / denom, -e1 / denom, e2 / denom, -1.0 / denom};
}

}  // namespace

void ProblemSpec::validate() const {
    if (!nu.is_problem_order()) throw DomainError("problem: Bessel order must be > 0");
    if (!(T > 0.0) || !std::isfinite(T)) throw DomainError("problem: T must be positive and finite");
    if (!std::isfinite(M)) throw DomainError("problem: M must be finite");
    if (modes < 1) throw DomainError("problem: at least one mode is required");
    if (time_intervals < SampledFunction::kMinIntervals) {
        throw DomainError("problem: time grid needs at least " + std::to_string(SampledFunction::kMinIntervals) +
                          " intervals");
    }
    if (op.alpha() > 1.0 && time_intervals < 16) {
        throw DomainError("problem: alpha > 1 needs at least 16 time intervals");
    }
    if (time_stride < 1) throw DomainError("problem: time stride must be >= 1");
    for (double x : x_grid) {
        if (!(x >= kMinReconstructX && x <= 1.0)) {
            throw DomainError("problem: x grid points must lie in [1e-6, 1], got " + fmt(x));
        }
    }
    if (residual_x_nodes < RadialGrid::kMinNodes) {
        throw DomainError("problem: residual radial grid needs at least 32 nodes");
    }
    const std::array<double, 8> positive{tol.ml, tol.quadrature, tol.margin, tol.mode_residual,
                                         tol.pde_residual, tol.nonlocal, tol.boundary, tol.tail};
    for (double v : positive) {
        if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("problem: tolerances must be positive and finite");
    }
    if (tol.ml < 1e-15) throw DomainError("problem: Mittag-Leffler tolerance must be >= 1e-15");
}

double mode_convolution(const TimeKernels& kernels, double gamma, const SampledFunction& f_k, double t,
                        const SolverTolerances& tol) {
    if (!(t >= 0.0 && t <= f_k.horizon() * (1.0 + 1e-14))) {
        throw DomainError("mode_convolution: t must lie in [0, T]");
    }
    if (t == 0.0 || f_k.max_abs() == 0.0) return 0.0;
    const double alpha = kernels.op().alpha();
    const double g2 = gamma * gamma;
    // The regular part of the kernel carries powers z^alpha, z^(alpha - alpha_i) that spoil a single Gauss
    // rule, so [0, t] is graded geometrically towards 0. Pieces shrink until h^(2 alpha) is below 1e-13.
    const auto levels = static_cast<int>(std::min(200.0, std::ceil(13.0 * std::log2(10.0) / (2.0 * alpha))));
    const double inner = std::ldexp(t, -levels);
    auto integrate = [&](std::size_t n, double& magnitude) {
        CompensatedSum acc;
        magnitude = 0.0;
        auto add = [&](double v) {
            acc.add(v);
            magnitude += std::abs(v);
        };
        const QuadratureRule& jac = gauss_jacobi(n, 0.0, alpha - 1.0);
        const double jscale = std::pow(0.5 * inner, alpha);
        for (std::size_t q = 0; q < n; ++q) {
            const double z = 0.5 * inner * (1.0 + jac.nodes[q]);
            add(jscale * jac.weights[q] * kernels.convolution_kernel(g2, z, ml_tol(tol)) * f_k(t - z));
        }
        const QuadratureRule& leg = gauss_legendre(n);
        for (int j = 0; j < levels; ++j) {
            const double lo = std::ldexp(t, -j - 1);
            const double half = 0.5 * lo;  // the piece [lo, 2 lo] has half-width lo / 2
            for (std::size_t q = 0; q < n; ++q) {
                const double z = lo + half * (1.0 + leg.nodes[q]);
                add(half * leg.weights[q] * std::pow(z, alpha - 1.0) * kernels.convolution_kernel(g2, z, ml_tol(tol)) *
                    f_k(t - z));
            }
        }
        return acc.value();
    };
    double mag = 0.0;
    double prev = integrate(kJacobiStartNodes, mag);
    for (std::size_t n = 2 * kJacobiStartNodes; n <= kJacobiMaxNodes; n *= 2) {
        const double cur = integrate(n, mag);
        if (std::abs(cur - prev) <= tol.quadrature * std::max(std::abs(cur), 1e-3 * mag)) return cur;
        prev = cur;
    }
    throw ConvergenceError("mode_convolution: graded Gauss results did not settle at " +
                           std::to_string(kJacobiMaxNodes) + " nodes");
}

double mode_convolution(const TimeOperator& op, double gamma, const SampledFunction& f_k, double t,
                        const SolverTolerances& tol) {
    return mode_convolution(TimeKernels(op), gamma, f_k, t, tol);
}

SampledFunction mode_convolution_grid(const TimeKernels& kernels, double gamma, const SampledFunction& f_k,
                                      const SolverTolerances& tol) {
    const std::size_t N = f_k.intervals();
    if (f_k.max_abs() == 0.0) return SampledFunction::zeros(f_k.horizon(), N);
    const double h = f_k.step();
    const double alpha = kernels.op().alpha();
    const double g2 = gamma * gamma;
    const MLTolerance mt = ml_tol(tol);

    // mu[i][r] = int over cell i of z^{alpha-1} E(z) s^r dz, s = (z - t_i) / h.
    std::vector<std::array<double, 4>> mu(N);
    auto accumulate = [&](std::array<double, 4>& m, double s, double w) {
        double p = w;
        for (std::size_t r = 0; r < 4; ++r) {
            m[r] += p;
            p *= s;
        }
    };
    {
        std::array<double, 4> m{};
        const QuadratureRule& gj = gauss_jacobi(kFirstCellJacobiPoints, 0.0, alpha - 1.0);
        const double inner = h * std::ldexp(1.0, -kFirstCellLevels);
        const double jscale = std::pow(0.5 * inner, alpha);
        for (std::size_t q = 0; q < gj.nodes.size(); ++q) {
            const double z = 0.5 * inner * (1.0 + gj.nodes[q]);
            accumulate(m, z / h, jscale * gj.weights[q] * kernels.convolution_kernel(g2, z, mt));
        }
        const QuadratureRule& gl = gauss_legendre(kCellPoints);
        for (int level = kFirstCellLevels; level > 0; --level) {
            const double a = h * std::ldexp(1.0, -level);
            const double half = 0.5 * a;  // sub-cell [a, 2a]
            for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
                const double z = a + half * (1.0 + gl.nodes[q]);
                const double w = half * gl.weights[q] * std::pow(z, alpha - 1.0) * kernels.convolution_kernel(g2, z, mt);
                accumulate(m, z / h, w);
            }
        }
        mu[0] = m;
    }
    const QuadratureRule& gl = gauss_legendre(kCellPoints);
    for (std::size_t i = 1; i < N; ++i) {
        std::array<double, 4> m{};
        const double t0 = static_cast<double>(i) * h;
        for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
            const double s = 0.5 * (1.0 + gl.nodes[q]);
            const double z = t0 + s * h;
            accumulate(m, s, 0.5 * h * gl.weights[q] * std::pow(z, alpha - 1.0) * kernels.convolution_kernel(g2, z, mt));
        }
        mu[i] = m;
    }

    auto cell_weights = [&](std::size_t i, const std::array<double, 4>& d) {
        std::array<double, 4> w{};
        for (std::size_t c = 0; c < 4; ++c) {
            const auto p = lagrange_in_s(d, c);
            w[c] = p[0] * mu[i][0] + p[1] * mu[i][1] + p[2] * mu[i][2] + p[3] * mu[i][3];
        }
        return w;
    };
    // Centred stencil nodes (j-i-2 .. j-i+1): offsets d = (2, 1, 0, -1).
    std::vector<std::array<double, 4>> centred(N);
    for (std::size_t i = 0; i < N; ++i) centred[i] = cell_weights(i, {2.0, 1.0, 0.0, -1.0});

    const auto f = f_k.values();
    std::vector<double> out(N + 1, 0.0);
    for (std::size_t j = 1; j <= N; ++j) {
        CompensatedSum acc;
        for (std::size_t i = 0; i < j; ++i) {
            const auto first = static_cast<std::ptrdiff_t>(j - i) - 2;
            const std::ptrdiff_t n0 = std::clamp<std::ptrdiff_t>(first, 0, static_cast<std::ptrdiff_t>(N) - 3);
            std::array<double, 4> w;
            if (n0 == first) {
                w = centred[i];
            } else {
                std::array<double, 4> d{};
                for (std::size_t c = 0; c < 4; ++c) {
                    d[c] = static_cast<double>(static_cast<std::ptrdiff_t>(j - i) - n0 - static_cast<std::ptrdiff_t>(c));
                }
                w = cell_weights(i, d);
            }
            const auto base = static_cast<std::size_t>(n0);
            acc.add(w[0] * f[base] + w[1] * f[base + 1] + w[2] * f[base + 2] + w[3] * f[base + 3]);
        }
        out[j] = acc.value();
    }
    return SampledFunction(f_k.horizon(), std::move(out));
}

NonResonanceReport nonresonance_report(const TimeKernels& kernels, double M, double T, const BesselZeroTable& zeros,
                                       const SolverTolerances& tol) {
    if (!(T > 0.0)) throw DomainError("nonresonance: T must be positive");
    NonResonanceReport report;
    for (std::size_t k = 1; k <= zeros.size(); ++k) {
        const double g = zeros.gamma(k);
        const ResonantMode r = resonance_entry(k, M, kernels.u0_bar(g * g, T, ml_tol(tol)));
        if (!(r.margin > tol.margin)) {
            report.pass = false;
            report.failing.push_back(r);
        }
        report.modes.push_back(r);
    }
    return report;
}

NonResonanceReport nonresonance_check(const TimeOperator& op, double M, double T, const BesselZeroTable& zeros,
                                      const SolverTolerances& tol) {
    NonResonanceReport report = nonresonance_report(TimeKernels(op), M, T, zeros, tol);
    if (!report.pass) throw_resonance(report.failing);
    return report;
}

Mode solve_mode(const TimeKernels& kernels, std::size_t k, double gamma, const SampledFunction& f_k, double M,
                const SolverTolerances& tol) {
    const std::size_t N = f_k.intervals();
    const double T = f_k.horizon();
    const double g2 = gamma * gamma;
    const MLTolerance mt = ml_tol(tol);

    std::vector<double> u0(N + 1);
    for (std::size_t j = 0; j <= N; ++j) u0[j] = kernels.u0_bar(g2, f_k.grid().node(j), mt);
    const ResonantMode r = resonance_entry(k, M, u0[N]);
    if (!(r.margin > tol.margin)) throw_resonance({r});

    SampledFunction F = mode_convolution_grid(kernels, gamma, f_k, tol);
    const double denom = 1.0 + M * u0[N];
    const double FT = F[N];
    const double A = -M * FT / denom;
    std::vector<double> U(N + 1);
    for (std::size_t j = 0; j <= N; ++j) U[j] = F[j] + A * u0[j];

    Mode mode{k, gamma, f_k, u0[N], r.margin, A, SampledFunction(T, std::move(U))};
    return mode;
}

Mode solve_mode(const TimeOperator& op, double gamma, const SampledFunction& f_k, double M, double T,
                const SolverTolerances& tol) {
    if (std::abs(T - f_k.horizon()) > 1e-14 * T) {
        throw DomainError("solve_mode: f_k must be sampled on [0, T]");
    }
    return solve_mode(TimeKernels(op), 1, gamma, f_k, M, tol);
}

ModeResidual verify_mode(const TimeOperator& op, const Mode& mode, double tol, double skip_fraction) {
    constexpr std::size_t kMinIntervals = 256;
    const std::size_t N = mode.U_k.intervals();
    if (N < kMinIntervals) {
        throw DomainError("verify_mode: need at least 256 time intervals, got " + std::to_string(N));
    }
    if (!(skip_fraction >= 0.0 && skip_fraction < 0.5)) {
        throw DomainError("verify_mode: skip_fraction must lie in [0, 0.5)");
    }
    const SampledFunction LU = apply_L(op, mode.U_k);
    const double g2 = mode.gamma * mode.gamma;
    const double scale = mode.f_k.max_abs() + g2 * mode.U_k.max_abs();
    ModeResidual r;
    r.tolerance = tol;
    r.first_node = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(skip_fraction * static_cast<double>(N))));
    if (scale == 0.0) return r;
    double worst = 0.0;
    double worst_all = 0.0;
    for (std::size_t i = 1; i < N; ++i) {
        const double e = std::abs(LU[i] + g2 * mode.U_k[i] - mode.f_k[i]);
        worst_all = std::max(worst_all, e);
        if (i >= r.first_node) worst = std::max(worst, e);
    }
    r.observed = worst / scale;
    r.observed_all = worst_all / scale;
    r.pass = r.observed <= tol;
    return r;
}

bool SolutionGrid::all_checks_pass() const noexcept {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

ModeSet solve_modes(const ProblemSpec& spec) {
    spec.validate();
    BesselZeroTable zeros = bessel_zeros(spec.nu, spec.modes);
    if (zeros.gamma(spec.modes) > kMaxGamma) {
        throw DomainError("problem: gamma_K = " + fmt(zeros.gamma(spec.modes)) + " exceeds the cap " +
                          fmt(kMaxGamma) + "; reduce the mode count");
    }
    const TimeKernels kernels(spec.op);
    NonResonanceReport resonance = nonresonance_report(kernels, spec.M, spec.T, zeros, spec.tol);
    if (!resonance.pass) throw_resonance(resonance.failing);

    const ModeCoefficients coeffs = fb_expand(spec.source, spec.nu, zeros, TimeGrid{spec.T, spec.time_intervals});
    std::vector<std::optional<Mode>> slots(spec.modes);
    parallel_for(spec.modes, spec.threads, [&](std::size_t i) {
        slots[i] = solve_mode(kernels, i + 1, zeros.gamma(i + 1), coeffs.coeffs[i], spec.M, spec.tol);
    });
    ModeSet out{std::move(zeros), {}, std::move(resonance)};
    out.modes.reserve(spec.modes);
    for (auto& m : slots) out.modes.push_back(std::move(*m));
    return out;
}

SolutionGrid assemble(const ProblemSpec& spec) {
    ModeSet set = solve_modes(spec);
    const std::vector<Mode>& modes = set.modes;
    const std::size_t K = modes.size();
    const std::size_t N = spec.time_intervals;
    const TimeGrid tg{spec.T, N};
    const double alpha = spec.op.alpha();

    SolutionGrid out;
    out.x = spec.x_grid;
    if (out.x.empty()) {
        for (int i = 1; i <= 100; ++i) out.x.push_back(i / 100.0);
    }
    std::vector<std::size_t> rows;
    for (std::size_t j = 0; j <= N; j += spec.time_stride) rows.push_back(j);
    if (rows.back() != N) rows.push_back(N);
    for (std::size_t j : rows) out.t.push_back(tg.node(j));

    // u(t_j, x) for a fixed x from a column of J values.
    auto series = [&](const std::vector<double>& jcol, std::size_t j) {
        CompensatedSum acc;
        for (std::size_t k = 0; k < K; ++k) acc.add(modes[k].U_k[j] * jcol[k]);
        return acc.value();
    };
    auto j_column = [&](double x) {
        std::vector<double> col(K);
        for (std::size_t k = 0; k < K; ++k) col[k] = bessel_j(spec.nu, modes[k].gamma * x);
        return col;
    };

    const std::size_t nx = out.x.size();
    std::vector<std::vector<double>> jx(nx);
    parallel_for(nx, spec.threads, [&](std::size_t i) { jx[i] = j_column(out.x[i]); });
    out.values.assign(rows.size() * nx, 0.0);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t i = 0; i < nx; ++i) out.values[r * nx + i] = series(jx[i], rows[r]);
    }

    FieldDiagnostics& fd = out.field;
    for (double v : out.values) fd.max_abs_u = std::max(fd.max_abs_u, std::abs(v));

    for (std::size_t i = 0; i < nx; ++i) {
        fd.nonlocal_defect = std::max(fd.nonlocal_defect, std::abs(series(jx[i], 0) + spec.M * series(jx[i], N)));
    }
    const std::vector<double> j_one = j_column(1.0);
    for (std::size_t j = 0; j <= N; ++j) fd.boundary_defect = std::max(fd.boundary_defect, std::abs(series(j_one, j)));

    for (double x : fd.flux_x) {
        const double d = 0.1 * x;
        const auto lo = j_column(x - d);
        const auto hi = j_column(x + d);
        double worst = 0.0;
        for (std::size_t j = 0; j <= N; ++j) {
            worst = std::max(worst, std::abs(x * (series(hi, j) - series(lo, j)) / (2.0 * d)));
        }
        fd.flux_defect.push_back(worst);
    }
    if (alpha > 1.0) {
        fd.has_initial_velocity = true;
        const double h = tg.step();
        for (std::size_t i = 0; i < nx; ++i) {
            const double v = (-3.0 * series(jx[i], 0) + 4.0 * series(jx[i], 1) - series(jx[i], 2)) / (2.0 * h);
            fd.initial_velocity_defect = std::max(fd.initial_velocity_defect, std::abs(v));
        }
    }

    const Mode& last = modes.back();
    fd.tail_indicator = 2.0 * last.U_k.max_abs() * last.gamma / std::numbers::pi;
    if (fd.max_abs_u > 0.0 && fd.tail_indicator > spec.tol.tail * fd.max_abs_u) {
        fd.truncation_warning = true;
        out.warnings.push_back("truncation: tail indicator " + fmt(fd.tail_indicator) + " exceeds " +
                               fmt(spec.tol.tail) + " * max|u|; consider more modes");
    }

    out.modes.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
        const Mode& m = modes[k];
        const ResonantMode& r = set.resonance.modes[k];
        ModeDiagnostics& md = out.modes[k];
        md.k = m.k;
        md.gamma = m.gamma;
        md.u0_at_T = m.U0_at_T;
        md.margin = m.margin;
        md.forbidden_M = r.forbidden_M;
        md.amplitude = m.A;
        md.max_abs_U = m.U_k.max_abs();
        md.max_abs_f = m.f_k.max_abs();
    }

    const double umax = fd.max_abs_u;
    out.checks.push_back({"nonlocal", fd.nonlocal_defect, spec.tol.nonlocal * umax,
                          fd.nonlocal_defect <= spec.tol.nonlocal * umax});
    out.checks.push_back({"boundary", fd.boundary_defect, spec.tol.boundary * umax,
                          fd.boundary_defect <= spec.tol.boundary * umax});

    if (!spec.verify) return out;

    if (N >= 256) {
        parallel_for(K, spec.threads, [&](std::size_t k) {
            out.modes[k].residual = verify_mode(spec.op, modes[k], spec.tol.mode_residual);
            out.modes[k].verified = true;
        });
        double worst = 0.0;
        for (const auto& md : out.modes) worst = std::max(worst, md.residual.observed);
        out.checks.push_back({"mode_residual", worst, spec.tol.mode_residual, worst <= spec.tol.mode_residual});
    } else {
        out.warnings.push_back("mode residuals skipped: need at least 256 time intervals");
    }

    // PDE residual on an 8 x 8 interior probe grid.
    const RadialGrid rg{RadialGrid::kMinXMin, spec.residual_x_nodes};
    std::vector<std::size_t> x_probe(kProbeCount);
    std::vector<std::size_t> t_probe(kProbeCount);
    for (std::size_t p = 0; p < kProbeCount; ++p) {
        const double target = 0.1 + 0.8 * static_cast<double>(p) / static_cast<double>(kProbeCount - 1);
        x_probe[p] = static_cast<std::size_t>(std::lround((target - rg.x_min) / rg.step()));
        t_probe[p] = static_cast<std::size_t>(std::lround(static_cast<double>(N) * static_cast<double>(p + 1) /
                                                          static_cast<double>(kProbeCount + 1)));
    }
    std::vector<std::vector<double>> jr(rg.nodes);
    parallel_for(rg.nodes, spec.threads, [&](std::size_t i) { jr[i] = j_column(rg.node(i)); });
    // Lu[p][q] at x probe p, t probe q.
    std::vector<std::array<double, kProbeCount>> Lu(kProbeCount);
    parallel_for(kProbeCount, spec.threads, [&](std::size_t p) {
        std::vector<double> s(N + 1);
        for (std::size_t j = 0; j <= N; ++j) s[j] = series(jr[x_probe[p]], j);
        const SampledFunction l = apply_L(spec.op, SampledFunction(spec.T, std::move(s)));
        for (std::size_t q = 0; q < kProbeCount; ++q) Lu[p][q] = l[t_probe[q]];
    });
    std::vector<std::array<double, kProbeCount>> Bu(kProbeCount);
    parallel_for(kProbeCount, spec.threads, [&](std::size_t q) {
        std::vector<double> s(rg.nodes);
        for (std::size_t i = 0; i < rg.nodes; ++i) s[i] = series(jr[i], t_probe[q]);
        const std::vector<double> b = apply_bessel(s, rg, spec.nu);
        for (std::size_t p = 0; p < kProbeCount; ++p) Bu[p][q] = b[x_probe[p]];
    });
    double fmax = 0.0;
    double bmax = 0.0;
    for (std::size_t p = 0; p < kProbeCount; ++p) {
        for (std::size_t q = 0; q < kProbeCount; ++q) {
            const double fv = spec.source(tg.node(t_probe[q]), rg.node(x_probe[p]));
            fmax = std::max(fmax, std::abs(fv));
            bmax = std::max(bmax, std::abs(Bu[p][q]));
            fd.pde_residual = std::max(fd.pde_residual, std::abs(Lu[p][q] - Bu[p][q] - fv));
        }
    }
    fd.pde_scale = fmax + bmax;
    out.checks.push_back({"pde_residual", fd.pde_residual, spec.tol.pde_residual * fd.pde_scale,
                          fd.pde_residual <= spec.tol.pde_residual * fd.pde_scale});
    return out;
}

}  // namespace fracbessel
