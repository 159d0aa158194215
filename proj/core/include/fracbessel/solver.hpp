#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fracbessel/errors.hpp"
#include "fracbessel/fourier_bessel.hpp"
#include "fracbessel/fractional.hpp"
#include "fracbessel/mittag_leffler.hpp"
#include "fracbessel/specfun.hpp"
#include "fracbessel/time_operator.hpp"

namespace fracbessel {

/// Thresholds used by the solver and its verification pass.
struct SolverTolerances {
    double ml = 1e-14;             // relative, Mittag-Leffler evaluations
    double quadrature = 1e-8;      // Gauss-Jacobi doubling agreement
    double margin = 1e-8;          // relative non-resonance margin
    double mode_residual = 1e-2;   // normalised mode ODE residual
    double pde_residual = 5e-2;    // normalised PDE residual on the probe grid
    double nonlocal = 1e-8;        // relative to max |u|
    double boundary = 1e-10;       // relative to max |u|
    double tail = 1e-3;            // tail indicator relative to max |u| before warning
};

/// Largest admissible gamma_K. Keeps Bessel arguments inside the validated
/// range while still allowing K = 64 (gamma_64 is about 201 for every nu).
inline constexpr double kMaxGamma = 250.0;
inline constexpr std::size_t kDefaultModes = 32;

struct ProblemSpec {
    BesselOrder nu{1.0};
    TimeOperator op{2.0};
    double M = 0.0;
    double T = 1.0;
    SourceFunction source;
    std::size_t modes = kDefaultModes;
    /// Internal time grid; every mode is computed on it.
    std::size_t time_intervals = 1024;
    /// Output rows are every `time_stride`-th node of the time grid (the last
    /// node is always included).
    std::size_t time_stride = 1;
    std::vector<double> x_grid;
    SolverTolerances tol;
    /// Mode ODE residuals and field diagnostics.
    bool verify = true;
    /// Points of the uniform radial grid used by the PDE residual probe.
    std::size_t residual_x_nodes = 512;
    unsigned threads = 1;

    /// Throws DomainError when an invariant is violated.
    void validate() const;
};

struct Mode {
    std::size_t k = 0;
    double gamma = 0.0;
    SampledFunction f_k;
    double U0_at_T = 0.0;
    double margin = 0.0;
    double A = 0.0;
    SampledFunction U_k;
};

/// F(t) = int_0^t z^{alpha-1} E_{(...),alpha}(lambda_i z^{alpha-alpha_i}, -gamma^2 z^alpha) f(t - z) dz
/// by Gauss-Jacobi quadrature with weight z^{alpha-1}; 64 nodes, doubled
/// until successive results agree to tol.quadrature (up to 4096 nodes).
double mode_convolution(const TimeKernels& kernels, double gamma, const SampledFunction& f_k, double t,
                        const SolverTolerances& tol = {});
double mode_convolution(const TimeOperator& op, double gamma, const SampledFunction& f_k, double t,
                        const SolverTolerances& tol = {});

/// The same convolution at every node of the sample grid, by product
/// integration against the cubic interpolant of f_k.
SampledFunction mode_convolution_grid(const TimeKernels& kernels, double gamma, const SampledFunction& f_k,
                                      const SolverTolerances& tol = {});

struct NonResonanceReport {
    bool pass = true;
    std::vector<ResonantMode> modes;   // every mode, in order
    std::vector<ResonantMode> failing; // margin <= tol
};

/// margin_k = |1 + M U0_k(T)| / max(1, |M U0_k(T)|).
NonResonanceReport nonresonance_report(const TimeKernels& kernels, double M, double T, const BesselZeroTable& zeros,
                                       const SolverTolerances& tol = {});
/// As nonresonance_report, throwing ResonanceError if any mode fails.
NonResonanceReport nonresonance_check(const TimeOperator& op, double M, double T, const BesselZeroTable& zeros,
                                      const SolverTolerances& tol = {});

/// U_k = F_k - M F_k(T) / (1 + M U0(T)) * U0 on the grid of f_k.
Mode solve_mode(const TimeKernels& kernels, std::size_t k, double gamma, const SampledFunction& f_k, double M,
                const SolverTolerances& tol = {});
Mode solve_mode(const TimeOperator& op, double gamma, const SampledFunction& f_k, double M, double T,
                const SolverTolerances& tol = {});

struct ModeResidual {
    /// Worst scaled residual over nodes [first_node, N - 1]; this is what passes or fails.
    double observed = 0.0;
    /// Same quantity over all interior nodes [1, N - 1], reported for reference.
    double observed_all = 0.0;
    double tolerance = 0.0;
    bool pass = true;
    std::size_t first_node = 1;
};

/// Default share of [0, T] left out of the residual check. The discrete
/// Caputo operator loses accuracy next to t = 0, where fractional modes
/// behave like t^alpha, so the early layer says little about the solution.
inline constexpr double kResidualSkipFraction = 1.0 / 16.0;

/// max |L(U_k) + gamma^2 U_k - f_k| / (max|f_k| + gamma^2 max|U_k|) over the
/// nodes with t >= skip_fraction * T, with L discretised by the fractional module.
ModeResidual verify_mode(const TimeOperator& op, const Mode& mode, double tol,
                         double skip_fraction = kResidualSkipFraction);

struct ModeDiagnostics {
    std::size_t k = 0;
    double gamma = 0.0;
    double u0_at_T = 0.0;
    double margin = 0.0;
    double forbidden_M = 0.0;
    double amplitude = 0.0;
    double max_abs_U = 0.0;
    double max_abs_f = 0.0;
    bool verified = false;
    ModeResidual residual;
};

struct CheckResult {
    std::string name;
    double observed = 0.0;
    double tolerance = 0.0;
    bool pass = true;
};

struct FieldDiagnostics {
    double max_abs_u = 0.0;
    double nonlocal_defect = 0.0;      // max_x |u(0,x) + M u(T,x)|
    double boundary_defect = 0.0;      // max_t |u(t,1)|
    std::vector<double> flux_x{1e-3, 1e-2};
    std::vector<double> flux_defect;   // max_t |x u_x(t,x)| at flux_x
    bool has_initial_velocity = false; // alpha > 1
    double initial_velocity_defect = 0.0;
    double pde_residual = 0.0;         // max over probes, absolute
    double pde_scale = 0.0;            // max |f| + max |B u| over probes
    double tail_indicator = 0.0;       // 2 max_t|U_K| gamma_K / pi
    double tail_exponent = 1.5;        // predicted decay of |U_k| in gamma_k
    bool truncation_warning = false;
};

struct SolutionGrid {
    std::vector<double> t;
    std::vector<double> x;
    std::vector<double> values;        // row-major: t then x
    std::vector<ModeDiagnostics> modes;
    FieldDiagnostics field;
    std::vector<CheckResult> checks;
    std::vector<std::string> warnings;

    double at(std::size_t ti, std::size_t xi) const { return values[ti * x.size() + xi]; }
    bool all_checks_pass() const noexcept;
};

/// Computes u(t, x) = sum_k U_k(t) J_nu(gamma_k x) and, when spec.verify is
/// set, the diagnostics and checks. Throws ResonanceError, ConvergenceError or
/// DomainError.
SolutionGrid assemble(const ProblemSpec& spec);

/// Per-mode results without field evaluation; used by assemble and by tests.
struct ModeSet {
    BesselZeroTable zeros;
    std::vector<Mode> modes;
    NonResonanceReport resonance;
};
ModeSet solve_modes(const ProblemSpec& spec);

}  // namespace fracbessel
