#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "fracbessel/fractional.hpp"
#include "fracbessel/specfun.hpp"

namespace fracbessel {

/// Spatial factor h(x) of a separable source term, x in [0, 1].
class XProfile {
public:
    enum class Kind { zero, bessel_mode, polynomial, custom };

    /// h = 0.
    static XProfile zero();
    /// h = scale * J_nu(gamma_m x), m 1-based.
    static XProfile bessel_mode(BesselOrder nu, std::size_t m, double scale = 1.0);
    /// h = scale * x^p (1 - x)^q with p, q >= 0.
    static XProfile polynomial(double p, double q, double scale = 1.0);
    /// x^(nu + 4) (1 - x)^3: vanishes to fourth order at 0 and third order at 1.
    static XProfile compliant(BesselOrder nu, double scale = 1.0);
    static XProfile custom(std::function<double(double)> h, std::string name = "custom");

    double operator()(double x) const { return fn_(x); }
    Kind kind() const noexcept { return kind_; }
    const std::string& description() const noexcept { return description_; }

    /// Order, 1-based index and scale of a bessel_mode profile; zero index otherwise.
    struct ModeInfo {
        double nu = 0.0;
        std::size_t m = 0;
        double scale = 0.0;
    };
    const ModeInfo& mode_info() const noexcept { return mode_; }

private:
    XProfile(Kind kind, std::function<double(double)> fn, std::string description)
        : kind_(kind), fn_(std::move(fn)), description_(std::move(description)) {}

    Kind kind_;
    ModeInfo mode_{};
    std::function<double(double)> fn_;
    std::string description_;
};

/// Temporal factor g(t) of a separable source term.
class TProfile {
public:
    enum class Kind { constant, polynomial, sine, exponential, custom };

    static TProfile constant(double c);
    /// sum_i coeffs[i] t^i
    static TProfile polynomial(std::vector<double> coeffs);
    /// amplitude * sin(omega t + phase)
    static TProfile sine(double amplitude, double omega, double phase = 0.0);
    /// amplitude * exp(-rate t)
    static TProfile exponential(double amplitude, double rate);
    static TProfile custom(std::function<double(double)> g, std::string name = "custom");

    double operator()(double t) const { return fn_(t); }
    Kind kind() const noexcept { return kind_; }
    const std::string& description() const noexcept { return description_; }

private:
    TProfile(Kind kind, std::function<double(double)> fn, std::string description)
        : kind_(kind), fn_(std::move(fn)), description_(std::move(description)) {}

    Kind kind_;
    std::function<double(double)> fn_;
    std::string description_;
};

struct SeparableTerm {
    TProfile time;
    XProfile space;
};

/// f(t, x) sampled on a tensor grid, bilinear between nodes and clamped
/// outside. Node vectors must be strictly increasing; values are row-major in
/// t then x.
class TabulatedSource {
public:
    TabulatedSource(std::vector<double> t_nodes, std::vector<double> x_nodes, std::vector<double> values);

    double operator()(double t, double x) const;

    std::span<const double> t_nodes() const noexcept { return t_; }
    std::span<const double> x_nodes() const noexcept { return x_; }
    std::span<const double> values() const noexcept { return v_; }

private:
    std::vector<double> t_;
    std::vector<double> x_;
    std::vector<double> v_;
};

/// Endpoint behaviour of an x-profile as seen by finite-difference sampling.
struct ComplianceReport {
    bool compliant = false;
    /// Observed vanishing order at x = 0 (>= 4 required) and at x = 1 (>= 3).
    double order_at_0 = 0.0;
    double order_at_1 = 0.0;
    /// Largest sampled fourth difference quotient.
    double max_fourth_derivative = 0.0;
    std::string detail;
};

ComplianceReport check_compliance(const std::function<double(double)>& h);

/// Source term f(t, x): a finite sum of separable terms or a table.
/// Default-constructed sources are identically zero.
class SourceFunction {
public:
    enum class Kind { builtin, tabulated };

    SourceFunction() = default;
    static SourceFunction separable(TProfile g, XProfile h);
    static SourceFunction tabulated(TabulatedSource table);

    /// Appends a separable term (builtin sources only).
    SourceFunction& add(TProfile g, XProfile h);
    /// a * this + b * other, for builtin sources.
    SourceFunction combine(double a, const SourceFunction& other, double b) const;

    double operator()(double t, double x) const;

    Kind kind() const noexcept { return kind_; }
    std::span<const SeparableTerm> terms() const noexcept { return terms_; }
    const TabulatedSource* table() const noexcept { return table_.get(); }
    bool is_zero() const noexcept;

    /// Validates every x-profile with check_compliance and sets the flag;
    /// throws DomainError naming the failing term otherwise.
    void mark_theorem_compliant();
    bool theorem_compliant() const noexcept { return compliant_; }

private:
    Kind kind_ = Kind::builtin;
    std::vector<SeparableTerm> terms_;
    std::shared_ptr<const TabulatedSource> table_;
    bool compliant_ = false;
};

/// Composite Gauss-Legendre rule on (0, 1] resolving J_nu(gamma x) for
/// gamma <= gamma_max: at least 8 panels per period 2 pi / gamma_max and at
/// least 32 panels, plus dyadic refinement of the first panel toward x = 0.
class RadialQuadrature {
public:
    explicit RadialQuadrature(double gamma_max);

    std::span<const double> nodes() const noexcept { return nodes_; }
    std::span<const double> weights() const noexcept { return weights_; }
    std::size_t panels() const noexcept { return panels_; }

    /// Panel count for a given largest zero.
    static std::size_t panel_count(double gamma_max);

private:
    std::vector<double> nodes_;
    std::vector<double> weights_;
    std::size_t panels_ = 0;
};

/// 2 / J_{nu+1}(gamma_k)^2 * int_0^1 h(x) x J_nu(gamma_k x) dx.
double fb_coefficient(const std::function<double(double)>& h, BesselOrder nu, double gamma_k);
double fb_coefficient(const std::function<double(double)>& h, BesselOrder nu, double gamma_k,
                      const RadialQuadrature& quad);

/// f_k(t_j) for every mode of `zeros` and every node of `grid`.
struct ModeCoefficients {
    BesselOrder nu;
    BesselZeroTable zeros;
    std::vector<SampledFunction> coeffs;
};

ModeCoefficients fb_expand(const SourceFunction& f, BesselOrder nu, const BesselZeroTable& zeros, TimeGrid grid);

/// sum_k c_k J_nu(gamma_k x) in ascending k with compensated summation.
/// x must lie in [1e-6, 1].
double fb_reconstruct(std::span<const double> coeffs, BesselOrder nu, const BesselZeroTable& zeros, double x);

inline constexpr double kMinReconstructX = 1e-6;

}  // namespace fracbessel
