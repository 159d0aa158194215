#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "fracbessel/time_operator.hpp"

namespace fracbessel {

/// Arguments of E_{(a_1..a_m), b}(z_1..z_m).
struct MLParams {
    std::vector<double> exponents;
    double offset = 1.0;
    std::vector<double> args;

    /// Throws DomainError unless m >= 1, a_i > 0, b > 0, sizes agree and
    /// everything is finite.
    void validate() const;
};

struct MLValue {
    double value = 0.0;
    int layers_used = 0;
    /// Geometric extrapolation of the discarded layers.
    double tail_estimate = 0.0;
};

/// Stopping and acceptance thresholds. A result is accepted once the
/// truncation tail and the rounding error estimate are both below
/// max(rel * |value|, abs).
struct MLTolerance {
    double rel = 1e-14;
    double abs = 0.0;
};

/// Hard limits on the direct summation.
inline constexpr int kMLMaxLayers = 40000;
inline constexpr std::size_t kMLMaxTerms = 3'000'000;
/// Largest working precision (bits) the multiprecision fallback may use.
inline constexpr long kMLMaxPrecisionBits = 1L << 16;

/// Multinomial Mittag-Leffler function with fixed exponents and offset.
///
/// Sums the series layer by layer in total degree k = l_1 + ... + l_m, each
/// term k!/(l_1!...l_m!) prod z_i^{l_i} / Gamma(b + sum a_i l_i). Terms are
/// formed in log-space. When the double-precision pass is dominated by
/// cancellation (e.g. large negative arguments) the sum is repeated in
/// MPFR arithmetic at a precision chosen from the largest term.
///
/// Per-layer coefficients are cached and shared between copies; evaluation is
/// safe from multiple threads and the result does not depend on cache history.
class MultinomialMittagLeffler {
public:
    MultinomialMittagLeffler(std::vector<double> exponents, double offset);

    std::size_t arity() const noexcept;
    std::span<const double> exponents() const noexcept;
    double offset() const noexcept;

    MLValue evaluate(std::span<const double> args, MLTolerance tol = {}) const;

    struct Impl;

private:
    std::shared_ptr<Impl> impl_;
};

/// E_{(a),b}(z) for a single parameter set. tol >= 1e-15.
MLValue ml_multinomial(const MLParams& p, double tol);

namespace detail {
/// Always sums by total-degree layers over compositions, bypassing the
/// lattice form used when the exponents share a small rational step. Exposed
/// so tests can compare the two summation orders.
MLValue ml_multinomial_layered(const MLParams& p, double tol);
}  // namespace detail

/// Classical two-parameter E_{a,b}(z) = sum_k z^k / Gamma(b + a k), computed by
/// its own series loop (used as the m = 1 reduction oracle).
double ml_two_param(double a, double b, double z, double tol);

/// Unit-initial-value homogeneous response U0 of one mode:
/// L(U0) + gamma_sq U0 = 0, U0(0) = 1 (and U0'(0) = 0 when alpha > 1).
///
/// U0(t) = 1 - gamma_sq t^alpha E_{(alpha-alpha_1,...,alpha),1+alpha}(lambda_1 t^{alpha-alpha_1}, ..., -gamma_sq t^alpha).
/// Without lower-order terms this equals E_{alpha,1}(-gamma_sq t^alpha), which is
/// what is evaluated in that case. Exactly 1 at t = 0.
double u0_bar(const TimeOperator& op, double gamma_sq, double t, double tol = 1e-14);

/// E_{(alpha-alpha_1,...,alpha),1}(lambda_1 t^{alpha-alpha_1}, ..., -gamma_sq t^alpha).
/// Coincides with u0_bar only when the operator has no lower-order terms; with
/// lower-order Caputo terms it does not solve the mode equation.
double u0_bar_unit_offset(const TimeOperator& op, double gamma_sq, double t, double tol = 1e-14);

/// Mittag-Leffler kernels of one time operator, shared by all modes.
class TimeKernels {
public:
    explicit TimeKernels(const TimeOperator& op);

    const TimeOperator& op() const noexcept { return op_; }

    /// U0(t) as in u0_bar.
    double u0_bar(double gamma_sq, double t, MLTolerance tol = {}) const;

    /// As u0_bar_unit_offset.
    double u0_bar_unit_offset(double gamma_sq, double t, MLTolerance tol = {}) const;

    /// E_{(alpha-alpha_1,...,alpha),alpha}(args at z), without the z^{alpha-1} factor.
    double convolution_kernel(double gamma_sq, double z, MLTolerance tol = {}) const;

    /// E_{(alpha-alpha_1,...,alpha), b}(args at t) for an arbitrary offset b.
    double evaluate(double offset, double gamma_sq, double t, MLTolerance tol = {}) const;

private:
    TimeOperator op_;
    MultinomialMittagLeffler unit_;   // offset 1
    MultinomialMittagLeffler kernel_; // offset alpha
    MultinomialMittagLeffler shifted_; // offset 1 + alpha
};

}  // namespace fracbessel
