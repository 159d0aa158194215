#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fracbessel {

/// Order of a Bessel function of the first kind. Evaluation accepts nu >= 0;
/// the boundary value problem itself requires nu > 0 (see `is_problem_order`).
class BesselOrder {
public:
    explicit BesselOrder(double nu);

    double value() const noexcept { return nu_; }
    bool is_problem_order() const noexcept { return nu_ > 0.0; }

private:
    double nu_;
};

/// ln Gamma(x) for x > 0.
double log_gamma(double x);

/// Gamma(x) for x > 0.
double gamma_fn(double x);

/// J_nu(z), z >= 0.
///
/// Power series (evaluated in binary128) below the switch point, Hankel's
/// amplitude-phase asymptotic expansion above it. Absolute error is about
/// 1e-15 for z <= 200 and moderate orders.
double bessel_j(BesselOrder nu, double z);

/// dJ_nu/dz via J'_nu = (nu/z) J_nu - J_{nu+1}; at z = 0 the limit value.
double bessel_j_prime(BesselOrder nu, double z);

/// d^2 J_nu / dz^2 from Bessel's equation, z > 0.
double bessel_j_dd(BesselOrder nu, double z);

/// First `count` positive zeros of J_nu, strictly increasing.
class BesselZeroTable {
public:
    BesselZeroTable(BesselOrder nu, std::vector<double> zeros);

    BesselOrder order() const noexcept { return nu_; }
    std::size_t size() const noexcept { return zeros_.size(); }
    /// 1-based, as in gamma_k.
    double gamma(std::size_t k) const { return zeros_.at(k - 1); }
    std::span<const double> zeros() const noexcept { return zeros_; }

private:
    BesselOrder nu_;
    std::vector<double> zeros_;
};

/// Absolute tolerance on |J_nu(gamma_k)| for every tabulated zero.
inline constexpr double kBesselZeroTol = 1e-12;

/// McMahon-type first-order estimate (k + nu/2 - 1/4) pi.
double bessel_zero_asymptotic(BesselOrder nu, std::size_t k);

/// Seeds from the McMahon expansion, refines with safeguarded Newton inside
/// a bracket of width pi around the seed. Throws ConvergenceError naming k
/// when a bracket cannot be formed.
BesselZeroTable bessel_zeros(BesselOrder nu, std::size_t count);

namespace detail {
// Exposed for the branch-agreement tests.
double bessel_j_series(double nu, double z);
// Returns false when the expansion cannot reach double precision at z.
bool bessel_j_asymptotic(double nu, double z, double& out);
}  // namespace detail

}  // namespace fracbessel
