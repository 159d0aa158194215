#include "fracbessel/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "fracbessel/errors.hpp"

namespace fracbessel {

namespace {

constexpr double kPi = std::numbers::pi;

// Below this argument the asymptotic expansion is never attempted.
constexpr double kAsymptoticMinArg = 30.0;

}  // namespace

BesselOrder::BesselOrder(double nu) : nu_(nu) {
    if (!(nu >= 0.0) || !std::isfinite(nu)) {
        throw DomainError("Bessel order must be finite and >= 0, got " + std::to_string(nu));
    }
}

double log_gamma(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw DomainError("log_gamma: argument must be positive and finite, got " + std::to_string(x));
    }
    return boost::math::lgamma(x);
}

double gamma_fn(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw DomainError("gamma_fn: argument must be positive and finite, got " + std::to_string(x));
    }
    return boost::math::tgamma(x);
}

namespace detail {

double bessel_j_series(double nu, double z) {
    if (z == 0.0) {
        return nu == 0.0 ? 1.0 : 0.0;
    }
    // J_nu(z) = (z/2)^nu / Gamma(nu+1) * sum_i (-(z/2)^2)^i / (i! (nu+1)_i).
    // The sum cancels heavily for z of a few tens; binary128 keeps ~1e-34 per term.
    using quad = __float128;
    const double lead = nu == 0.0 ? 1.0 : std::exp(nu * std::log(0.5 * z) - boost::math::lgamma(nu + 1.0));
    const quad q = -static_cast<quad>(z) * static_cast<quad>(z) / 4;
    const quad qnu = nu;
    quad term = 1;
    quad sum = 1;
    const double half = 0.5 * z;
    for (int i = 1; i < 2000; ++i) {
        term *= q / (static_cast<quad>(i) * (static_cast<quad>(i) + qnu));
        sum += term;
        const quad abs_term = term < 0 ? -term : term;
        if (i > half && abs_term < static_cast<quad>(1e-36)) {
            break;
        }
    }
    return lead * static_cast<double>(sum);
}

bool bessel_j_asymptotic(double nu, double z, double& out) {
    if (z < kAsymptoticMinArg) {
        return false;
    }
    const double mu = 4.0 * nu * nu;
    double p = 1.0;
    double q = 0.0;
    double term = 1.0;
    double prev_abs = 1.0;
    bool converged = false;
    for (int k = 1; k < 200; ++k) {
        const double odd = 2.0 * k - 1.0;
        term *= (mu - odd * odd) / (8.0 * k * z);
        const double abs_term = std::abs(term);
        if (abs_term > prev_abs && k > 2) {
            // Divergent tail: accept only if the smallest term was negligible.
            converged = prev_abs < 1e-16;
            break;
        }
        switch (k % 4) {
            case 0: p += term; break;
            case 1: q += term; break;
            case 2: p -= term; break;
            case 3: q -= term; break;
        }
        if (abs_term < 1e-17) {
            converged = true;
            break;
        }
        prev_abs = abs_term;
    }
    if (!converged) {
        return false;
    }
    const double omega = z - (0.5 * nu + 0.25) * kPi;
    out = std::sqrt(2.0 / (kPi * z)) * (p * std::cos(omega) - q * std::sin(omega));
    return true;
}

}  // namespace detail

double bessel_j(BesselOrder nu, double z) {
    if (!(z >= 0.0) || !std::isfinite(z)) {
        throw DomainError("bessel_j: argument must be finite and >= 0, got " + std::to_string(z));
    }
    double value = 0.0;
    if (detail::bessel_j_asymptotic(nu.value(), z, value)) {
        return value;
    }
    return detail::bessel_j_series(nu.value(), z);
}

double bessel_j_prime(BesselOrder nu, double z) {
    if (!(z >= 0.0) || !std::isfinite(z)) {
        throw DomainError("bessel_j_prime: argument must be finite and >= 0, got " + std::to_string(z));
    }
    const double v = nu.value();
    if (z == 0.0) {
        if (v == 0.0 || v > 1.0) return 0.0;
        if (v == 1.0) return 0.5;
        return std::numeric_limits<double>::infinity();
    }
    return v / z * bessel_j(nu, z) - bessel_j(BesselOrder(v + 1.0), z);
}

double bessel_j_dd(BesselOrder nu, double z) {
    if (!(z > 0.0) || !std::isfinite(z)) {
        throw DomainError("bessel_j_dd: argument must be finite and > 0, got " + std::to_string(z));
    }
    const double v = nu.value();
    const double j = bessel_j(nu, z);
    const double jp = v / z * j - bessel_j(BesselOrder(v + 1.0), z);
    return -jp / z - (1.0 - v * v / (z * z)) * j;
}

BesselZeroTable::BesselZeroTable(BesselOrder nu, std::vector<double> zeros)
    : nu_(nu), zeros_(std::move(zeros)) {
    for (std::size_t i = 1; i < zeros_.size(); ++i) {
        if (!(zeros_[i] > zeros_[i - 1])) {
            throw DomainError("BesselZeroTable: zeros must be strictly increasing");
        }
    }
}

double bessel_zero_asymptotic(BesselOrder nu, std::size_t k) {
    return (static_cast<double>(k) + 0.5 * nu.value() - 0.25) * kPi;
}

BesselZeroTable bessel_zeros(BesselOrder nu, std::size_t count) {
    if (count == 0) {
        throw DomainError("bessel_zeros: count must be >= 1");
    }
    const double v = nu.value();
    const double mu = 4.0 * v * v;
    const BesselOrder next(v + 1.0);
    auto f = [&](double x) { return bessel_j(nu, x); };
    auto fprime = [&](double x) { return v / x * bessel_j(nu, x) - bessel_j(next, x); };

    std::vector<double> zeros;
    zeros.reserve(count);
    for (std::size_t k = 1; k <= count; ++k) {
        const double beta = bessel_zero_asymptotic(nu, k);
        const double seed = beta - (mu - 1.0) / (8.0 * beta);
        double lo = seed - 0.5 * kPi;
        double hi = seed + 0.5 * kPi;
        if (!zeros.empty()) lo = std::max(lo, zeros.back() + 1e-3);
        lo = std::max(lo, 1e-6);
        double flo = f(lo);
        double fhi = f(hi);
        if (flo == 0.0) { hi = lo; fhi = 0.0; }
        if (!(std::signbit(flo) != std::signbit(fhi) || fhi == 0.0)) {
            throw ConvergenceError("bessel_zeros: could not bracket zero k=" + std::to_string(k) +
                                   " of J_" + std::to_string(v) + " near " + std::to_string(seed));
        }
        double x = std::clamp(seed, lo, hi);
        if (fhi == 0.0) {
            x = hi;
        } else {
            for (int it = 0; it < 100; ++it) {
                const double fx = f(x);
                if (fx == 0.0) break;
                if (std::signbit(fx) == std::signbit(flo)) { lo = x; flo = fx; } else { hi = x; }
                double next_x = x - fx / fprime(x);
                if (!(next_x > lo && next_x < hi)) next_x = 0.5 * (lo + hi);
                const double step = std::abs(next_x - x);
                x = next_x;
                if (step <= 4.0 * std::numeric_limits<double>::epsilon() * x || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * x) {
                    break;
                }
            }
        }
        if (std::abs(f(x)) > kBesselZeroTol) {
            throw ConvergenceError("bessel_zeros: zero k=" + std::to_string(k) +
                                   " did not reach |J| <= 1e-12 (evaluation accuracy breakdown)");
        }
        if (!zeros.empty() && !(x > zeros.back() + 1.0)) {
            throw ConvergenceError("bessel_zeros: zero k=" + std::to_string(k) + " duplicates or precedes zero k-1");
        }
        zeros.push_back(x);
    }
    return BesselZeroTable(nu, std::move(zeros));
}

}  // namespace fracbessel
