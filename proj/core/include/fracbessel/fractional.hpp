#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "fracbessel/specfun.hpp"
#include "fracbessel/time_operator.hpp"

namespace fracbessel {

/// Uniform grid t_i = i * horizon / intervals, i = 0..intervals.
struct TimeGrid {
    double horizon = 1.0;
    std::size_t intervals = 1024;

    double step() const noexcept { return horizon / static_cast<double>(intervals); }
    double node(std::size_t i) const noexcept { return i == intervals ? horizon : static_cast<double>(i) * step(); }
};

/// Values of a function on the uniform grid t_i = i * T / N, i = 0..N.
class SampledFunction {
public:
    static constexpr std::size_t kMinIntervals = 8;

    /// `values` holds N + 1 samples; N >= kMinIntervals.
    SampledFunction(double horizon, std::vector<double> values);

    /// Samples `f` at the N + 1 nodes of [0, horizon].
    static SampledFunction sample(double horizon, std::size_t intervals, const std::function<double(double)>& f);
    static SampledFunction zeros(double horizon, std::size_t intervals);

    double horizon() const noexcept { return horizon_; }
    TimeGrid grid() const noexcept { return {horizon_, intervals()}; }
    double step() const noexcept { return step_; }
    std::size_t intervals() const noexcept { return values_.size() - 1; }
    double node(std::size_t i) const noexcept { return static_cast<double>(i) * step_; }

    std::span<const double> values() const noexcept { return values_; }
    std::vector<double>& mutable_values() noexcept { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }

    /// Four-point Lagrange interpolation; clamped to [0, horizon].
    double operator()(double t) const;

    double max_abs() const noexcept;

private:
    double horizon_;
    double step_;
    std::vector<double> values_;
};

/// Caputo derivative of order beta on the sample grid.
///
/// beta in (0,1): L1 scheme. beta == 1: central differences (second-order
/// one-sided at the ends). beta in (1,2): L1 scheme of order beta - 1 applied
/// to nodal first derivatives. beta == 2: second differences. beta == 0 is
/// the identity. The value at t = 0 is 0 for non-integer beta.
/// Throws DomainError for beta outside [0, 2], or beta > 1 with N < 16.
SampledFunction caputo(const SampledFunction& g, double beta);

/// L(g) = D^alpha g - sum_i lambda_i D^{alpha_i} g, nodewise.
SampledFunction apply_L(const TimeOperator& op, const SampledFunction& g);

/// Samples on the uniform grid x_i = x_min + i (1 - x_min) / (n - 1), i = 0..n-1.
struct RadialGrid {
    double x_min = 1e-3;
    std::size_t nodes = 512;

    static constexpr double kMinXMin = 1e-3;
    static constexpr std::size_t kMinNodes = 32;

    double step() const noexcept { return (1.0 - x_min) / static_cast<double>(nodes - 1); }
    double node(std::size_t i) const noexcept { return i + 1 == nodes ? 1.0 : x_min + static_cast<double>(i) * step(); }
};

/// B_nu(u) = u'' + u'/x - nu^2 u / x^2 by second-order differences
/// (one-sided at both ends). Throws DomainError when the grid is too coarse or
/// starts below RadialGrid::kMinXMin.
std::vector<double> apply_bessel(std::span<const double> values, const RadialGrid& grid, BesselOrder nu);

}  // namespace fracbessel
