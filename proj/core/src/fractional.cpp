#include "fracbessel/fractional.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fracbessel/errors.hpp"

namespace fracbessel {

SampledFunction::SampledFunction(double horizon, std::vector<double> values)
    : horizon_(horizon), step_(0.0), values_(std::move(values)) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw DomainError("SampledFunction: horizon must be positive and finite");
    }
    if (values_.size() < kMinIntervals + 1) {
        throw DomainError("SampledFunction: need at least " + std::to_string(kMinIntervals) + " intervals");
    }
    step_ = horizon_ / static_cast<double>(values_.size() - 1);
}

SampledFunction SampledFunction::sample(double horizon, std::size_t intervals, const std::function<double(double)>& f) {
    std::vector<double> v(intervals + 1);
    const double h = horizon / static_cast<double>(intervals);
    for (std::size_t i = 0; i <= intervals; ++i) {
        v[i] = f(i == intervals ? horizon : static_cast<double>(i) * h);
    }
    return SampledFunction(horizon, std::move(v));
}

SampledFunction SampledFunction::zeros(double horizon, std::size_t intervals) {
    return SampledFunction(horizon, std::vector<double>(intervals + 1, 0.0));
}

double SampledFunction::operator()(double t) const {
    const std::size_t n = intervals();
    const double s = std::clamp(t, 0.0, horizon_) / step_;
    const auto cell = std::min(static_cast<std::size_t>(s), n - 1);
    const std::size_t first = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(cell) - 1, 0,
                                                         static_cast<std::ptrdiff_t>(n) - 3);
    double out = 0.0;
    for (std::size_t c = 0; c < 4; ++c) {
        double basis = 1.0;
        for (std::size_t d = 0; d < 4; ++d) {
            if (d == c) continue;
            basis *= (s - static_cast<double>(first + d)) / (static_cast<double>(c) - static_cast<double>(d));
        }
        out += basis * values_[first + c];
    }
    return out;
}

double SampledFunction::max_abs() const noexcept {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

namespace {

// L1 approximation of the Caputo derivative of order beta in (0,1) for data
// known at uniform nodes, using piecewise-linear interpolation.
std::vector<double> l1_scheme(std::span<const double> g, double h, double beta) {
    const std::size_t n = g.size() - 1;
    std::vector<double> b(n);
    for (std::size_t j = 0; j < n; ++j) {
        const auto jd = static_cast<double>(j);
        b[j] = std::pow(jd + 1.0, 1.0 - beta) - std::pow(jd, 1.0 - beta);
    }
    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = g[i + 1] - g[i];
    const double scale = std::pow(h, -beta) / std::tgamma(2.0 - beta);
    std::vector<double> out(n + 1, 0.0);
    for (std::size_t m = 1; m <= n; ++m) {
        double acc = 0.0;
        for (std::size_t j = 0; j < m; ++j) acc += b[j] * diff[m - 1 - j];
        out[m] = scale * acc;
    }
    return out;
}

std::vector<double> first_derivative(std::span<const double> g, double h) {
    const std::size_t n = g.size() - 1;
    std::vector<double> d(n + 1);
    d[0] = (-3.0 * g[0] + 4.0 * g[1] - g[2]) / (2.0 * h);
    for (std::size_t i = 1; i < n; ++i) d[i] = (g[i + 1] - g[i - 1]) / (2.0 * h);
    d[n] = (3.0 * g[n] - 4.0 * g[n - 1] + g[n - 2]) / (2.0 * h);
    return d;
}

std::vector<double> second_derivative(std::span<const double> g, double h) {
    const std::size_t n = g.size() - 1;
    const double h2 = h * h;
    std::vector<double> d(n + 1);
    d[0] = (2.0 * g[0] - 5.0 * g[1] + 4.0 * g[2] - g[3]) / h2;
    for (std::size_t i = 1; i < n; ++i) d[i] = (g[i + 1] - 2.0 * g[i] + g[i - 1]) / h2;
    d[n] = (2.0 * g[n] - 5.0 * g[n - 1] + 4.0 * g[n - 2] - g[n - 3]) / h2;
    return d;
}

}  // namespace

SampledFunction caputo(const SampledFunction& g, double beta) {
    if (!(beta >= 0.0 && beta <= 2.0)) {
        throw DomainError("caputo: order must lie in (0, 2], got " + std::to_string(beta));
    }
    if (beta > 1.0 && g.intervals() < 16) {
        throw DomainError("caputo: orders above 1 need at least 16 intervals");
    }
    const double h = g.step();
    if (beta == 0.0) return g;
    if (beta == 1.0) return SampledFunction(g.horizon(), first_derivative(g.values(), h));
    if (beta == 2.0) return SampledFunction(g.horizon(), second_derivative(g.values(), h));
    if (beta < 1.0) return SampledFunction(g.horizon(), l1_scheme(g.values(), h, beta));
    const std::vector<double> d = first_derivative(g.values(), h);
    return SampledFunction(g.horizon(), l1_scheme(d, h, beta - 1.0));
}

SampledFunction apply_L(const TimeOperator& op, const SampledFunction& g) {
    SampledFunction out = caputo(g, op.alpha());
    auto& v = out.mutable_values();
    for (const LowerOrderTerm& term : op.terms()) {
        const SampledFunction d = caputo(g, term.order);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= term.lambda * d[i];
    }
    return out;
}

std::vector<double> apply_bessel(std::span<const double> values, const RadialGrid& grid, BesselOrder nu) {
    if (grid.nodes < RadialGrid::kMinNodes) {
        throw DomainError("apply_bessel: need at least " + std::to_string(RadialGrid::kMinNodes) + " nodes");
    }
    if (!(grid.x_min >= RadialGrid::kMinXMin && grid.x_min < 1.0)) {
        throw DomainError("apply_bessel: x_min must lie in [1e-3, 1)");
    }
    if (values.size() != grid.nodes) {
        throw DomainError("apply_bessel: sample count does not match the grid");
    }
    const double h = grid.step();
    const std::vector<double> d1 = first_derivative(values, h);
    const std::vector<double> d2 = second_derivative(values, h);
    const double nu2 = nu.value() * nu.value();
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double x = grid.node(i);
        out[i] = d2[i] + d1[i] / x - nu2 * values[i] / (x * x);
    }
    return out;
}

}  // namespace fracbessel
