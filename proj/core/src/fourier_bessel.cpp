#include "fracbessel/fourier_bessel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Core>

#include "fracbessel/compensated_sum.hpp"
#include "fracbessel/errors.hpp"
#include "fracbessel/quadrature.hpp"

namespace fracbessel {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

}  // namespace

XProfile XProfile::zero() {
    return XProfile(Kind::zero, [](double) { return 0.0; }, "zero");
}

XProfile XProfile::bessel_mode(BesselOrder nu, std::size_t m, double scale) {
    if (m == 0) throw DomainError("bessel_mode: mode index is 1-based");
    const double gamma = bessel_zeros(nu, m).gamma(m);
    XProfile p(Kind::bessel_mode, [nu, gamma, scale](double x) { return scale * bessel_j(nu, gamma * x); },
               fmt(scale) + "*J_" + fmt(nu.value()) + "(" + fmt(gamma) + " x)");
    p.mode_ = {nu.value(), m, scale};
    return p;
}

XProfile XProfile::polynomial(double p, double q, double scale) {
    if (!(p >= 0.0) || !(q >= 0.0) || !std::isfinite(p) || !std::isfinite(q) || !std::isfinite(scale)) {
        throw DomainError("polynomial profile: exponents must be finite and >= 0");
    }
    return XProfile(Kind::polynomial,
                    [p, q, scale](double x) { return scale * std::pow(x, p) * std::pow(1.0 - x, q); },
                    fmt(scale) + "*x^" + fmt(p) + "*(1-x)^" + fmt(q));
}

XProfile XProfile::compliant(BesselOrder nu, double scale) {
    return polynomial(nu.value() + 4.0, 3.0, scale);
}

XProfile XProfile::custom(std::function<double(double)> h, std::string name) {
    if (!h) throw DomainError("custom profile: empty function");
    return XProfile(Kind::custom, std::move(h), std::move(name));
}

TProfile TProfile::constant(double c) {
    return TProfile(Kind::constant, [c](double) { return c; }, fmt(c));
}

TProfile TProfile::polynomial(std::vector<double> coeffs) {
    std::string d = "poly(";
    for (std::size_t i = 0; i < coeffs.size(); ++i) d += (i ? "," : "") + fmt(coeffs[i]);
    d += ")";
    return TProfile(Kind::polynomial,
                    [c = std::move(coeffs)](double t) {
                        double acc = 0.0;
                        for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * t + *it;
                        return acc;
                    },
                    d);
}

TProfile TProfile::sine(double amplitude, double omega, double phase) {
    return TProfile(Kind::sine, [=](double t) { return amplitude * std::sin(omega * t + phase); },
                    fmt(amplitude) + "*sin(" + fmt(omega) + " t + " + fmt(phase) + ")");
}

TProfile TProfile::exponential(double amplitude, double rate) {
    return TProfile(Kind::exponential, [=](double t) { return amplitude * std::exp(-rate * t); },
                    fmt(amplitude) + "*exp(-" + fmt(rate) + " t)");
}

TProfile TProfile::custom(std::function<double(double)> g, std::string name) {
    if (!g) throw DomainError("custom time profile: empty function");
    return TProfile(Kind::custom, std::move(g), std::move(name));
}

TabulatedSource::TabulatedSource(std::vector<double> t_nodes, std::vector<double> x_nodes, std::vector<double> values)
    : t_(std::move(t_nodes)), x_(std::move(x_nodes)), v_(std::move(values)) {
    if (t_.size() < 2 || x_.size() < 2) {
        throw DomainError("tabulated source: need at least two nodes in t and in x");
    }
    if (v_.size() != t_.size() * x_.size()) {
        throw DomainError("tabulated source: value count does not match the grid");
    }
    auto increasing = [](const std::vector<double>& v) {
        return std::adjacent_find(v.begin(), v.end(), [](double a, double b) { return !(b > a); }) == v.end();
    };
    if (!increasing(t_) || !increasing(x_)) {
        throw DomainError("tabulated source: node coordinates must be strictly increasing");
    }
    for (double v : v_) {
        if (!std::isfinite(v)) throw DomainError("tabulated source: non-finite value");
    }
}

double TabulatedSource::operator()(double t, double x) const {
    auto locate = [](const std::vector<double>& nodes, double s, std::size_t& i, double& w) {
        s = std::clamp(s, nodes.front(), nodes.back());
        const auto it = std::upper_bound(nodes.begin(), nodes.end(), s);
        i = std::min<std::size_t>(static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - nodes.begin(), 1)) - 1,
                                  nodes.size() - 2);
        w = (s - nodes[i]) / (nodes[i + 1] - nodes[i]);
    };
    std::size_t i = 0;
    std::size_t j = 0;
    double wt = 0.0;
    double wx = 0.0;
    locate(t_, t, i, wt);
    locate(x_, x, j, wx);
    const std::size_t nx = x_.size();
    const double a = v_[i * nx + j] * (1.0 - wx) + v_[i * nx + j + 1] * wx;
    const double b = v_[(i + 1) * nx + j] * (1.0 - wx) + v_[(i + 1) * nx + j + 1] * wx;
    return a * (1.0 - wt) + b * wt;
}

ComplianceReport check_compliance(const std::function<double(double)>& h) {
    ComplianceReport r;
    // Vanishing order from |h(d)| / |h(d/2)| ~ 2^order; identically small
    // values count as vanishing to any order.
    auto order = [](auto&& at) {
        constexpr double kTiny = 1e-280;
        double worst = INFINITY;
        for (double d : {2e-2, 1e-2, 5e-3}) {
            const double a = std::abs(at(d));
            const double b = std::abs(at(0.5 * d));
            if (a < kTiny && b < kTiny) continue;
            if (b < kTiny) continue;
            worst = std::min(worst, std::log2(a / b));
        }
        return worst;
    };
    r.order_at_0 = order([&](double d) { return h(d); });
    r.order_at_1 = order([&](double d) { return h(1.0 - d); });

    constexpr double kStep = 1.0 / 256.0;
    double max_abs = 0.0;
    for (int i = 0; i + 4 <= 256; ++i) {
        const double x = i * kStep;
        const double d4 = (h(x) - 4.0 * h(x + kStep) + 6.0 * h(x + 2 * kStep) - 4.0 * h(x + 3 * kStep) + h(x + 4 * kStep)) /
                          std::pow(kStep, 4);
        if (!std::isfinite(d4)) {
            r.max_fourth_derivative = INFINITY;
            break;
        }
        r.max_fourth_derivative = std::max(r.max_fourth_derivative, std::abs(d4));
        max_abs = std::max(max_abs, std::abs(h(x)));
    }
    const bool bounded = std::isfinite(r.max_fourth_derivative);
    r.compliant = r.order_at_0 >= 3.5 && r.order_at_1 >= 2.5 && bounded;
    std::ostringstream os;
    os << "order at 0 = " << r.order_at_0 << " (need 4), order at 1 = " << r.order_at_1
       << " (need 3), max |h''''| ~ " << r.max_fourth_derivative;
    r.detail = os.str();
    return r;
}

SourceFunction SourceFunction::separable(TProfile g, XProfile h) {
    SourceFunction s;
    s.add(std::move(g), std::move(h));
    return s;
}

SourceFunction SourceFunction::tabulated(TabulatedSource table) {
    SourceFunction s;
    s.kind_ = Kind::tabulated;
    s.table_ = std::make_shared<const TabulatedSource>(std::move(table));
    return s;
}

SourceFunction& SourceFunction::add(TProfile g, XProfile h) {
    if (kind_ != Kind::builtin) throw DomainError("SourceFunction::add: tabulated sources cannot take terms");
    terms_.push_back(SeparableTerm{std::move(g), std::move(h)});
    compliant_ = false;
    return *this;
}

SourceFunction SourceFunction::combine(double a, const SourceFunction& other, double b) const {
    if (kind_ != Kind::builtin || other.kind_ != Kind::builtin) {
        throw DomainError("SourceFunction::combine: only builtin sources combine");
    }
    SourceFunction out;
    auto scaled = [](const TProfile& g, double c) {
        return TProfile::custom([g, c](double t) { return c * g(t); }, fmt(c) + "*" + g.description());
    };
    for (const auto& term : terms_) out.add(scaled(term.time, a), term.space);
    for (const auto& term : other.terms_) out.add(scaled(term.time, b), term.space);
    return out;
}

double SourceFunction::operator()(double t, double x) const {
    if (kind_ == Kind::tabulated) return (*table_)(t, x);
    CompensatedSum acc;
    for (const auto& term : terms_) acc.add(term.time(t) * term.space(x));
    return acc.value();
}

bool SourceFunction::is_zero() const noexcept {
    if (kind_ == Kind::tabulated) return false;
    return std::all_of(terms_.begin(), terms_.end(),
                       [](const SeparableTerm& s) { return s.space.kind() == XProfile::Kind::zero; });
}

void SourceFunction::mark_theorem_compliant() {
    if (kind_ == Kind::tabulated) {
        throw DomainError("theorem compliance can only be validated for builtin sources");
    }
    for (std::size_t i = 0; i < terms_.size(); ++i) {
        const ComplianceReport r = check_compliance([&](double x) { return terms_[i].space(x); });
        if (!r.compliant) {
            throw DomainError("source term " + std::to_string(i + 1) + " (" + terms_[i].space.description() +
                              ") is not theorem-compliant: " + r.detail);
        }
    }
    compliant_ = true;
}

std::size_t RadialQuadrature::panel_count(double gamma_max) {
    const double per_period = 8.0 * gamma_max / (2.0 * std::numbers::pi);
    return std::max<std::size_t>(32, static_cast<std::size_t>(std::ceil(per_period)));
}

RadialQuadrature::RadialQuadrature(double gamma_max) {
    if (!(gamma_max > 0.0) || !std::isfinite(gamma_max)) {
        throw DomainError("RadialQuadrature: gamma_max must be positive");
    }
    constexpr std::size_t kPoints = 8;
    constexpr int kDyadicLevels = 30;
    const QuadratureRule& gl = gauss_legendre(kPoints);
    panels_ = panel_count(gamma_max);
    const double w = 1.0 / static_cast<double>(panels_);
    auto add_panel = [&](double a, double b) {
        const double half = 0.5 * (b - a);
        for (std::size_t q = 0; q < kPoints; ++q) {
            nodes_.push_back(a + half * (gl.nodes[q] + 1.0));
            weights_.push_back(half * gl.weights[q]);
        }
    };
    // Profiles like x^p with non-integer p are not polynomial near 0; grade the first panel.
    double lo = w * std::ldexp(1.0, -kDyadicLevels);
    add_panel(0.0, lo);
    for (int j = kDyadicLevels; j > 0; --j) {
        const double hi = w * std::ldexp(1.0, 1 - j);
        add_panel(lo, hi);
        lo = hi;
    }
    for (std::size_t p = 1; p < panels_; ++p) {
        add_panel(static_cast<double>(p) * w, p + 1 == panels_ ? 1.0 : static_cast<double>(p + 1) * w);
    }
}

namespace {

double normalisation(BesselOrder nu, double gamma_k) {
    const double jn1 = bessel_j(BesselOrder(nu.value() + 1.0), gamma_k);
    if (!(std::abs(jn1) > 1e-8)) {
        throw DomainError("fb_coefficient: J_{nu+1}(gamma_k) vanishes at gamma_k = " + fmt(gamma_k) +
                          "; gamma_k is not a zero of J_nu");
    }
    return 2.0 / (jn1 * jn1);
}

}  // namespace

double fb_coefficient(const std::function<double(double)>& h, BesselOrder nu, double gamma_k,
                      const RadialQuadrature& quad) {
    if (!(gamma_k > 0.0)) throw DomainError("fb_coefficient: gamma_k must be positive");
    const double norm = normalisation(nu, gamma_k);
    CompensatedSum acc;
    const auto x = quad.nodes();
    const auto w = quad.weights();
    for (std::size_t q = 0; q < x.size(); ++q) {
        const double hv = h(x[q]);
        if (hv == 0.0) continue;
        acc.add(w[q] * x[q] * hv * bessel_j(nu, gamma_k * x[q]));
    }
    return norm * acc.value();
}

double fb_coefficient(const std::function<double(double)>& h, BesselOrder nu, double gamma_k) {
    return fb_coefficient(h, nu, gamma_k, RadialQuadrature(gamma_k));
}

ModeCoefficients fb_expand(const SourceFunction& f, BesselOrder nu, const BesselZeroTable& zeros, TimeGrid grid) {
    if (zeros.order().value() != nu.value()) {
        throw DomainError("fb_expand: zero table order does not match nu");
    }
    const std::size_t K = zeros.size();
    const std::size_t nt = grid.intervals + 1;
    ModeCoefficients out{nu, zeros, {}};
    out.coeffs.reserve(K);
    if (f.is_zero()) {
        for (std::size_t k = 0; k < K; ++k) out.coeffs.push_back(SampledFunction::zeros(grid.horizon, grid.intervals));
        return out;
    }

    const RadialQuadrature quad(zeros.gamma(K));
    const auto x = quad.nodes();
    const auto w = quad.weights();
    const auto nq = static_cast<Eigen::Index>(x.size());
    // Row k: quadrature weights times x J_nu(gamma_k x), normalised.
    Eigen::MatrixXd kernel(static_cast<Eigen::Index>(K), nq);
    for (std::size_t k = 0; k < K; ++k) {
        const double gk = zeros.gamma(k + 1);
        const double norm = normalisation(nu, gk);
        for (Eigen::Index q = 0; q < nq; ++q) {
            const auto qi = static_cast<std::size_t>(q);
            kernel(static_cast<Eigen::Index>(k), q) = norm * w[qi] * x[qi] * bessel_j(nu, gk * x[qi]);
        }
    }

    Eigen::MatrixXd values(static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(nt));
    if (f.kind() == SourceFunction::Kind::builtin) {
        values.setZero();
        for (const SeparableTerm& term : f.terms()) {
            if (term.space.kind() == XProfile::Kind::zero) continue;
            Eigen::VectorXd c;
            const XProfile::ModeInfo& mi = term.space.mode_info();
            if (mi.m != 0 && mi.nu == nu.value()) {
                // Orthogonality is exact here; quadrature would leave roundoff in every other mode.
                c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(K));
                if (mi.m <= K) c(static_cast<Eigen::Index>(mi.m - 1)) = mi.scale;
            } else {
                Eigen::VectorXd hq(nq);
                for (Eigen::Index q = 0; q < nq; ++q) hq(q) = term.space(x[static_cast<std::size_t>(q)]);
                c = kernel * hq;
            }
            Eigen::RowVectorXd g(static_cast<Eigen::Index>(nt));
            for (std::size_t j = 0; j < nt; ++j) g(static_cast<Eigen::Index>(j)) = term.time(grid.node(j));
            values.noalias() += c * g;
        }
    } else {
        Eigen::MatrixXd samples(nq, static_cast<Eigen::Index>(nt));
        for (std::size_t j = 0; j < nt; ++j) {
            const double t = grid.node(j);
            for (Eigen::Index q = 0; q < nq; ++q) {
                samples(q, static_cast<Eigen::Index>(j)) = f(t, x[static_cast<std::size_t>(q)]);
            }
        }
        values.noalias() = kernel * samples;
    }
    for (std::size_t k = 0; k < K; ++k) {
        std::vector<double> v(nt);
        for (std::size_t j = 0; j < nt; ++j) v[j] = values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j));
        out.coeffs.emplace_back(grid.horizon, std::move(v));
    }
    return out;
}

double fb_reconstruct(std::span<const double> coeffs, BesselOrder nu, const BesselZeroTable& zeros, double x) {
    if (!(x >= kMinReconstructX && x <= 1.0)) {
        throw DomainError("fb_reconstruct: x must lie in [1e-6, 1], got " + fmt(x));
    }
    if (coeffs.size() > zeros.size()) {
        throw DomainError("fb_reconstruct: more coefficients than tabulated zeros");
    }
    CompensatedSum acc;
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
        if (coeffs[k] == 0.0) continue;
        acc.add(coeffs[k] * bessel_j(nu, zeros.gamma(k + 1) * x));
    }
    return acc.value();
}

}  // namespace fracbessel
