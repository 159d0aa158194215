#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fracbessel/errors.hpp"
#include "fracbessel/fourier_bessel.hpp"
#include "fracbessel/specfun.hpp"
#include "oracles.hpp"

using namespace fracbessel;
using std::numbers::pi;

namespace {

// Same coefficient by adaptive quadrature with Boost's Bessel function.
double reference_coefficient(const std::function<double(double)>& h, double nu, double gamma) {
    const double norm = oracle::bessel_j(nu + 1.0, gamma);
    const double integral =
        oracle::integrate([&](double x) { return h(x) * x * oracle::bessel_j(nu, gamma * x); }, 0.0, 1.0, 1e-14);
    return 2.0 * integral / (norm * norm);
}

}  // namespace

TEST_CASE("profiles evaluate to their definitions") {
    const BesselOrder nu(1.0);
    CHECK(XProfile::zero()(0.3) == 0.0);
    const double g2 = bessel_zeros(nu, 2).gamma(2);
    CHECK(XProfile::bessel_mode(nu, 2, 3.0)(0.4) == doctest::Approx(3.0 * bessel_j(nu, g2 * 0.4)));
    CHECK(XProfile::polynomial(2.0, 1.0, 2.0)(0.5) == doctest::Approx(0.25));
    CHECK(XProfile::compliant(nu)(0.5) == doctest::Approx(std::pow(0.5, 5.0) * 0.125));
    CHECK(TProfile::constant(2.0)(7.0) == 2.0);
    CHECK(TProfile::polynomial({1.0, -2.0, 3.0})(2.0) == doctest::Approx(9.0));
    CHECK(TProfile::sine(2.0, 3.0, 0.5)(1.0) == doctest::Approx(2.0 * std::sin(3.5)));
    CHECK(TProfile::exponential(2.0, 0.5)(2.0) == doctest::Approx(2.0 * std::exp(-1.0)));
    CHECK_THROWS_AS(XProfile::bessel_mode(nu, 0), DomainError);
    CHECK_THROWS_AS(XProfile::polynomial(-1.0, 1.0), DomainError);
}

TEST_CASE("sources combine separable terms") {
    SourceFunction f = SourceFunction::separable(TProfile::constant(2.0), XProfile::polynomial(1.0, 0.0));
    f.add(TProfile::polynomial({0.0, 1.0}), XProfile::polynomial(0.0, 1.0));
    CHECK(f(3.0, 0.25) == doctest::Approx(2.0 * 0.25 + 3.0 * 0.75));
    const SourceFunction g = f.combine(2.0, f, -1.0);
    CHECK(g(3.0, 0.25) == doctest::Approx(f(3.0, 0.25)));
    CHECK(SourceFunction().is_zero());
    CHECK(SourceFunction()(0.2, 0.3) == 0.0);
    CHECK_FALSE(f.is_zero());
}

TEST_CASE("tabulated sources interpolate bilinearly and clamp") {
    const TabulatedSource table({0.0, 1.0}, {0.0, 0.5, 1.0}, {0.0, 1.0, 2.0, 10.0, 11.0, 12.0});
    const SourceFunction f = SourceFunction::tabulated(table);
    CHECK(f(0.5, 0.25) == doctest::Approx(5.5));
    CHECK(f(2.0, 1.0) == doctest::Approx(12.0));
    CHECK(f(-1.0, -1.0) == doctest::Approx(0.0));
    CHECK_THROWS_AS(TabulatedSource({0.0, 0.0}, {0.0, 1.0}, {0, 0, 0, 0}), DomainError);
    CHECK_THROWS_AS(TabulatedSource({0.0, 1.0}, {0.0, 1.0}, {0, 0, 0}), DomainError);
}

TEST_CASE("compliance detects vanishing order at both ends") {
    const ComplianceReport good = check_compliance(XProfile::compliant(BesselOrder(1.0)));
    CHECK(good.compliant);
    CHECK(good.order_at_0 >= 4.0 - 0.1);
    CHECK(good.order_at_1 >= 3.0 - 0.1);
    const ComplianceReport bad = check_compliance([](double x) { return x * x * (1.0 - x); });
    CHECK_FALSE(bad.compliant);
    CHECK_FALSE(bad.detail.empty());
    SourceFunction f = SourceFunction::separable(TProfile::constant(1.0), XProfile::polynomial(1.0, 1.0));
    CHECK_THROWS_AS(f.mark_theorem_compliant(), DomainError);
    SourceFunction g = SourceFunction::separable(TProfile::constant(1.0), XProfile::compliant(BesselOrder(0.5)));
    g.mark_theorem_compliant();
    CHECK(g.theorem_compliant());
}

TEST_CASE("coefficient of a single Bessel mode is a Kronecker delta") {
    for (double nu : {0.0, 1.0, 2.5}) {
        const BesselOrder order(nu);
        const BesselZeroTable z = bessel_zeros(order, 12);
        const XProfile h = XProfile::bessel_mode(order, 4);
        for (std::size_t k = 1; k <= 12; ++k) {
            INFO("nu = " << nu << ", k = " << k);
            CHECK(std::abs(fb_coefficient(h, order, z.gamma(k)) - (k == 4 ? 1.0 : 0.0)) < 1e-12);
        }
    }
}

TEST_CASE("coefficient of sin(pi x)/sqrt(x) in the order-1/2 basis") {
    const BesselOrder half(0.5);
    const BesselZeroTable z = bessel_zeros(half, 5);
    auto h = [](double x) { return std::sin(pi * x) / std::sqrt(x); };
    // J_1/2(k pi x) = sqrt(2/(k pi^2 x)) sin(k pi x), so only k = 1 survives.
    CHECK(std::abs(fb_coefficient(h, half, z.gamma(1)) - pi / std::sqrt(2.0)) < 1e-10);
    for (std::size_t k = 2; k <= 5; ++k) CHECK(std::abs(fb_coefficient(h, half, z.gamma(k))) < 1e-10);
}

TEST_CASE("coefficients agree with adaptive quadrature") {
    for (double nu : {0.0, 0.7, 2.0}) {
        const BesselOrder order(nu);
        const BesselZeroTable z = bessel_zeros(order, 64);
        const XProfile h = XProfile::polynomial(1.5, 2.0);
        for (std::size_t k : {1u, 7u, 30u, 64u}) {
            INFO("nu = " << nu << ", k = " << k);
            CHECK(std::abs(fb_coefficient(h, order, z.gamma(k)) - reference_coefficient(h, nu, z.gamma(k))) < 1e-10);
        }
    }
}

TEST_CASE("quadrature resolves the largest zero") {
    CHECK(RadialQuadrature::panel_count(1.0) >= 32);
    CHECK(RadialQuadrature::panel_count(200.0) >= static_cast<std::size_t>(8.0 * 200.0 / (2.0 * pi)));
    const RadialQuadrature q(50.0);
    double sum = 0.0;
    for (double w : q.weights()) sum += w;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
    for (double x : q.nodes()) CHECK((x > 0.0 && x <= 1.0));
}

TEST_CASE("expansion reconstructs a compliant profile") {
    const BesselOrder nu(1.0);
    const BesselZeroTable z = bessel_zeros(nu, 64);
    const XProfile h = XProfile::compliant(nu);
    const SourceFunction f = SourceFunction::separable(TProfile::polynomial({0.0, 1.0}), h);
    const ModeCoefficients mc = fb_expand(f, nu, z, TimeGrid{1.0, 16});
    REQUIRE(mc.coeffs.size() == 64);
    std::vector<double> at_t(64);
    for (std::size_t k = 0; k < 64; ++k) at_t[k] = mc.coeffs[k][8];
    double worst = 0.0;
    for (double x = 0.01; x <= 1.0; x += 0.01) worst = std::max(worst, std::abs(fb_reconstruct(at_t, nu, z, x) - 0.5 * h(x)));
    CHECK(worst < 1e-6);
    // Smooth compliant data gives rapidly decaying coefficients.
    CHECK(std::abs(at_t[63]) < 1e-5 * std::abs(at_t[0]));
}

TEST_CASE("expansion of a tabulated source matches the separable one it samples") {
    const BesselOrder nu(0.0);
    const BesselZeroTable z = bessel_zeros(nu, 8);
    const SourceFunction f = SourceFunction::separable(TProfile::constant(1.0), XProfile::polynomial(2.0, 1.0));
    std::vector<double> ts{0.0, 1.0};
    std::vector<double> xs;
    std::vector<double> vals;
    for (int i = 0; i <= 4000; ++i) xs.push_back(i / 4000.0);
    for (double t : ts) for (double x : xs) vals.push_back(f(t, x));
    const SourceFunction tab = SourceFunction::tabulated(TabulatedSource(ts, xs, vals));
    const ModeCoefficients a = fb_expand(f, nu, z, TimeGrid{1.0, 8});
    const ModeCoefficients b = fb_expand(tab, nu, z, TimeGrid{1.0, 8});
    for (std::size_t k = 0; k < 8; ++k) CHECK(std::abs(a.coeffs[k][3] - b.coeffs[k][3]) < 1e-6);
}

TEST_CASE("reconstruction rejects points near the axis") {
    const BesselZeroTable z = bessel_zeros(BesselOrder(1.0), 4);
    const std::vector<double> c{1.0, 0.0, 0.0, 0.0};
    CHECK_THROWS_AS(fb_reconstruct(c, BesselOrder(1.0), z, 1e-7), DomainError);
    CHECK_THROWS_AS(fb_reconstruct(c, BesselOrder(1.0), z, 1.5), DomainError);
    CHECK(fb_reconstruct(c, BesselOrder(1.0), z, 1.0) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("first Bessel mode and the zero profile") {
    const BesselOrder nu(2.0);
    const BesselZeroTable z = bessel_zeros(nu, 6);
    const XProfile h = XProfile::bessel_mode(nu, 1);
    CHECK(std::abs(fb_coefficient(h, nu, z.gamma(1)) - 1.0) < 1e-12);
    for (std::size_t k = 2; k <= 6; ++k) CHECK(std::abs(fb_coefficient(h, nu, z.gamma(k))) <= 1e-9);
    for (std::size_t k = 1; k <= 6; ++k) CHECK(fb_coefficient(XProfile::zero(), nu, z.gamma(k)) == 0.0);
}

TEST_CASE("separable single-mode source expands to one mode carrying g(t)") {
    const BesselOrder nu(1.0);
    const BesselZeroTable z = bessel_zeros(nu, 6);
    const TProfile g = TProfile::sine(1.5, 2.0);
    const ModeCoefficients mc = fb_expand(SourceFunction::separable(g, XProfile::bessel_mode(nu, 2)), nu, z, {1.0, 32});
    for (std::size_t k = 0; k < 6; ++k) {
        for (std::size_t j = 0; j <= 32; ++j) {
            const double expected = k == 1 ? g(mc.coeffs[k].node(j)) : 0.0;
            CHECK(std::abs(mc.coeffs[k][j] - expected) < 1e-11);
        }
    }
    const ModeCoefficients zero = fb_expand(SourceFunction(), nu, z, {1.0, 32});
    for (const auto& c : zero.coeffs) CHECK(c.max_abs() == 0.0);
}

TEST_CASE("compliant coefficients decay at least like gamma^-3.5") {
    const BesselOrder nu(1.0);
    const BesselZeroTable z = bessel_zeros(nu, 48);
    const XProfile h = XProfile::compliant(nu);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    double n = 0;
    for (std::size_t k = 5; k <= 48; ++k) {
        const double lx = std::log(z.gamma(k));
        const double ly = std::log(std::abs(fb_coefficient(h, nu, z.gamma(k))));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        n += 1;
    }
    CHECK((n * sxy - sx * sy) / (n * sxx - sx * sx) <= -3.5);
}

TEST_CASE("reconstruction of a single coefficient is the first mode") {
    const BesselOrder nu(0.5);
    const BesselZeroTable z = bessel_zeros(nu, 5);
    const std::vector<double> c{1.0, 0.0, 0.0, 0.0, 0.0};
    for (double x : {0.1, 0.4, 0.77}) CHECK(std::abs(fb_reconstruct(c, nu, z, x) - bessel_j(nu, z.gamma(1) * x)) < 1e-15);
}

TEST_CASE("round-trip error shrinks as modes are added") {
    const BesselOrder nu(1.0);
    const BesselZeroTable z = bessel_zeros(nu, 64);
    const XProfile h = XProfile::polynomial(2.0, 1.0);
    std::vector<double> c(64);
    for (std::size_t k = 1; k <= 64; ++k) c[k - 1] = fb_coefficient(h, nu, z.gamma(k));
    double prev = INFINITY;
    for (std::size_t K : {8u, 16u, 32u, 64u}) {
        const std::vector<double> head(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(K));
        const BesselZeroTable zk = bessel_zeros(nu, K);
        double e = 0.0;
        for (double x = 0.05; x <= 0.95; x += 0.01) e = std::max(e, std::abs(fb_reconstruct(head, nu, zk, x) - h(x)));
        INFO("K = " << K << ", error " << e);
        CHECK(e < prev);
        prev = e;
    }
}

TEST_CASE("partial sums of decaying coefficients form a Cauchy sequence") {
    // c_k = gamma_k^{-1.5}: sup |S_2K - S_K| on [0, 1] should shrink like K^{-1/2}.
    const BesselOrder nu(0.5);
    const BesselZeroTable z = bessel_zeros(nu, 128);
    std::vector<double> c(128);
    for (std::size_t k = 1; k <= 128; ++k) c[k - 1] = std::pow(z.gamma(k), -1.5);
    auto sup_diff = [&](std::size_t K) {
        double e = 0.0;
        for (double x = 1e-3; x <= 1.0; x += 1e-3) {
            double d = 0.0;
            for (std::size_t k = K; k < 2 * K; ++k) d += c[k] * bessel_j(nu, z.gamma(k + 1) * x);
            e = std::max(e, std::abs(d));
        }
        return e;
    };
    const double d16 = sup_diff(16);
    const double d32 = sup_diff(32);
    const double d64 = sup_diff(64);
    CHECK(d32 < d16);
    CHECK(d64 < d32);
    CHECK(d64 <= 2.0 * d16 * std::sqrt(16.0 / 64.0));
}
