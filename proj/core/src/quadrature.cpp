#include "fracbessel/quadrature.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <tuple>

#include <Eigen/Eigenvalues>

#include "fracbessel/errors.hpp"
#include "fracbessel/specfun.hpp"

namespace fracbessel {

namespace {

QuadratureRule build_jacobi(std::size_t n, double a, double b) {
    // Golub-Welsch: eigen-decomposition of the symmetric Jacobi matrix of the
    // monic recurrence.
    Eigen::VectorXd diag(static_cast<Eigen::Index>(n));
    Eigen::VectorXd off(static_cast<Eigen::Index>(n > 0 ? n - 1 : 0));
    const double ab = a + b;
    for (std::size_t i = 0; i < n; ++i) {
        const double k = static_cast<double>(i);
        if (i == 0) {
            diag(0) = (b - a) / (ab + 2.0);
        } else {
            diag(static_cast<Eigen::Index>(i)) = (b * b - a * a) / ((2.0 * k + ab) * (2.0 * k + ab + 2.0));
        }
    }
    for (std::size_t i = 1; i < n; ++i) {
        const double k = static_cast<double>(i);
        double beta2;
        if (i == 1) {
            beta2 = 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab) * (2.0 + ab) * (3.0 + ab));
        } else {
            const double s = 2.0 * k + ab;
            beta2 = 4.0 * k * (k + a) * (k + b) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0));
        }
        off(static_cast<Eigen::Index>(i - 1)) = std::sqrt(beta2);
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, off, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) {
        throw ConvergenceError("gauss_jacobi: eigen-decomposition failed for n=" + std::to_string(n));
    }
    const double log_mu0 = (ab + 1.0) * std::log(2.0) + log_gamma(a + 1.0) + log_gamma(b + 1.0) - log_gamma(ab + 2.0);
    const double mu0 = std::exp(log_mu0);

    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto idx = static_cast<Eigen::Index>(i);
        rule.nodes[i] = solver.eigenvalues()(idx);
        const double v0 = solver.eigenvectors()(0, idx);
        rule.weights[i] = mu0 * v0 * v0;
    }
    return rule;
}

}  // namespace

const QuadratureRule& gauss_jacobi(std::size_t n, double a, double b) {
    if (n == 0) {
        throw DomainError("gauss_jacobi: rule size must be >= 1");
    }
    if (!(a > -1.0) || !(b > -1.0)) {
        throw DomainError("gauss_jacobi: exponents must exceed -1");
    }
    static std::mutex mutex;
    static std::map<std::tuple<std::size_t, double, double>, std::unique_ptr<QuadratureRule>> cache;

    const std::lock_guard lock(mutex);
    auto& slot = cache[{n, a, b}];
    if (!slot) {
        slot = std::make_unique<QuadratureRule>(build_jacobi(n, a, b));
    }
    return *slot;
}

const QuadratureRule& gauss_legendre(std::size_t n) { return gauss_jacobi(n, 0.0, 0.0); }

}  // namespace fracbessel
