#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fracbessel {

/// One dissipative term lambda * d^order/dt^order of the time operator.
struct LowerOrderTerm {
    double lambda = 0.0;
    double order = 0.0;
};

inline constexpr std::size_t kMaxLowerOrderTerms = 4;

/// L(u) = D^alpha u - sum_i lambda_i D^{alpha_i} u with Caputo derivatives.
///
/// Invariants: 0 < alpha <= 2, 0 < alpha_i <= 1, alpha_i < alpha, and at most
/// kMaxLowerOrderTerms lower-order terms. alpha_i == alpha is rejected because
/// the corresponding Mittag-Leffler exponent alpha - alpha_i would vanish.
class TimeOperator {
public:
    explicit TimeOperator(double alpha, std::vector<LowerOrderTerm> terms = {});

    double alpha() const noexcept { return alpha_; }
    std::span<const LowerOrderTerm> terms() const noexcept { return terms_; }
    std::size_t size() const noexcept { return terms_.size(); }

    /// (alpha - alpha_1, ..., alpha - alpha_n, alpha)
    std::vector<double> ml_exponents() const;

    /// (lambda_1 t^{alpha-alpha_1}, ..., lambda_n t^{alpha-alpha_n}, -gamma_sq t^alpha)
    std::vector<double> ml_arguments(double gamma_sq, double t) const;

private:
    double alpha_;
    std::vector<LowerOrderTerm> terms_;
};

}  // namespace fracbessel
