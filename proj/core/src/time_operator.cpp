#include "fracbessel/time_operator.hpp"

#include <cmath>
#include <string>

#include "fracbessel/errors.hpp"

namespace fracbessel {

TimeOperator::TimeOperator(double alpha, std::vector<LowerOrderTerm> terms)
    : alpha_(alpha), terms_(std::move(terms)) {
    if (!(alpha > 0.0 && alpha <= 2.0)) {
        throw DomainError("TimeOperator: alpha must lie in (0, 2], got " + std::to_string(alpha));
    }
    if (terms_.size() > kMaxLowerOrderTerms) {
        throw DomainError("TimeOperator: at most " + std::to_string(kMaxLowerOrderTerms) +
                          " lower-order terms are supported, got " + std::to_string(terms_.size()));
    }
    for (const auto& term : terms_) {
        if (!std::isfinite(term.lambda)) {
            throw DomainError("TimeOperator: lambda must be finite");
        }
        if (!(term.order > 0.0 && term.order <= 1.0)) {
            throw DomainError("TimeOperator: lower orders must lie in (0, 1], got " + std::to_string(term.order));
        }
        if (!(term.order < alpha)) {
            throw DomainError("TimeOperator: lower order " + std::to_string(term.order) +
                              " must be strictly below alpha = " + std::to_string(alpha));
        }
    }
}

std::vector<double> TimeOperator::ml_exponents() const {
    std::vector<double> out;
    out.reserve(terms_.size() + 1);
    for (const auto& term : terms_) out.push_back(alpha_ - term.order);
    out.push_back(alpha_);
    return out;
}

std::vector<double> TimeOperator::ml_arguments(double gamma_sq, double t) const {
    std::vector<double> out;
    out.reserve(terms_.size() + 1);
    for (const auto& term : terms_) out.push_back(term.lambda * std::pow(t, alpha_ - term.order));
    out.push_back(-gamma_sq * std::pow(t, alpha_));
    return out;
}

}  // namespace fracbessel
