#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracbessel {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A series or iteration did not reach its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, int layers_used = 0, double last_magnitude = 0.0)
        : std::runtime_error(what), layers_used_(layers_used), last_magnitude_(last_magnitude) {}

    int layers_used() const noexcept { return layers_used_; }
    double last_magnitude() const noexcept { return last_magnitude_; }

private:
    int layers_used_;
    double last_magnitude_;
};

struct ResonantMode {
    std::size_t k = 0;          // 1-based mode index
    double u0_at_T = 0.0;
    double margin = 0.0;
    double forbidden_M = 0.0;   // -1/u0_at_T (infinite when u0_at_T == 0)
};

/// 1 + M * U0(T) vanished (to margin tolerance) for at least one mode.
class ResonanceError : public std::runtime_error {
public:
    ResonanceError(const std::string& what, std::vector<ResonantMode> modes)
        : std::runtime_error(what), modes_(std::move(modes)) {}

    const std::vector<ResonantMode>& modes() const noexcept { return modes_; }

private:
    std::vector<ResonantMode> modes_;
};

/// Invalid run configuration (bad keys, values out of range, unreadable files).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace fracbessel
