#pragma once

// Minimal RAII handle over mpfr_t plus the rational Gamma ladder used by the
// multiprecision Mittag-Leffler path. Internal to the core library.

#include <cmath>
#include <cstdint>
#include <map>
#include <utility>

#include <mpfr.h>

namespace fracbessel::detail {

class BigFloat {
public:
    explicit BigFloat(mpfr_prec_t prec) {
        mpfr_init2(v_, prec);
        mpfr_set_zero(v_, 1);
    }
    BigFloat(mpfr_prec_t prec, double d) {
        mpfr_init2(v_, prec);
        mpfr_set_d(v_, d, MPFR_RNDN);
    }
    BigFloat(const BigFloat& other) {
        mpfr_init2(v_, mpfr_get_prec(other.v_));
        mpfr_set(v_, other.v_, MPFR_RNDN);
    }
    BigFloat(BigFloat&& other) noexcept {
        mpfr_init2(v_, MPFR_PREC_MIN);
        mpfr_swap(v_, other.v_);
    }
    BigFloat& operator=(const BigFloat& other) {
        if (this != &other) {
            mpfr_set_prec(v_, mpfr_get_prec(other.v_));
            mpfr_set(v_, other.v_, MPFR_RNDN);
        }
        return *this;
    }
    BigFloat& operator=(BigFloat&& other) noexcept {
        mpfr_swap(v_, other.v_);
        return *this;
    }
    ~BigFloat() { mpfr_clear(v_); }

    mpfr_ptr get() noexcept { return v_; }
    mpfr_srcptr get() const noexcept { return v_; }

    double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }

    /// Natural log of |value|; -inf for zero.
    double log_abs() const {
        if (mpfr_zero_p(v_)) return -INFINITY;
        long exp2 = 0;
        const double mant = mpfr_get_d_2exp(&exp2, v_, MPFR_RNDN);
        return std::log(std::abs(mant)) + static_cast<double>(exp2) * std::log(2.0);
    }

private:
    mpfr_t v_;
};

/// Gamma(n / q) for integer numerators n > 0 at a fixed precision.
///
/// Values above 2 are built by the upward recurrence Gamma(x + 1) = x Gamma(x)
/// from a base in (0, 2], and memoised. Each cached value is produced by the
/// same operation chain regardless of request order, so results are
/// reproducible.
class GammaLadder {
public:
    GammaLadder(std::int64_t denominator, mpfr_prec_t prec) : q_(denominator), prec_(prec) {}

    const BigFloat& gamma(std::int64_t numerator) {
        if (auto it = cache_.find(numerator); it != cache_.end()) {
            return it->second;
        }
        std::int64_t base = numerator;
        while (base > 2 * q_ && cache_.find(base) == cache_.end()) {
            base -= q_;
        }
        if (cache_.find(base) == cache_.end()) {
            BigFloat x(prec_ + 32);
            mpfr_set_si(x.get(), static_cast<long>(base), MPFR_RNDN);
            mpfr_div_si(x.get(), x.get(), static_cast<long>(q_), MPFR_RNDN);
            BigFloat g(prec_);
            mpfr_gamma(g.get(), x.get(), MPFR_RNDN);
            cache_.emplace(base, std::move(g));
        }
        for (std::int64_t n = base + q_; n <= numerator; n += q_) {
            if (cache_.find(n) != cache_.end()) continue;
            BigFloat g(cache_.at(n - q_));
            mpfr_mul_si(g.get(), g.get(), static_cast<long>(n - q_), MPFR_RNDN);
            mpfr_div_si(g.get(), g.get(), static_cast<long>(q_), MPFR_RNDN);
            cache_.emplace(n, std::move(g));
        }
        return cache_.at(numerator);
    }

    mpfr_prec_t precision() const noexcept { return prec_; }

private:
    std::int64_t q_;
    mpfr_prec_t prec_;
    std::map<std::int64_t, BigFloat> cache_;
};

/// Common-denominator representation of a set of positive reals, if each is
/// within a few ulps of a fraction with a small denominator.
struct RationalSet {
    bool exact = false;
    std::int64_t denominator = 1;
    std::vector<std::int64_t> numerators;
};

RationalSet rationalize(const std::vector<double>& values);

/// Working precision levels of the multiprecision path (bits).
mpfr_prec_t precision_level(double required_bits);

}  // namespace fracbessel::detail
