#include "fracbessel/mittag_leffler.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <shared_mutex>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "bigfloat.hpp"
#include "fracbessel/compensated_sum.hpp"
#include "fracbessel/errors.hpp"

namespace fracbessel {

namespace detail {

RationalSet rationalize(const std::vector<double>& values) {
    constexpr std::int64_t kMaxDenominator = 10000;
    constexpr std::int64_t kMaxCommon = 1000000;
    RationalSet out;
    std::vector<std::pair<std::int64_t, std::int64_t>> fractions;
    std::int64_t common = 1;
    for (double v : values) {
        // Continued-fraction convergents p/q until |v - p/q| is a few ulps.
        double x = v;
        std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
        bool found = false;
        for (int it = 0; it < 40; ++it) {
            const double a = std::floor(x);
            if (a > 1e12) break;
            const auto ai = static_cast<std::int64_t>(a);
            const std::int64_t p2 = ai * p1 + p0;
            const std::int64_t q2 = ai * q1 + q0;
            if (q2 > kMaxDenominator) break;
            p0 = p1; q0 = q1; p1 = p2; q1 = q2;
            if (std::abs(v - static_cast<double>(p1) / static_cast<double>(q1)) <= 8.0 * std::numeric_limits<double>::epsilon() * std::abs(v)) {
                found = true;
                break;
            }
            const double frac = x - a;
            if (frac < 1e-15) break;
            x = 1.0 / frac;
        }
        if (!found) {
            return out;
        }
        fractions.emplace_back(p1, q1);
        common = std::lcm(common, q1);
        if (common > kMaxCommon) {
            return out;
        }
    }
    out.exact = true;
    out.denominator = common;
    for (const auto& [p, q] : fractions) {
        out.numerators.push_back(p * (common / q));
    }
    return out;
}

mpfr_prec_t precision_level(double required_bits) {
    mpfr_prec_t level = 128;
    bool pow2 = true;
    while (static_cast<double>(level) < required_bits) {
        level = pow2 ? level / 2 * 3 : level / 3 * 4;
        pow2 = !pow2;
    }
    return level;
}

}  // namespace detail

namespace {

using detail::BigFloat;

constexpr double kLn2 = 0.69314718055994530942;
constexpr double kUnitRoundoff = 1.1102230246251565e-16;
// exp() overflows double beyond this.
constexpr double kMaxLogTerm = 700.0;
// Largest lattice step p_i for which the lattice form is used.
constexpr std::int64_t kMaxLatticeStep = 64;

double lgam(double x) { return boost::math::lgamma(x); }

// Appends all compositions of k into m non-negative parts, colex order.
void append_compositions(int m, int k, std::vector<std::uint32_t>& out) {
    std::vector<std::uint32_t> parts(static_cast<std::size_t>(m), 0);
    auto rec = [&](auto&& self, int pos, int remaining) -> void {
        if (pos == 0) {
            parts[0] = static_cast<std::uint32_t>(remaining);
            out.insert(out.end(), parts.begin(), parts.end());
            return;
        }
        for (int v = 0; v <= remaining; ++v) {
            parts[static_cast<std::size_t>(pos)] = static_cast<std::uint32_t>(v);
            self(self, pos - 1, remaining - v);
        }
    };
    rec(rec, m - 1, k);
}

// log(exp(a) + exp(b)) without overflow.
double log_sum_exp(double a, double b) {
    if (a == -INFINITY) return b;
    if (b == -INFINITY) return a;
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

void check_args(std::span<const double> args) {
    for (double z : args) {
        if (!std::isfinite(z)) {
            throw DomainError("Mittag-Leffler: arguments must be finite");
        }
    }
}

}  // namespace

void MLParams::validate() const {
    if (exponents.empty()) {
        throw DomainError("MLParams: at least one exponent is required");
    }
    if (exponents.size() != args.size()) {
        throw DomainError("MLParams: exponents and args differ in length");
    }
    for (double a : exponents) {
        if (!(a > 0.0) || !std::isfinite(a)) {
            throw DomainError("MLParams: exponents must be positive and finite");
        }
    }
    if (!(offset > 0.0) || !std::isfinite(offset)) {
        throw DomainError("MLParams: offset must be positive and finite");
    }
    check_args(args);
}

// Gamma(b + q (N - step)) / Gamma(b + q N) for N = 0, 1, ... These depend only
// on the lattice, so every evaluation shares them. Chunks are append-only and
// published through atomics; readers never lock.
class LatticeRatioTable {
public:
    LatticeRatioTable(double b, double q, int step) : b_(b), q_(q), step_(step) {
        for (auto& c : chunks_) c.store(nullptr, std::memory_order_relaxed);
    }

    double operator()(std::size_t N) {
        const std::size_t c = N / kChunk;
        if (c >= kChunks) return compute(N);
        const double* chunk = chunks_[c].load(std::memory_order_acquire);
        if (chunk == nullptr) chunk = fill(c);
        return chunk[N % kChunk];
    }

private:
    static constexpr std::size_t kChunk = 2048;
    static constexpr std::size_t kChunks =
        static_cast<std::size_t>(kMLMaxLayers) * static_cast<std::size_t>(kMaxLatticeStep) / kChunk + 1;

    double compute(std::size_t N) const {
        if (N < static_cast<std::size_t>(step_)) return 0.0;
        const double x = b_ + q_ * static_cast<double>(N - static_cast<std::size_t>(step_));
        return boost::math::tgamma_delta_ratio(x, q_ * step_);
    }

    const double* fill(std::size_t c) {
        const std::lock_guard lock(mutex_);
        if (const double* ready = chunks_[c].load(std::memory_order_acquire)) return ready;
        auto data = std::make_unique<double[]>(kChunk);
        for (std::size_t j = 0; j < kChunk; ++j) data[j] = compute(c * kChunk + j);
        const double* raw = data.get();
        owned_.push_back(std::move(data));
        chunks_[c].store(raw, std::memory_order_release);
        return raw;
    }

    double b_;
    double q_;
    int step_;
    std::array<std::atomic<const double*>, kChunks> chunks_;
    std::mutex mutex_;
    std::vector<std::unique_ptr<double[]>> owned_;
};

struct MultinomialMittagLeffler::Impl {
    struct Layer {
        std::vector<std::uint32_t> comps;  // count * m
        std::vector<double> log_coef;      // log(k!/prod l_i!) - lgamma(b + sum a_i l_i)
        std::vector<double> log_scale;     // magnitude of the pieces entering log_coef
    };
    struct PrecisionLevel {
        explicit PrecisionLevel(mpfr_prec_t p) : prec(p) {}
        mpfr_prec_t prec;
        std::vector<std::vector<BigFloat>> coef;
        std::unique_ptr<detail::GammaLadder> ladder;
    };

    std::vector<double> a;
    double b;
    int m;
    detail::RationalSet rational;

    // Lattice form: a_i = p_i * q with small integers p_i. Then
    // E = sum_N d_N / Gamma(b + q N) with d_N = sum_i z_i d_{N - p_i}, d_0 = 1.
    bool lattice = false;
    double q = 0.0;
    std::int64_t q_numerator = 0;  // q = q_numerator / rational.denominator
    std::vector<int> p;
    int p_max = 0;
    int p_min = 0;
    std::vector<std::unique_ptr<LatticeRatioTable>> ratios;  // one per exponent

    std::shared_mutex layer_mutex;
    std::vector<Layer> layers;

    std::mutex mp_mutex;
    std::map<mpfr_prec_t, PrecisionLevel> levels;

    Impl(std::vector<double> exps, double offset) : a(std::move(exps)), b(offset), m(static_cast<int>(a.size())) {
        std::vector<double> all = a;
        all.push_back(b);
        rational = detail::rationalize(all);
        if (rational.exact) {
            std::int64_t g = 0;
            for (int i = 0; i < m; ++i) g = std::gcd(g, rational.numerators[static_cast<std::size_t>(i)]);
            std::vector<int> steps;
            bool small = true;
            for (int i = 0; i < m; ++i) {
                const std::int64_t pi = rational.numerators[static_cast<std::size_t>(i)] / g;
                small = small && pi <= kMaxLatticeStep;
                steps.push_back(static_cast<int>(std::min<std::int64_t>(pi, kMaxLatticeStep + 1)));
            }
            if (small) {
                lattice = true;
                q_numerator = g;
                q = static_cast<double>(g) / static_cast<double>(rational.denominator);
                p = std::move(steps);
                p_max = *std::max_element(p.begin(), p.end());
                p_min = *std::min_element(p.begin(), p.end());
                for (int step : p) ratios.push_back(std::make_unique<LatticeRatioTable>(b, q, step));
            }
        }
    }

    Layer build_layer(int k) const {
        Layer layer;
        append_compositions(m, k, layer.comps);
        const std::size_t count = layer.comps.size() / static_cast<std::size_t>(m);
        layer.log_coef.resize(count);
        layer.log_scale.resize(count);
        const double log_kfact = lgam(k + 1.0);
        for (std::size_t j = 0; j < count; ++j) {
            double log_den = 0.0;
            double x = b;
            for (int i = 0; i < m; ++i) {
                const auto l = layer.comps[j * static_cast<std::size_t>(m) + static_cast<std::size_t>(i)];
                log_den += lgam(l + 1.0);
                x += a[static_cast<std::size_t>(i)] * l;
            }
            const double lg = lgam(x);
            layer.log_coef[j] = log_kfact - log_den - lg;
            layer.log_scale[j] = log_kfact + log_den + std::abs(lg) + 4.0;
        }
        return layer;
    }

    // Caller must not hold layer_mutex.
    void ensure_layers(std::size_t count) {
        {
            std::shared_lock lock(layer_mutex);
            if (layers.size() >= count) return;
        }
        std::unique_lock lock(layer_mutex);
        while (layers.size() < count) {
            layers.push_back(build_layer(static_cast<int>(layers.size())));
        }
    }

    struct ArgInfo {
        std::vector<double> log_abs;
        std::vector<bool> negative;
        std::vector<bool> zero;
    };

    ArgInfo arg_info(std::span<const double> args) const {
        ArgInfo info;
        for (double z : args) {
            info.zero.push_back(z == 0.0);
            info.negative.push_back(z < 0.0);
            info.log_abs.push_back(z == 0.0 ? -INFINITY : std::log(std::abs(z)));
        }
        return info;
    }

    // Returns false if the composition touches a zero argument.
    bool term_log(const Layer& layer, std::size_t j, const ArgInfo& info, double& lt, double& scale, bool& negative) const {
        lt = layer.log_coef[j];
        scale = layer.log_scale[j];
        int parity = 0;
        for (int i = 0; i < m; ++i) {
            const auto l = layer.comps[j * static_cast<std::size_t>(m) + static_cast<std::size_t>(i)];
            if (l == 0) continue;
            const auto ii = static_cast<std::size_t>(i);
            if (info.zero[ii]) return false;
            lt += l * info.log_abs[ii];
            scale += l * std::abs(info.log_abs[ii]);
            if (info.negative[ii]) parity += static_cast<int>(l);
        }
        negative = (parity % 2) != 0;
        return true;
    }

    struct DoublePass {
        bool accepted = false;
        MLValue value;
        double max_log = -INFINITY;
        std::size_t terms = 0;
    };

    void scan_largest_term(const ArgInfo& info, int first_layer, DoublePass& out) {
        int quiet = 0;
        std::size_t terms = 0;
        for (int k = first_layer; k < kMLMaxLayers && terms <= kMLMaxTerms; ++k) {
            ensure_layers(static_cast<std::size_t>(k) + 1);
            double layer_max = -INFINITY;
            std::shared_lock lock(layer_mutex);
            const Layer& layer = layers[static_cast<std::size_t>(k)];
            terms += layer.log_coef.size();
            for (std::size_t j = 0; j < layer.log_coef.size(); ++j) {
                double lt, scale;
                bool negative;
                if (term_log(layer, j, info, lt, scale, negative)) layer_max = std::max(layer_max, lt);
            }
            out.max_log = std::max(out.max_log, layer_max);
            quiet = (layer_max < out.max_log - 60.0 && layer_max < -40.0) ? quiet + 1 : 0;
            if (quiet >= 3) break;
        }
        out.terms = terms;
    }

    DoublePass double_pass(const ArgInfo& info, MLTolerance tol) {
        DoublePass out;
        CompensatedSum sum;
        double err_units = 0.0;
        double max_layer_abs = 0.0;
        double prev_layer_abs = INFINITY;
        double last_ratio = 1.0;
        int small_run = 0;
        std::size_t terms = 0;
        int k = 0;
        for (; k < kMLMaxLayers; ++k) {
            ensure_layers(static_cast<std::size_t>(k) + 1);
            double layer_abs = 0.0;
            CompensatedSum layer_sum;
            bool overflow = false;
            {
                std::shared_lock lock(layer_mutex);
                const Layer& layer = layers[static_cast<std::size_t>(k)];
                const std::size_t count = layer.log_coef.size();
                terms += count;
                for (std::size_t j = 0; j < count; ++j) {
                    double lt, scale;
                    bool negative;
                    if (!term_log(layer, j, info, lt, scale, negative)) continue;
                    out.max_log = std::max(out.max_log, lt);
                    if (lt > kMaxLogTerm) {
                        overflow = true;
                        continue;
                    }
                    const double t = std::exp(lt);
                    layer_abs += t;
                    layer_sum.add(negative ? -t : t);
                    err_units += t * scale;
                }
            }
            if (terms > kMLMaxTerms) {
                throw ConvergenceError("Mittag-Leffler: term budget exhausted after " + std::to_string(k) + " layers",
                                       k, layer_abs);
            }
            if (overflow) {
                // Terms exceed double range: only locate the largest term so the
                // multiprecision pass can size its precision.
                scan_largest_term(info, k + 1, out);
                out.terms = std::max(out.terms, terms);
                out.value.layers_used = k + 1;
                return out;
            }
            sum.add(layer_sum.value());
            max_layer_abs = std::max(max_layer_abs, layer_abs);
            const double threshold = std::max({tol.rel * std::abs(sum.value()), tol.abs, kUnitRoundoff * max_layer_abs});
            if (std::isfinite(prev_layer_abs) && prev_layer_abs > 0.0) {
                last_ratio = layer_abs / prev_layer_abs;
            }
            const double tail_now = last_ratio < 1.0 ? layer_abs * last_ratio / (1.0 - last_ratio) : layer_abs;
            if (k > 0 && std::max(layer_abs, tail_now) <= threshold && layer_abs <= prev_layer_abs) {
                ++small_run;
            } else {
                small_run = 0;
            }
            prev_layer_abs = layer_abs;
            if (small_run >= 3) {
                break;
            }
        }
        if (k >= kMLMaxLayers) {
            throw ConvergenceError("Mittag-Leffler: no convergence within " + std::to_string(kMLMaxLayers) + " layers",
                                   k, prev_layer_abs);
        }
        const double tail = last_ratio < 1.0 ? prev_layer_abs * last_ratio / (1.0 - last_ratio) : prev_layer_abs;
        const double rounding = 2.0 * kUnitRoundoff * err_units;
        out.terms = terms;
        out.value.value = sum.value();
        out.value.layers_used = k + 1;
        out.value.tail_estimate = tail;
        out.accepted = rounding + tail <= std::max(tol.rel * std::abs(out.value.value), tol.abs);
        return out;
    }

    const BigFloat& mp_coefficient(PrecisionLevel& level, std::size_t k, std::size_t j) {
        while (level.coef.size() <= k) {
            const std::size_t layer_index = level.coef.size();
            std::vector<std::uint32_t> comps;
            append_compositions(m, static_cast<int>(layer_index), comps);
            const std::size_t count = comps.size() / static_cast<std::size_t>(m);
            std::vector<BigFloat> row;
            row.reserve(count);
            mpz_t multinomial, binom;
            mpz_init(multinomial);
            mpz_init(binom);
            for (std::size_t jj = 0; jj < count; ++jj) {
                mpz_set_ui(multinomial, 1);
                unsigned long partial = 0;
                for (int i = 0; i < m; ++i) {
                    const auto l = comps[jj * static_cast<std::size_t>(m) + static_cast<std::size_t>(i)];
                    partial += l;
                    mpz_bin_uiui(binom, partial, l);
                    mpz_mul(multinomial, multinomial, binom);
                }
                BigFloat c(level.prec);
                mpfr_set_z(c.get(), multinomial, MPFR_RNDN);
                if (rational.exact) {
                    std::int64_t numerator = rational.numerators.back();
                    for (int i = 0; i < m; ++i) {
                        numerator += rational.numerators[static_cast<std::size_t>(i)] *
                                     static_cast<std::int64_t>(comps[jj * static_cast<std::size_t>(m) + static_cast<std::size_t>(i)]);
                    }
                    mpfr_div(c.get(), c.get(), level.ladder->gamma(numerator).get(), MPFR_RNDN);
                } else {
                    BigFloat x(level.prec + 32, b);
                    BigFloat ai(level.prec + 32);
                    for (int i = 0; i < m; ++i) {
                        mpfr_set_d(ai.get(), a[static_cast<std::size_t>(i)], MPFR_RNDN);
                        mpfr_mul_ui(ai.get(), ai.get(), comps[jj * static_cast<std::size_t>(m) + static_cast<std::size_t>(i)], MPFR_RNDN);
                        mpfr_add(x.get(), x.get(), ai.get(), MPFR_RNDN);
                    }
                    BigFloat g(level.prec);
                    mpfr_gamma(g.get(), x.get(), MPFR_RNDN);
                    mpfr_div(c.get(), c.get(), g.get(), MPFR_RNDN);
                }
                row.push_back(std::move(c));
            }
            mpz_clear(multinomial);
            mpz_clear(binom);
            level.coef.push_back(std::move(row));
        }
        return level.coef[k][j];
    }

    struct MPPass {
        double value = 0.0;
        double log_err = INFINITY;
        int layers = 0;
        double tail = 0.0;
    };

    MPPass mp_pass(std::span<const double> args, const ArgInfo& info, MLTolerance tol, mpfr_prec_t prec) {
        const std::lock_guard mp_lock(mp_mutex);
        auto [it, inserted] = levels.try_emplace(prec, prec);
        PrecisionLevel& level = it->second;
        if (inserted && rational.exact) {
            level.ladder = std::make_unique<detail::GammaLadder>(rational.denominator, prec + 16);
        }

        std::vector<BigFloat> z;
        std::vector<std::vector<BigFloat>> powers(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) {
            z.emplace_back(prec, args[static_cast<std::size_t>(i)]);
            powers[static_cast<std::size_t>(i)].emplace_back(prec, 1.0);
        }
        BigFloat sum(prec);
        BigFloat term(prec);

        const double log_rel = std::log(tol.rel);
        const double log_abs_tol = tol.abs > 0.0 ? std::log(tol.abs) : -INFINITY;
        double max_log = -INFINITY;
        double prev_layer_log = INFINITY;
        double last_ratio_log = 0.0;
        int small_run = 0;
        std::size_t terms = 0;
        int k = 0;
        for (; k < kMLMaxLayers; ++k) {
            const auto ku = static_cast<std::size_t>(k);
            ensure_layers(ku + 1);
            for (int i = 0; i < m; ++i) {
                auto& pw = powers[static_cast<std::size_t>(i)];
                if (pw.size() <= ku) {
                    BigFloat next(pw.back());
                    mpfr_mul(next.get(), next.get(), z[static_cast<std::size_t>(i)].get(), MPFR_RNDN);
                    pw.push_back(std::move(next));
                }
            }
            double layer_log = -INFINITY;
            {
                std::shared_lock lock(layer_mutex);
                const Layer& layer = layers[ku];
                const std::size_t count = layer.log_coef.size();
                terms += count;
                for (std::size_t j = 0; j < count; ++j) {
                    double lt, scale;
                    bool negative;
                    if (!term_log(layer, j, info, lt, scale, negative)) continue;
                    layer_log = log_sum_exp(layer_log, lt);
                    mpfr_set(term.get(), mp_coefficient(level, ku, j).get(), MPFR_RNDN);
                    for (int i = 0; i < m; ++i) {
                        const auto l = layer.comps[j * static_cast<std::size_t>(m) + static_cast<std::size_t>(i)];
                        if (l == 0) continue;
                        mpfr_mul(term.get(), term.get(), powers[static_cast<std::size_t>(i)][l].get(), MPFR_RNDN);
                    }
                    mpfr_add(sum.get(), sum.get(), term.get(), MPFR_RNDN);
                }
            }
            if (terms > kMLMaxTerms) {
                throw ConvergenceError("Mittag-Leffler: term budget exhausted after " + std::to_string(k) + " layers",
                                       k, std::exp(std::min(layer_log, kMaxLogTerm)));
            }
            max_log = std::max(max_log, layer_log);
            const double noise_log = max_log - static_cast<double>(prec) * kLn2;
            const double threshold = std::max({log_rel + sum.log_abs(), log_abs_tol, noise_log});
            if (std::isfinite(prev_layer_log) && std::isfinite(layer_log)) {
                last_ratio_log = layer_log - prev_layer_log;
            }
            // Slowly decaying layers leave a geometric tail much larger than the last layer.
            const double tail_now = last_ratio_log < 0.0
                ? layer_log + last_ratio_log - std::log1p(-std::exp(last_ratio_log))
                : layer_log;
            if (k > 0 && tail_now <= threshold && layer_log <= prev_layer_log) {
                ++small_run;
            } else {
                small_run = 0;
            }
            prev_layer_log = layer_log;
            if (small_run >= 3) break;
        }
        if (k >= kMLMaxLayers) {
            throw ConvergenceError("Mittag-Leffler: no convergence within " + std::to_string(kMLMaxLayers) + " layers",
                                   k, std::exp(std::min(prev_layer_log, kMaxLogTerm)));
        }
        MPPass out;
        out.value = sum.to_double();
        out.layers = k + 1;
        const double tail_log = last_ratio_log < 0.0
            ? prev_layer_log + last_ratio_log - std::log1p(-std::exp(last_ratio_log))
            : prev_layer_log;
        out.tail = std::exp(std::min(tail_log, kMaxLogTerm));
        const double rounding_log = max_log + std::log(static_cast<double>(terms) * (m + 3)) - static_cast<double>(prec) * kLn2;
        out.log_err = log_sum_exp(rounding_log, tail_log);
        return out;
    }

    // ---- Lattice form -------------------------------------------------------

    struct LatticeDouble {
        bool accepted = false;
        MLValue value;
        double max_log = -INFINITY;
        std::size_t points = 0;
    };

    // Terms t_N = d_N / Gamma(b + q N) by the scaled recurrence, grouped in
    // blocks of p_max lattice points that play the role of layers. Values are
    // kept as stored * exp(log_shift) so the magnitude scan continues past
    // the double range.
    LatticeDouble lattice_double(std::span<const double> z, MLTolerance tol) {
        LatticeDouble out;
        const std::size_t ring = static_cast<std::size_t>(p_max) + 1;
        std::vector<double> t(ring, 0.0);
        std::vector<double> ta(ring, 0.0);
        double log_shift = 0.0;
        t[0] = std::exp(-lgam(b));
        ta[0] = t[0];
        out.max_log = std::log(ta[0]);

        CompensatedSum sum;
        double err_units = 0.0;
        double max_block = 0.0;
        double prev_block = INFINITY;
        double last_ratio = 1.0;
        int small_run = 0;
        bool scaled = false;
        double block_abs = ta[0];
        double block_sum = t[0];
        err_units += ta[0];
        int blocks = 0;
        int quiet = 0;
        const auto B = static_cast<std::size_t>(p_max);
        std::size_t N = 1;
        for (;; ++N) {
            const std::size_t slot = N % ring;
            double v = 0.0;
            double va = 0.0;
            for (int i = 0; i < m; ++i) {
                if (N < static_cast<std::size_t>(p[static_cast<std::size_t>(i)])) continue;
                const std::size_t from = (N - static_cast<std::size_t>(p[static_cast<std::size_t>(i)])) % ring;
                if (ta[from] == 0.0 || z[static_cast<std::size_t>(i)] == 0.0) continue;
                const double r = (*ratios[static_cast<std::size_t>(i)])(N);
                v += z[static_cast<std::size_t>(i)] * r * t[from];
                va += std::abs(z[static_cast<std::size_t>(i)]) * r * ta[from];
            }
            t[slot] = v;
            ta[slot] = va;
            if (va > 1e250) {
                for (std::size_t j = 0; j < ring; ++j) {
                    t[j] *= 1e-250;
                    ta[j] *= 1e-250;
                }
                log_shift += 250.0 * std::log(10.0);
                scaled = true;
            } else if (scaled && va > 0.0 && va < 1e-250 && log_shift > 0.0) {
                for (std::size_t j = 0; j < ring; ++j) {
                    t[j] *= 1e250;
                    ta[j] *= 1e250;
                }
                log_shift -= 250.0 * std::log(10.0);
            }
            const double log_va = va > 0.0 ? std::log(ta[slot]) + log_shift : -INFINITY;
            out.max_log = std::max(out.max_log, log_va);
            if (!scaled) {
                block_abs += va;
                block_sum += v;
                err_units += va * (static_cast<double>(m + 2) * (static_cast<double>(N) / p_min + 1.0));
            }
            if (N % B != 0) continue;

            // End of a block.
            ++blocks;
            out.points = N + 1;
            if (scaled) {
                // Only locate the largest term for the multiprecision pass.
                const double block_log = log_va;
                quiet = (block_log < out.max_log - 60.0 && block_log < -40.0) ? quiet + 1 : 0;
                if (quiet >= 3 || blocks >= kMLMaxLayers) break;
                continue;
            }
            sum.add(block_sum);
            max_block = std::max(max_block, block_abs);
            if (std::isfinite(prev_block) && prev_block > 0.0) last_ratio = block_abs / prev_block;
            const double threshold = std::max({tol.rel * std::abs(sum.value()), tol.abs, kUnitRoundoff * max_block});
            const double tail_now = last_ratio < 1.0 ? block_abs * last_ratio / (1.0 - last_ratio) : block_abs;
            if (blocks > 1 && std::max(block_abs, tail_now) <= threshold && block_abs <= prev_block) {
                ++small_run;
            } else {
                small_run = 0;
            }
            prev_block = block_abs;
            block_abs = 0.0;
            block_sum = 0.0;
            if (small_run >= 3) break;
            if (blocks >= kMLMaxLayers) {
                throw ConvergenceError("Mittag-Leffler: no convergence within " + std::to_string(kMLMaxLayers) +
                                           " layers",
                                       blocks, prev_block);
            }
        }
        if (scaled) {
            if (blocks >= kMLMaxLayers) {
                throw ConvergenceError("Mittag-Leffler: no convergence within " + std::to_string(kMLMaxLayers) +
                                           " layers",
                                       blocks, std::exp(std::min(out.max_log, kMaxLogTerm)));
            }
            out.value.layers_used = blocks;
            return out;
        }
        const double tail = last_ratio < 1.0 ? prev_block * last_ratio / (1.0 - last_ratio) : prev_block;
        const double rounding = 2.0 * kUnitRoundoff * err_units;
        out.value.value = sum.value();
        out.value.layers_used = blocks;
        out.value.tail_estimate = tail;
        out.accepted = rounding + tail <= std::max(tol.rel * std::abs(out.value.value), tol.abs);
        return out;
    }

    MPPass lattice_mp(std::span<const double> args, MLTolerance tol, mpfr_prec_t prec) {
        const std::lock_guard mp_lock(mp_mutex);
        auto [it, inserted] = levels.try_emplace(prec, prec);
        PrecisionLevel& level = it->second;
        if (inserted) {
            level.ladder = std::make_unique<detail::GammaLadder>(rational.denominator, prec + 16);
        }
        const std::size_t ring = static_cast<std::size_t>(p_max) + 1;
        std::vector<BigFloat> d;
        d.reserve(ring);
        for (std::size_t j = 0; j < ring; ++j) d.emplace_back(prec);
        std::vector<bool> live(ring, false);
        std::vector<BigFloat> z;
        for (int i = 0; i < m; ++i) z.emplace_back(prec, args[static_cast<std::size_t>(i)]);
        mpfr_set_ui(d[0].get(), 1, MPFR_RNDN);
        live[0] = true;

        BigFloat sum(prec);
        BigFloat term(prec);
        BigFloat block(prec);
        BigFloat prod(prec);
        const std::int64_t nb = rational.numerators.back();
        mpfr_div(term.get(), d[0].get(), level.ladder->gamma(nb).get(), MPFR_RNDN);
        mpfr_set(block.get(), term.get(), MPFR_RNDN);
        double block_log = term.log_abs();

        const double log_rel = std::log(tol.rel);
        const double log_abs_tol = tol.abs > 0.0 ? std::log(tol.abs) : -INFINITY;
        double max_log = block_log;
        double prev_log = INFINITY;
        double last_ratio_log = 0.0;
        int small_run = 0;
        int blocks = 0;
        const auto B = static_cast<std::size_t>(p_max);
        std::size_t N = 1;
        for (;; ++N) {
            const std::size_t slot = N % ring;
            bool any = false;
            for (int i = 0; i < m; ++i) {
                const auto pi = static_cast<std::size_t>(p[static_cast<std::size_t>(i)]);
                if (N < pi || args[static_cast<std::size_t>(i)] == 0.0) continue;
                const std::size_t from = (N - pi) % ring;
                if (!live[from]) continue;
                if (!any) {
                    mpfr_mul(d[slot].get(), z[static_cast<std::size_t>(i)].get(), d[from].get(), MPFR_RNDN);
                    any = true;
                } else {
                    mpfr_mul(prod.get(), z[static_cast<std::size_t>(i)].get(), d[from].get(), MPFR_RNDN);
                    mpfr_add(d[slot].get(), d[slot].get(), prod.get(), MPFR_RNDN);
                }
            }
            live[slot] = any;
            if (any) {
                const std::int64_t numerator = nb + q_numerator * static_cast<std::int64_t>(N);
                mpfr_div(term.get(), d[slot].get(), level.ladder->gamma(numerator).get(), MPFR_RNDN);
                mpfr_add(block.get(), block.get(), term.get(), MPFR_RNDN);
                block_log = log_sum_exp(block_log, term.log_abs());
            }
            if (N % B != 0) continue;

            ++blocks;
            mpfr_add(sum.get(), sum.get(), block.get(), MPFR_RNDN);
            mpfr_set_zero(block.get(), 1);
            max_log = std::max(max_log, block_log);
            if (std::isfinite(prev_log) && std::isfinite(block_log)) last_ratio_log = block_log - prev_log;
            const double noise_log = max_log - static_cast<double>(prec) * kLn2;
            const double threshold = std::max({log_rel + sum.log_abs(), log_abs_tol, noise_log});
            const double tail_now = last_ratio_log < 0.0
                ? block_log + last_ratio_log - std::log1p(-std::exp(last_ratio_log))
                : block_log;
            if (blocks > 1 && tail_now <= threshold && block_log <= prev_log) {
                ++small_run;
            } else {
                small_run = 0;
            }
            prev_log = block_log;
            block_log = -INFINITY;
            if (small_run >= 3) break;
            if (blocks >= kMLMaxLayers) {
                throw ConvergenceError("Mittag-Leffler: no convergence within " + std::to_string(kMLMaxLayers) +
                                           " layers",
                                       blocks, std::exp(std::min(prev_log, kMaxLogTerm)));
            }
        }
        MPPass out;
        out.value = sum.to_double();
        out.layers = blocks;
        const double tail_log = last_ratio_log < 0.0
            ? prev_log + last_ratio_log - std::log1p(-std::exp(last_ratio_log))
            : prev_log;
        out.tail = std::exp(std::min(tail_log, kMaxLogTerm));
        const double rounding_log = max_log + std::log(static_cast<double>(N + 1) * (m + 3) * (N / p_min + 1.0)) -
                                    static_cast<double>(prec) * kLn2;
        out.log_err = log_sum_exp(rounding_log, tail_log);
        return out;
    }

    MLValue lattice_evaluate(std::span<const double> args, MLTolerance tol) {
        const LatticeDouble dp = lattice_double(args, tol);
        if (dp.accepted) return dp.value;
        const double log_points = std::log(static_cast<double>(std::max<std::size_t>(dp.points, 16)) * 4.0 *
                                           (static_cast<double>(dp.points) / p_min + 1.0));
        double required_bits = (std::max(dp.max_log, 0.0) - std::log(tol.rel) + log_points) / kLn2 + 24.0;
        return multiprecision_retry(required_bits, tol, dp.max_log, dp.value.layers_used,
                                    [&](mpfr_prec_t prec) { return lattice_mp(args, tol, prec); });
    }

    template <class Pass>
    MLValue multiprecision_retry(double required_bits, MLTolerance tol, double max_log, int layers, Pass&& pass) {
        for (int attempt = 0; attempt < 6; ++attempt) {
            if (required_bits > static_cast<double>(kMLMaxPrecisionBits)) break;
            const mpfr_prec_t prec = detail::precision_level(required_bits);
            const MPPass r = pass(prec);
            const double accept = std::max(tol.rel * std::abs(r.value), tol.abs);
            const double accept_log = accept > 0.0 ? std::log(accept) : -INFINITY;
            if (r.log_err <= accept_log || r.log_err < -745.0) {
                return MLValue{r.value, r.layers, r.tail};
            }
            required_bits = static_cast<double>(prec) + (r.log_err - std::max(accept_log, -745.0)) / kLn2 + 16.0;
        }
        throw ConvergenceError("Mittag-Leffler: cancellation exceeds the multiprecision budget (largest term ~ e^" +
                                   std::to_string(max_log) + ")",
                               layers, std::exp(std::min(max_log, kMaxLogTerm)));
    }

    MLValue evaluate(std::span<const double> args, MLTolerance tol, bool allow_lattice = true) {
        if (args.size() != static_cast<std::size_t>(m)) {
            throw DomainError("Mittag-Leffler: expected " + std::to_string(m) + " arguments");
        }
        check_args(args);
        if (std::all_of(args.begin(), args.end(), [](double z) { return z == 0.0; })) {
            return MLValue{std::exp(-lgam(b)), 1, 0.0};
        }
        if (lattice && allow_lattice) {
            return lattice_evaluate(args, tol);
        }
        const ArgInfo info = arg_info(args);
        const DoublePass dp = double_pass(info, tol);
        if (dp.accepted) {
            return dp.value;
        }
        const double log_terms = std::log(static_cast<double>(std::max<std::size_t>(dp.terms, 16)) * 4.0);
        const double required_bits = (std::max(dp.max_log, 0.0) - std::log(tol.rel) + log_terms) / kLn2 + 24.0;
        return multiprecision_retry(required_bits, tol, dp.max_log, dp.value.layers_used,
                                    [&](mpfr_prec_t prec) { return mp_pass(args, info, tol, prec); });
    }
};

MultinomialMittagLeffler::MultinomialMittagLeffler(std::vector<double> exponents, double offset) {
    MLParams p{exponents, offset, std::vector<double>(exponents.size(), 0.0)};
    p.validate();
    impl_ = std::make_shared<Impl>(std::move(exponents), offset);
}

std::size_t MultinomialMittagLeffler::arity() const noexcept { return static_cast<std::size_t>(impl_->m); }

std::span<const double> MultinomialMittagLeffler::exponents() const noexcept { return impl_->a; }

double MultinomialMittagLeffler::offset() const noexcept { return impl_->b; }

MLValue MultinomialMittagLeffler::evaluate(std::span<const double> args, MLTolerance tol) const {
    if (!(tol.rel >= 1e-15) || !(tol.abs >= 0.0)) {
        throw DomainError("Mittag-Leffler: tolerance must satisfy rel >= 1e-15, abs >= 0");
    }
    return impl_->evaluate(args, tol);
}

MLValue ml_multinomial(const MLParams& p, double tol) {
    p.validate();
    if (!(tol >= 1e-15)) {
        throw DomainError("ml_multinomial: tolerance must be >= 1e-15");
    }
    MultinomialMittagLeffler f(p.exponents, p.offset);
    return f.evaluate(p.args, MLTolerance{tol, 0.0});
}

namespace detail {

MLValue ml_multinomial_layered(const MLParams& p, double tol) {
    p.validate();
    if (!(tol >= 1e-15)) {
        throw DomainError("ml_multinomial: tolerance must be >= 1e-15");
    }
    MultinomialMittagLeffler::Impl impl(p.exponents, p.offset);
    return impl.evaluate(p.args, MLTolerance{tol, 0.0}, false);
}

}  // namespace detail

double ml_two_param(double a, double b, double z, double tol) {
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
        throw DomainError("ml_two_param: a and b must be positive and finite");
    }
    if (!std::isfinite(z)) {
        throw DomainError("ml_two_param: argument must be finite");
    }
    if (!(tol >= 1e-15)) {
        throw DomainError("ml_two_param: tolerance must be >= 1e-15");
    }
    if (z == 0.0) {
        return std::exp(-lgam(b));
    }
    const double log_z = std::log(std::abs(z));
    const bool negative = z < 0.0;

    // Double precision: term_k = z^k / Gamma(b + a k).
    CompensatedSum sum;
    double err_units = 0.0;
    double max_log = -INFINITY;
    double prev = INFINITY;
    int small_run = 0;
    bool overflow = false;
    int k = 0;
    for (; k < kMLMaxLayers; ++k) {
        const double lg = lgam(b + a * k);
        const double lt = k * log_z - lg;
        max_log = std::max(max_log, lt);
        if (lt > kMaxLogTerm) {
            overflow = true;
            break;
        }
        const double t = std::exp(lt);
        sum.add(negative && (k % 2) ? -t : t);
        err_units += t * (k * std::abs(log_z) + std::abs(lg) + 4.0);
        const double ratio = std::isfinite(prev) && prev > 0.0 ? t / prev : 1.0;
        const double tail_now = ratio < 1.0 ? t * ratio / (1.0 - ratio) : t;
        if (k > 0 && std::max(t, tail_now) <= std::max(tol * std::abs(sum.value()), kUnitRoundoff * std::exp(max_log)) && t <= prev) {
            ++small_run;
        } else {
            small_run = 0;
        }
        prev = t;
        if (small_run >= 3) break;
    }
    if (k >= kMLMaxLayers) {
        throw ConvergenceError("ml_two_param: no convergence within " + std::to_string(kMLMaxLayers) + " terms", k, prev);
    }
    if (!overflow && 2.0 * kUnitRoundoff * err_units + prev <= tol * std::abs(sum.value())) {
        return sum.value();
    }

    // Multiprecision fallback; Gamma values by the rational ladder when possible.
    if (overflow) {
        // Continue the log-magnitude scan to locate the largest term.
        for (int kk = k; kk < kMLMaxLayers; ++kk) {
            const double lt = kk * log_z - lgam(b + a * kk);
            max_log = std::max(max_log, lt);
            if (lt < max_log - 50.0 && lt < 0.0) break;
        }
    }
    const detail::RationalSet rational = detail::rationalize({a, b});
    double required_bits = (std::max(max_log, 0.0) - std::log(tol)) / kLn2 + 48.0;
    for (int attempt = 0; attempt < 6 && required_bits <= static_cast<double>(kMLMaxPrecisionBits); ++attempt) {
        const mpfr_prec_t prec = detail::precision_level(required_bits);
        std::unique_ptr<detail::GammaLadder> ladder;
        if (rational.exact) ladder = std::make_unique<detail::GammaLadder>(rational.denominator, prec + 16);
        BigFloat zb(prec, z);
        BigFloat power(prec, 1.0);
        BigFloat acc(prec);
        BigFloat term(prec);
        BigFloat x(prec + 32);
        BigFloat g(prec + 16);
        double mp_max_log = -INFINITY;
        double prev_log = INFINITY;
        double ratio_log = 0.0;
        int run = 0;
        int kk = 0;
        for (; kk < kMLMaxLayers; ++kk) {
            if (kk > 0) mpfr_mul(power.get(), power.get(), zb.get(), MPFR_RNDN);
            if (rational.exact) {
                const std::int64_t numerator = rational.numerators[1] + rational.numerators[0] * kk;
                mpfr_div(term.get(), power.get(), ladder->gamma(numerator).get(), MPFR_RNDN);
            } else {
                mpfr_set_d(x.get(), a, MPFR_RNDN);
                mpfr_mul_si(x.get(), x.get(), kk, MPFR_RNDN);
                mpfr_add_d(x.get(), x.get(), b, MPFR_RNDN);
                mpfr_gamma(g.get(), x.get(), MPFR_RNDN);
                mpfr_div(term.get(), power.get(), g.get(), MPFR_RNDN);
            }
            mpfr_add(acc.get(), acc.get(), term.get(), MPFR_RNDN);
            const double lt = term.log_abs();
            mp_max_log = std::max(mp_max_log, lt);
            const double threshold = std::max(std::log(tol) + acc.log_abs(), mp_max_log - static_cast<double>(prec) * kLn2);
            if (std::isfinite(prev_log)) ratio_log = lt - prev_log;
            const double tail_now = ratio_log < 0.0 ? lt + ratio_log - std::log1p(-std::exp(ratio_log)) : lt;
            if (kk > 0 && tail_now <= threshold && lt <= prev_log) ++run; else run = 0;
            prev_log = lt;
            if (run >= 3) break;
        }
        if (kk >= kMLMaxLayers) break;
        const double value = acc.to_double();
        const double tail_log = ratio_log < 0.0 ? prev_log + ratio_log - std::log1p(-std::exp(ratio_log)) : prev_log;
        const double err_log = log_sum_exp(mp_max_log + std::log(4.0 * (kk + 1)) - static_cast<double>(prec) * kLn2, tail_log);
        const double accept_log = value != 0.0 ? std::log(tol * std::abs(value)) : -745.0;
        if (err_log <= accept_log || err_log < -745.0) {
            return value;
        }
        required_bits = static_cast<double>(prec) + (err_log - accept_log) / kLn2 + 16.0;
    }
    throw ConvergenceError("ml_two_param: cancellation exceeds the multiprecision budget", k, std::exp(std::min(max_log, kMaxLogTerm)));
}

TimeKernels::TimeKernels(const TimeOperator& op)
    : op_(op),
      unit_(op.ml_exponents(), 1.0),
      kernel_(op.ml_exponents(), op.alpha()),
      shifted_(op.ml_exponents(), 1.0 + op.alpha()) {}

double TimeKernels::u0_bar(double gamma_sq, double t, MLTolerance tol) const {
    if (!(t >= 0.0)) {
        throw DomainError("u0_bar: t must be >= 0");
    }
    if (t == 0.0) {
        return 1.0;
    }
    const auto args = op_.ml_arguments(gamma_sq, t);
    if (op_.size() == 0) {
        return unit_.evaluate(args, tol).value;
    }
    // Only the -gamma^2 term of the general initial-value formula survives: the
    // lower orders alpha_i > 0 carry no initial-value contribution.
    const double x = gamma_sq * std::pow(t, op_.alpha());
    return 1.0 - x * shifted_.evaluate(args, tol).value;
}

double TimeKernels::u0_bar_unit_offset(double gamma_sq, double t, MLTolerance tol) const {
    if (!(t >= 0.0)) {
        throw DomainError("u0_bar: t must be >= 0");
    }
    if (t == 0.0) {
        return 1.0;
    }
    return unit_.evaluate(op_.ml_arguments(gamma_sq, t), tol).value;
}

double TimeKernels::convolution_kernel(double gamma_sq, double z, MLTolerance tol) const {
    if (!(z >= 0.0)) {
        throw DomainError("convolution_kernel: z must be >= 0");
    }
    const auto args = op_.ml_arguments(gamma_sq, z);
    return kernel_.evaluate(args, tol).value;
}

double TimeKernels::evaluate(double offset, double gamma_sq, double t, MLTolerance tol) const {
    const auto args = op_.ml_arguments(gamma_sq, t);
    if (offset == 1.0) return unit_.evaluate(args, tol).value;
    if (offset == op_.alpha()) return kernel_.evaluate(args, tol).value;
    if (offset == 1.0 + op_.alpha()) return shifted_.evaluate(args, tol).value;
    MultinomialMittagLeffler f(op_.ml_exponents(), offset);
    return f.evaluate(args, tol).value;
}

namespace {

void check_u0_args(double gamma_sq, double t) {
    if (!(gamma_sq > 0.0) || !std::isfinite(gamma_sq)) {
        throw DomainError("u0_bar: gamma_sq must be positive and finite");
    }
    if (!(t >= 0.0) || !std::isfinite(t)) {
        throw DomainError("u0_bar: t must be finite and >= 0");
    }
}

}  // namespace

double u0_bar(const TimeOperator& op, double gamma_sq, double t, double tol) {
    check_u0_args(gamma_sq, t);
    return TimeKernels(op).u0_bar(gamma_sq, t, MLTolerance{tol, 0.0});
}

double u0_bar_unit_offset(const TimeOperator& op, double gamma_sq, double t, double tol) {
    check_u0_args(gamma_sq, t);
    return TimeKernels(op).u0_bar_unit_offset(gamma_sq, t, MLTolerance{tol, 0.0});
}

}  // namespace fracbessel
