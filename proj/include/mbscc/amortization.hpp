#pragma once

#include <algorithm>
#include <cmath>

#include "errors.hpp"
#include "roots.hpp"

namespace mbscc {

/// Level-payment, fully amortizing fixed-rate mortgage with unit original balance.
class MortgageSpec {
public:
    explicit MortgageSpec(double maturity_years) : maturity_(maturity_years) {
        detail::require_config(std::isfinite(maturity_years) && maturity_years > 0.0,
                               "MortgageSpec: maturity_years must be positive");
    }

    double maturity() const noexcept { return maturity_; }
    static constexpr double origination_balance() noexcept { return 1.0; }

private:
    double maturity_;
};

namespace detail {

// Below this value of m*T the first-order expansions around m = 0 are used,
// avoiding 0/0 in the closed forms.
inline constexpr double small_mt = 1e-8;

inline void check_time_rate(const MortgageSpec& spec, double t, double m) {
    require_domain(t >= 0.0 && t <= spec.maturity(), "time outside [0, T]");
    require_domain(m >= 0.0, "negative mortgage rate");
}

}  // namespace detail

/// Scheduled outstanding principal p(t, m) without prepayment.
inline double balance(const MortgageSpec& spec, double t, double m) {
    detail::check_time_rate(spec, t, m);
    const double T = spec.maturity();
    if (t == 0.0) return 1.0;
    if (t == T) return 0.0;
    if (m * T < detail::small_mt) return 1.0 - t / T + m * t * (T - t) / (2.0 * T);
    return std::expm1(-m * (T - t)) / std::expm1(-m * T);
}

/// Continuous coupon rate c(m) that amortizes the unit balance over [0, T].
inline double coupon_rate(const MortgageSpec& spec, double m) {
    detail::require_domain(m >= 0.0, "negative mortgage rate");
    const double T = spec.maturity();
    if (m * T < detail::small_mt) return 1.0 / T + 0.5 * m;
    return -m / std::expm1(-m * T);
}

/// Sensitivity of the scheduled balance to the contract rate, dp/dm.
inline double balance_dm(const MortgageSpec& spec, double t, double m) {
    detail::check_time_rate(spec, t, m);
    const double T = spec.maturity();
    if (t == 0.0 || t == T) return 0.0;
    const double a = T - t;
    if (m * T < detail::small_mt) return a * t / (2.0 * T);
    const double num = -std::expm1(-m * a);
    const double den = -std::expm1(-m * T);
    return (a * std::exp(-m * a) * den - num * T * std::exp(-m * T)) / (den * den);
}

/// Auxiliary bound Xi(x) = inf_{0<b<1} b e^{-bx} / ((1-b)(1-e^{-bx})).
///
/// Equals 1/x on (0, 2]; computed by golden-section minimization over b above that.
inline double xi(double x) {
    detail::require_domain(x > 0.0, "xi requires x > 0");
    if (x <= 2.0) return 1.0 / x;
    auto objective = [x](double b) {
        return b * std::exp(-b * x) / ((1.0 - b) * -std::expm1(-b * x));
    };
    const auto best = golden_section_minimize(objective, 1e-12, 1.0 - 1e-12, 1e-10);
    // The infimum can also sit at the b -> 0 end, where the objective tends to 1/x.
    return std::min(best.value, 1.0 / x);
}

}  // namespace mbscc
