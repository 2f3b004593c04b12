#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "amortization.hpp"
#include "coupon_curve.hpp"
#include "errors.hpp"
#include "factor_model.hpp"
#include "intensity.hpp"
#include "path_bank.hpp"
#include "path_engine.hpp"
#include "roots.hpp"

namespace mbscc {

/// Bracket and width used by every scalar coupon solve.
inline constexpr double coupon_bracket_lo = 1e-8;
inline constexpr double coupon_bracket_hi = 1.0;
inline constexpr double coupon_bracket_tol = 1e-10;

namespace detail {

template <class F>
double integrate_0_T(F&& f, double T) {
    double err = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, T, 15, 1e-13, &err);
}

/// (1 - e^{-y}) / y, strictly decreasing from 1 at y = 0+.
inline double mean_annuity_factor(double y) {
    if (y < 1e-12) return 1.0 - 0.5 * y;
    return -std::expm1(-y) / y;
}

}  // namespace detail

/// Baseline coupon with no prepayment: solves (1 - e^{-m T}) / (m T) = (1/T) int_0^T P(x, t) dt.
inline double solve_m0_zero_intensity(const CirParams& params, const MortgageSpec& spec, double x) {
    detail::require_domain(x > 0.0, "solve_m0_zero_intensity: x must be positive");
    const double T = spec.maturity();
    const double target = detail::integrate_0_T([&](double t) { return bond_price(params, x, t); }, T) / T;
    if (!(target > 0.0 && target < 1.0))
        throw SolverError("solve_m0_zero_intensity: average discount factor outside (0, 1): " +
                          std::to_string(target));
    auto residual = [&](double m) { return detail::mean_annuity_factor(m * T) - target; };
    return bisect(residual, coupon_bracket_lo, coupon_bracket_hi, coupon_bracket_tol).root;
}

/// Baseline coupon under a constant intensity gamma:
///   (1 - e^{-mT}) / m = int_0^T e^{-gamma t} P(x,t) (1 + gamma (1 - e^{-m(T-t)}) / m) dt.
inline double solve_m0_const_intensity(const CirParams& params, const MortgageSpec& spec, double x, double gamma) {
    detail::require_domain(x > 0.0, "solve_m0_const_intensity: x must be positive");
    detail::require_domain(gamma >= 0.0, "solve_m0_const_intensity: gamma must be >= 0");
    const double T = spec.maturity();
    const double plain =
        detail::integrate_0_T([&](double t) { return std::exp(-gamma * t) * bond_price(params, x, t); }, T);
    auto residual = [&](double m) {
        const double lhs = -std::expm1(-m * T) / m;
        if (gamma == 0.0) return lhs - plain;
        const double amortized = detail::integrate_0_T(
            [&](double t) { return std::exp(-gamma * t) * bond_price(params, x, t) * -std::expm1(-m * (T - t)); },
            T);
        return lhs - plain - gamma * amortized / m;
    };
    return bisect(residual, coupon_bracket_lo, coupon_bracket_hi, coupon_bracket_tol).root;
}

/// A Monte Carlo coupon estimate.
struct CouponEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

/// Baseline coupon for a factor-only intensity from simulated paths.
///
/// Solves F(T) - int_0^T e^{-m(T-t)} H(t) dt = 0, which is strictly increasing in m.
/// The standard error is the delta-method error of the root.
template <PathSource S, Intensity M>
CouponEstimate solve_m0_general(const S& paths, const MortgageSpec& spec, const M& model, unsigned workers = 1) {
    const TimeGrid& grid = paths.grid();
    detail::require_grid_matches(grid, spec);
    const auto base = baseline_integrals(paths, model, workers);
    const std::size_t n = grid.size();
    const double T = spec.maturity();
    const double F_T = base.F.back();

    auto residual = [&](double m) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            s += detail::trapezoid_weight(grid, j) * std::exp(-m * (T - grid[j])) * base.H[j];
        return F_T - s;
    };
    const double root = bisect(residual, coupon_bracket_lo, coupon_bracket_hi, coupon_bracket_tol).root;

    // Second pass: per-path residuals at the root give the root's standard error.
    std::vector<double> kernel(n);
    double slope = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        kernel[j] = detail::trapezoid_weight(grid, j) * std::exp(-root * (T - grid[j]));
        slope += kernel[j] * (T - grid[j]) * base.H[j];
    }
    std::vector<double> psi(paths.n_paths());
    auto gamma0 = [&model](double x) { return model.baseline(x); };
    parallel_for_chunks(paths.n_paths(), workers, [&](std::size_t begin, std::size_t end) {
        PathBuffer buf;
        std::vector<double> f(n), H(n);
        for (std::size_t i = begin; i < end; ++i) {
            detail::baseline_path(grid, paths.path(i, buf), gamma0, f, H);
            double F = 0.0, s = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                F += detail::trapezoid_weight(grid, j) * f[j];
                s += kernel[j] * H[j];
            }
            psi[i] = F - s;
        }
    });
    const auto psi_est = estimate(psi);
    return {root, psi_est.std_error / slope};
}

/// First-order correction epsilon * m1(x) around the baseline curve.
struct M1Estimate {
    double value = 0.0;
    double std_error = 0.0;
    RatioEstimate integrals;
};

template <PathSource S, Intensity M>
M1Estimate solve_m1(const S& paths, const MortgageSpec& spec, const M& model, const CouponCurve& m0_curve, double x,
                    unsigned workers = 1) {
    const auto r = m1_integrals(paths, spec, model, m0_curve(x), m0_curve, workers);
    if (std::abs(r.denominator.value) <= 3.0 * r.denominator.std_error || r.denominator.value == 0.0)
        throw SolverError("solve_m1: denominator " + std::to_string(r.denominator.value) +
                          " is within 3 standard errors of zero at x = " + std::to_string(x));
    if (r.numerator.value == 0.0) return {0.0, 0.0, r};
    return {r.ratio(), r.ratio_std_error(), r};
}

/// Baseline coupon at x for the decomposition's closed-form equation.
inline double solve_m0(const CirParams& params, const MortgageSpec& spec, const StandardIntensity& model,
                       Decomposition decomposition, double x) {
    const auto& base = model.baseline_fn();
    if (decomposition == Decomposition::zero_baseline) {
        detail::require_config(base.level == 0.0 && base.slope == 0.0,
                               "zero-baseline decomposition requires gamma_0 = 0");
        return solve_m0_zero_intensity(params, spec, x);
    }
    detail::require_config(base.is_constant(), "constant-baseline decomposition requires a constant gamma_0");
    return solve_m0_const_intensity(params, spec, x, base.level);
}

/// m0 + m1 on a reporting grid.
struct ApproxCurve {
    Decomposition decomposition;
    CouponCurve m0;
    std::vector<double> m1;
    std::vector<double> std_error;  ///< of m0 + m1 (m0 is exact)
    CouponCurve approx;
    bool positive = true;  ///< false if any approx value had to be clamped at 0
};

/// m(x) ~ m0(x) + m1(x) at every bank rate. `model` must already carry the chosen split.
template <PathBank B>
ApproxCurve approx_current_coupon(const B& bank, const CirParams& params, const MortgageSpec& spec,
                                  const StandardIntensity& model, Decomposition decomposition, unsigned workers = 1) {
    std::vector<double> grid(bank.rates().begin(), bank.rates().end());
    std::vector<double> m0(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) m0[i] = solve_m0(params, spec, model, decomposition, grid[i]);
    CouponCurve m0_curve(grid, m0);
    ApproxCurve out{decomposition, m0_curve, std::vector<double>(grid.size()), std::vector<double>(grid.size()), {}, true};
    std::vector<double> approx(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto m1 = solve_m1(bank.source(i), spec, model, m0_curve, grid[i], workers);
        out.m1[i] = m1.value;
        out.std_error[i] = m1.std_error;
        approx[i] = m0[i] + m1.value;
        if (!(approx[i] > 0.0)) {
            out.positive = false;
            approx[i] = 0.0;
        }
    }
    out.approx = CouponCurve(std::move(grid), std::move(approx));
    return out;
}

/// Iterates of the naive fixed-point iteration m_n = A[m_{n-1}].
struct ContractionReport {
    std::vector<CouponCurve> iterates;  ///< m_1, m_2, ... (the initial curve is not included)
    std::vector<double> sup_deltas;     ///< max_x |m_n - m_{n-1}|
    bool converged = false;
    std::size_t iterations_used = 0;

    const CouponCurve& final_curve() const { return iterates.back(); }
};

/// One application of the operator A on the bank's grid with frozen paths.
///
/// Both slots of gamma(X_u, m(x), m(X_u)) take the previous iterate.
template <PathBank B, Intensity M>
CouponCurve contraction_step(const B& bank, const MortgageSpec& spec, const M& model, const CouponCurve& prev,
                             unsigned workers = 1) {
    detail::require_config(prev.size() == bank.size(), "contraction_step: curve and bank grids differ");
    std::vector<double> next(bank.size());
    for (std::size_t i = 0; i < bank.size(); ++i) {
        detail::require_config(prev.rate_grid()[i] == bank.rate(i), "contraction_step: curve and bank grids differ");
        const auto r = valuation_integrals(bank.source(i), spec, model, prev.value_at(i), prev, workers);
        if (!(r.denominator.value > 3.0 * r.denominator.std_error) || !std::isfinite(r.ratio()))
            throw SolverError("contraction_step: denominator near zero at x = " + std::to_string(bank.rate(i)));
        next[i] = std::max(r.ratio(), 0.0);
    }
    return {std::vector<double>(prev.rate_grid().begin(), prev.rate_grid().end()), std::move(next)};
}

/// Iterate contraction_step until the sup-norm change drops below `tol`.
/// Non-convergence is reported, not thrown. `on_iteration(n, sup_delta)` is called after each step.
template <PathBank B, Intensity M>
ContractionReport contraction_solve(const B& bank, const MortgageSpec& spec, const M& model,
                                    const CouponCurve& initial, double tol, std::size_t max_iter,
                                    unsigned workers = 1,
                                    const std::function<void(std::size_t, double)>& on_iteration = {}) {
    detail::require_config(tol > 0.0, "contraction_solve: tol must be positive");
    detail::require_config(max_iter >= 1, "contraction_solve: max_iter must be >= 1");
    ContractionReport report;
    CouponCurve prev = initial;
    for (std::size_t it = 0; it < max_iter; ++it) {
        CouponCurve next = contraction_step(bank, spec, model, prev, workers);
        const double delta = sup_distance(next, prev);
        report.sup_deltas.push_back(delta);
        report.iterates.push_back(next);
        report.iterations_used = it + 1;
        prev = std::move(next);
        if (on_iteration) on_iteration(it + 1, delta);
        if (delta < tol) {
            report.converged = true;
            break;
        }
    }
    return report;
}

}  // namespace mbscc
