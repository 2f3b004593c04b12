#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "amortization.hpp"
#include "coupon_curve.hpp"
#include "errors.hpp"
#include "factor_model.hpp"
#include "intensity.hpp"
#include "path_engine.hpp"
#include "rng.hpp"

namespace mbscc {

/// An N-loan pool with a common contract rate; each loan has size 1/N.
template <Intensity M>
struct LoanPoolConfig {
    std::size_t n_loans;
    double contract_rate;
    MortgageSpec spec;
    M model;
    CouponCurve z_curve;  ///< refinancing rate as a function of the factor

    void validate() const {
        detail::require_config(n_loans >= 1, "LoanPoolConfig: n_loans must be >= 1");
        detail::require_config(contract_rate >= 0.0, "LoanPoolConfig: contract_rate must be >= 0");
        detail::require_config(!z_curve.empty(), "LoanPoolConfig: z_curve is empty");
    }
};

/// First time the cumulative intensity reaches -ln(u), linearly interpolated inside
/// the grid cell. Empty if it is not reached by the end of the grid.
inline std::optional<double> sample_prepayment_time(std::span<const double> times, std::span<const double> cum_gamma,
                                                    double u) {
    detail::require_domain(u > 0.0 && u < 1.0, "sample_prepayment_time: u must be in (0, 1)");
    const double target = -std::log(u);
    if (cum_gamma.empty() || cum_gamma.back() < target) return std::nullopt;
    const auto it = std::lower_bound(cum_gamma.begin(), cum_gamma.end(), target);
    const auto j = static_cast<std::size_t>(it - cum_gamma.begin());
    if (j == 0) return times[0];
    const double g0 = cum_gamma[j - 1];
    const double g1 = cum_gamma[j];
    const double w = g1 > g0 ? (target - g0) / (g1 - g0) : 1.0;
    return times[j - 1] + w * (times[j] - times[j - 1]);
}

namespace detail {

/// Per-path quantities shared by the pool estimators.
struct PoolPath {
    std::vector<double> cum_gamma;     // trapezoid of gamma
    std::vector<double> gamma;         // gamma at nodes
    std::vector<double> coupon_leg;    // int_0^{t_j} c e^{-R} dt, trapezoid
};

template <Intensity M>
void fill_pool_path(const TimeGrid& grid, PathView path, const LoanPoolConfig<M>& pool, double c, PoolPath& out) {
    const std::size_t n = grid.size();
    out.cum_gamma.resize(n);
    out.gamma.resize(n);
    out.coupon_leg.resize(n);
    const double m = pool.contract_rate;
    out.gamma[0] = gamma_unchecked(pool.model, path.rates[0], m, pool.z_curve(path.rates[0]));
    out.cum_gamma[0] = 0.0;
    out.coupon_leg[0] = 0.0;
    double d_prev = 1.0;
    for (std::size_t j = 1; j < n; ++j) {
        const double r = path.rates[j];
        out.gamma[j] = gamma_unchecked(pool.model, r, m, pool.z_curve(r));
        out.cum_gamma[j] = out.cum_gamma[j - 1] + 0.5 * (out.gamma[j - 1] + out.gamma[j]) * grid.dt();
        const double d = std::exp(-path.cum_rate_integral[j]);
        out.coupon_leg[j] = out.coupon_leg[j - 1] + 0.5 * c * (d_prev + d) * grid.dt();
        d_prev = d;
    }
}

/// Discounted cash flows of one loan prepaying at tau (or never).
inline double loan_cash_flows(const TimeGrid& grid, PathView path, const PoolPath& pp, const MortgageSpec& spec,
                              double m, double c, std::optional<double> tau) {
    if (!tau) return pp.coupon_leg.back();
    const double t = *tau;
    const std::size_t n = grid.size();
    std::size_t j = std::min(static_cast<std::size_t>(t / grid.dt()), n - 2);
    while (j > 0 && grid[j] > t) --j;
    while (j + 2 < n && grid[j + 1] <= t) ++j;
    const double w = (t - grid[j]) / (grid[j + 1] - grid[j]);
    const double R_tau = path.cum_rate_integral[j] + w * (path.cum_rate_integral[j + 1] - path.cum_rate_integral[j]);
    const double d_j = std::exp(-path.cum_rate_integral[j]);
    const double d_tau = std::exp(-R_tau);
    const double coupons = pp.coupon_leg[j] + 0.5 * c * (d_j + d_tau) * (t - grid[j]);
    return coupons + balance(spec, std::min(t, spec.maturity()), m) * d_tau;
}

}  // namespace detail

/// Direct cash-flow value of the pool: each loan pays c(m) until tau ^ T and the
/// scheduled balance at tau. Each path contributes the pool average over its loans;
/// loan k on path i uses uniform k of substream (seed, prepayment, i).
template <PathSource S, Intensity M>
FunctionalEstimate price_loan_direct(const S& paths, const LoanPoolConfig<M>& pool, std::uint64_t uniform_seed,
                                     unsigned workers = 1) {
    pool.validate();
    detail::require_config(paths.n_paths() >= 1, "price_loan_direct: empty path set");
    const TimeGrid& grid = paths.grid();
    detail::require_grid_matches(grid, pool.spec);
    const double m = pool.contract_rate;
    const double c = coupon_rate(pool.spec, m);
    std::vector<double> value(paths.n_paths());
    parallel_for_chunks(paths.n_paths(), workers, [&](std::size_t begin, std::size_t end) {
        PathBuffer buf;
        detail::PoolPath pp;
        for (std::size_t i = begin; i < end; ++i) {
            const PathView path = paths.path(i, buf);
            detail::fill_pool_path(grid, path, pool, c, pp);
            auto rng = Xoshiro256::substream(uniform_seed, Stream::prepayment, i);
            double sum = 0.0;
            for (std::size_t k = 0; k < pool.n_loans; ++k) {
                const auto tau = sample_prepayment_time(grid.times(), pp.cum_gamma, rng.uniform_open());
                sum += detail::loan_cash_flows(grid, path, pp, pool.spec, m, c, tau);
            }
            value[i] = sum / static_cast<double>(pool.n_loans);
        }
    });
    return estimate(value);
}

/// Pool value in intensity form, computed two ways on the same paths:
///   par_form:       1 + E[int_0^T p (m - r) e^{-int (r+gamma)} dt]
///   cash_flow_form: E[int_0^T (c + p gamma) e^{-int (r+gamma)} dt]
/// They are equal by integration by parts; `max_path_gap` is the largest per-path
/// difference, which measures quadrature error only.
struct IntensityFormPrice {
    FunctionalEstimate par_form;
    FunctionalEstimate cash_flow_form;
    double max_path_gap = 0.0;
};

template <PathSource S, Intensity M>
IntensityFormPrice price_pool_intensity_form(const S& paths, const LoanPoolConfig<M>& pool, unsigned workers = 1) {
    pool.validate();
    detail::require_config(paths.n_paths() >= 1, "price_pool_intensity_form: empty path set");
    const TimeGrid& grid = paths.grid();
    detail::require_grid_matches(grid, pool.spec);
    const double m = pool.contract_rate;
    const double c = coupon_rate(pool.spec, m);
    const auto p = detail::balance_on_grid(pool.spec, grid, m);
    std::vector<double> par(paths.n_paths()), cash(paths.n_paths());
    parallel_for_chunks(paths.n_paths(), workers, [&](std::size_t begin, std::size_t end) {
        PathBuffer buf;
        detail::PoolPath pp;
        for (std::size_t i = begin; i < end; ++i) {
            const PathView path = paths.path(i, buf);
            detail::fill_pool_path(grid, path, pool, c, pp);
            double a = 0.0, b = 0.0;
            for (std::size_t j = 0; j < grid.size(); ++j) {
                const double w = detail::trapezoid_weight(grid, j) *
                                 std::exp(-(path.cum_rate_integral[j] + pp.cum_gamma[j]));
                a += w * p[j] * (m - path.rates[j]);
                b += w * (c + p[j] * pp.gamma[j]);
            }
            par[i] = 1.0 + a;
            cash[i] = b;
        }
    });
    IntensityFormPrice out{estimate(par), estimate(cash), 0.0};
    for (std::size_t i = 0; i < par.size(); ++i) out.max_path_gap = std::max(out.max_path_gap, std::abs(par[i] - cash[i]));
    return out;
}

/// Empirical survival P(tau > t) against E[exp(-int_0^t gamma)] on shared paths.
struct SurvivalRow {
    double t;
    double empirical;
    double expected;
    FunctionalEstimate difference;  ///< paired per-path difference
};

template <PathSource S, Intensity M>
std::vector<SurvivalRow> survival_check(const S& paths, const LoanPoolConfig<M>& pool, std::uint64_t uniform_seed,
                                        std::span<const double> check_times, unsigned workers = 1) {
    pool.validate();
    const TimeGrid& grid = paths.grid();
    const double c = coupon_rate(pool.spec, pool.contract_rate);
    const std::size_t n_t = check_times.size();
    std::vector<double> emp(paths.n_paths() * n_t), expct(paths.n_paths() * n_t);
    parallel_for_chunks(paths.n_paths(), workers, [&](std::size_t begin, std::size_t end) {
        PathBuffer buf;
        detail::PoolPath pp;
        for (std::size_t i = begin; i < end; ++i) {
            const PathView path = paths.path(i, buf);
            detail::fill_pool_path(grid, path, pool, c, pp);
            auto rng = Xoshiro256::substream(uniform_seed, Stream::prepayment, i);
            std::vector<std::optional<double>> taus(pool.n_loans);
            for (auto& tau : taus) tau = sample_prepayment_time(grid.times(), pp.cum_gamma, rng.uniform_open());
            for (std::size_t k = 0; k < n_t; ++k) {
                const double t = check_times[k];
                std::size_t alive = 0;
                for (const auto& tau : taus) alive += (!tau || *tau > t) ? 1 : 0;
                emp[i * n_t + k] = static_cast<double>(alive) / static_cast<double>(pool.n_loans);
                // cumulative intensity at t, linear between nodes
                const double pos = std::clamp(t / grid.dt(), 0.0, static_cast<double>(grid.steps()));
                const auto j = std::min(static_cast<std::size_t>(pos), grid.steps() - 1);
                const double w = pos - static_cast<double>(j);
                const double G = pp.cum_gamma[j] + w * (pp.cum_gamma[j + 1] - pp.cum_gamma[j]);
                expct[i * n_t + k] = std::exp(-G);
            }
        }
    });
    std::vector<SurvivalRow> rows;
    std::vector<double> e(paths.n_paths()), x(paths.n_paths()), d(paths.n_paths());
    for (std::size_t k = 0; k < n_t; ++k) {
        for (std::size_t i = 0; i < paths.n_paths(); ++i) {
            e[i] = emp[i * n_t + k];
            x[i] = expct[i * n_t + k];
            d[i] = e[i] - x[i];
        }
        rows.push_back({check_times[k], estimate(e).value, estimate(x).value, estimate(d)});
    }
    return rows;
}

/// Finite-pool average against the conditional-expectation cash flow, per pool size.
struct LlnRow {
    std::size_t n_loans;
    FunctionalEstimate mean_deviation;  ///< E[pool average - cash-flow form]
    double rms_deviation;               ///< sqrt(E[(pool average - cash-flow form)^2])
};

template <PathSource S, Intensity M>
std::vector<LlnRow> large_pool_convergence(const S& paths, LoanPoolConfig<M> pool, std::span<const std::size_t> pool_sizes,
                                           std::uint64_t uniform_seed, unsigned workers = 1) {
    std::vector<LlnRow> rows;
    const TimeGrid& grid = paths.grid();
    const double m = pool.contract_rate;
    const double c = coupon_rate(pool.spec, m);
    const auto p = detail::balance_on_grid(pool.spec, grid, m);
    for (std::size_t n_loans : pool_sizes) {
        pool.n_loans = n_loans;
        pool.validate();
        std::vector<double> dev(paths.n_paths());
        parallel_for_chunks(paths.n_paths(), workers, [&](std::size_t begin, std::size_t end) {
            PathBuffer buf;
            detail::PoolPath pp;
            for (std::size_t i = begin; i < end; ++i) {
                const PathView path = paths.path(i, buf);
                detail::fill_pool_path(grid, path, pool, c, pp);
                double cash = 0.0;
                for (std::size_t j = 0; j < grid.size(); ++j)
                    cash += detail::trapezoid_weight(grid, j) * (c + p[j] * pp.gamma[j]) *
                            std::exp(-(path.cum_rate_integral[j] + pp.cum_gamma[j]));
                auto rng = Xoshiro256::substream(uniform_seed, Stream::prepayment, i);
                double sum = 0.0;
                for (std::size_t k = 0; k < n_loans; ++k) {
                    const auto tau = sample_prepayment_time(grid.times(), pp.cum_gamma, rng.uniform_open());
                    sum += detail::loan_cash_flows(grid, path, pp, pool.spec, m, c, tau);
                }
                dev[i] = sum / static_cast<double>(n_loans) - cash;
            }
        });
        double ss = 0.0;
        for (double d : dev) ss += d * d;
        rows.push_back({n_loans, estimate(dev), std::sqrt(ss / static_cast<double>(dev.size()))});
    }
    return rows;
}

/// Least-squares slope of log(rms_deviation) against log(n_loans).
inline double lln_log_slope(std::span<const LlnRow> rows) {
    const double n = static_cast<double>(rows.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& r : rows) {
        const double x = std::log(static_cast<double>(r.n_loans));
        const double y = std::log(r.rms_deviation);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace mbscc
