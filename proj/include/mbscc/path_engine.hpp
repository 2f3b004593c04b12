#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "amortization.hpp"
#include "coupon_curve.hpp"
#include "errors.hpp"
#include "factor_model.hpp"
#include "intensity.hpp"
#include "parallel.hpp"

namespace mbscc {

/// Monte Carlo estimate of an expectation.
struct FunctionalEstimate {
    double value = 0.0;
    double std_error = 0.0;  ///< sample standard deviation / sqrt(n_paths)
    std::size_t n_paths = 0;
};

/// Sample mean and standard error, summed in index order.
inline FunctionalEstimate estimate(std::span<const double> samples) {
    const std::size_t n = samples.size();
    detail::require_config(n >= 1, "estimate: no samples");
    double sum = 0.0;
    for (double s : samples) sum += s;
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (double s : samples) ss += (s - mean) * (s - mean);
    const double var = n > 1 ? ss / static_cast<double>(n - 1) : 0.0;
    return {mean, std::sqrt(var / static_cast<double>(n)), n};
}

/// Sample covariance of the two means, cov(a, b) / n.
inline double covariance_of_means(std::span<const double> a, std::span<const double> b, double mean_a,
                                  double mean_b) {
    const std::size_t n = a.size();
    if (n < 2) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += (a[i] - mean_a) * (b[i] - mean_b);
    return s / static_cast<double>(n - 1) / static_cast<double>(n);
}

/// Monte Carlo sizing for one experiment.
struct McConfig {
    std::size_t n_paths = 50000;
    int steps_per_year = 12;
    std::uint64_t seed = 1;
    double horizon = 30.0;

    void validate() const {
        detail::require_config(n_paths >= 1, "McConfig: n_paths must be >= 1");
        detail::require_config(steps_per_year >= 1, "McConfig: steps_per_year must be >= 1");
        detail::require_config(horizon > 0.0, "McConfig: horizon must be positive");
    }
};

/// Numerator and denominator of a ratio, estimated on common paths.
struct RatioEstimate {
    FunctionalEstimate numerator;
    FunctionalEstimate denominator;
    double covariance = 0.0;  ///< covariance of the two means

    double ratio() const noexcept { return numerator.value / denominator.value; }

    /// Delta-method standard error of numerator / denominator.
    double ratio_std_error() const noexcept {
        const double q = ratio();
        const double d = denominator.value;
        const double v = numerator.std_error * numerator.std_error - 2.0 * q * covariance +
                         q * q * denominator.std_error * denominator.std_error;
        return std::sqrt(std::max(v, 0.0)) / std::abs(d);
    }
};

namespace detail {

inline void require_grid_matches(const TimeGrid& grid, const MortgageSpec& spec) {
    require_config(std::abs(grid.horizon() - spec.maturity()) <= 1e-12 * spec.maturity(),
                   "path grid horizon must equal the mortgage maturity");
}

/// Trapezoid weight of node j on a uniform grid.
inline double trapezoid_weight(const TimeGrid& grid, std::size_t j) noexcept {
    return (j == 0 || j + 1 == grid.size()) ? 0.5 * grid.dt() : grid.dt();
}

inline std::vector<double> balance_on_grid(const MortgageSpec& spec, const TimeGrid& grid, double m) {
    std::vector<double> p(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) p[j] = balance(spec, std::min(grid[j], spec.maturity()), m);
    return p;
}

template <Intensity M>
inline double gamma_unchecked(const M& model, double x, double m, double z) {
    return model.baseline(x) + model.epsilon() * model.perturbation(x, m, z);
}

/// Evaluate `kernel(i, PathView)` for every path, chunked across workers.
template <PathSource S, class Kernel>
void for_each_path(const S& source, unsigned workers, Kernel&& kernel) {
    parallel_for_chunks(source.n_paths(), workers, [&](std::size_t begin, std::size_t end) {
        PathBuffer buf;
        for (std::size_t i = begin; i < end; ++i) kernel(i, source.path(i, buf));
    });
}

inline RatioEstimate ratio_from_samples(std::span<const double> num, std::span<const double> den) {
    RatioEstimate r;
    r.numerator = estimate(num);
    r.denominator = estimate(den);
    r.covariance = covariance_of_means(num, den, r.numerator.value, r.denominator.value);
    return r;
}

}  // namespace detail

/// Numerator and denominator of the fixed-point operator at one starting rate:
///
///   N = E[ int_0^T p(t,m) r_t e^{-int_0^t (r+gamma)} dt ],
///   D = E[ int_0^T p(t,m)     e^{-int_0^t (r+gamma)} dt ],
///
/// with gamma_u = gamma(X_u, m_contract, z_curve(X_u)). Inner and outer integrals are
/// trapezoids on the path grid.
template <PathSource S, Intensity M>
RatioEstimate valuation_integrals(const S& paths, const MortgageSpec& spec, const M& model, double m_contract,
                                  const CouponCurve& z_curve, unsigned workers = 1) {
    detail::require_config(paths.n_paths() >= 1, "valuation_integrals: empty path set");
    detail::require_domain(m_contract >= 0.0, "valuation_integrals: negative contract rate");
    const TimeGrid& grid = paths.grid();
    detail::require_grid_matches(grid, spec);
    const auto p = detail::balance_on_grid(spec, grid, m_contract);
    const double dt = grid.dt();
    std::vector<double> num(paths.n_paths()), den(paths.n_paths());
    detail::for_each_path(paths, workers, [&](std::size_t i, PathView path) {
        double cum_gamma = 0.0;
        double g_prev = detail::gamma_unchecked(model, path.rates[0], m_contract, z_curve(path.rates[0]));
        double a = 0.0, b = 0.0;
        for (std::size_t j = 0; j < grid.size(); ++j) {
            const double r = path.rates[j];
            if (j > 0) {
                const double g = detail::gamma_unchecked(model, r, m_contract, z_curve(r));
                cum_gamma += 0.5 * (g_prev + g) * dt;
                g_prev = g;
            }
            const double w = detail::trapezoid_weight(grid, j) * p[j] * std::exp(-(path.cum_rate_integral[j] + cum_gamma));
            a += w * r;
            b += w;
        }
        num[i] = a;
        den[i] = b;
    });
    return detail::ratio_from_samples(num, den);
}

/// E[ int_0^T (m - r_t) p(t,m) e^{-int_0^t (r+gamma)} dt ]: the pool value minus par.
template <PathSource S, Intensity M>
FunctionalEstimate par_residual(const S& paths, const MortgageSpec& spec, const M& model, double m_contract,
                                const CouponCurve& z_curve, unsigned workers = 1) {
    const TimeGrid& grid = paths.grid();
    detail::require_grid_matches(grid, spec);
    const auto p = detail::balance_on_grid(spec, grid, m_contract);
    const double dt = grid.dt();
    std::vector<double> out(paths.n_paths());
    detail::for_each_path(paths, workers, [&](std::size_t i, PathView path) {
        double cum_gamma = 0.0;
        double g_prev = detail::gamma_unchecked(model, path.rates[0], m_contract, z_curve(path.rates[0]));
        double acc = 0.0;
        for (std::size_t j = 0; j < grid.size(); ++j) {
            const double r = path.rates[j];
            if (j > 0) {
                const double g = detail::gamma_unchecked(model, r, m_contract, z_curve(r));
                cum_gamma += 0.5 * (g_prev + g) * dt;
                g_prev = g;
            }
            acc += detail::trapezoid_weight(grid, j) * (m_contract - r) * p[j] *
                   std::exp(-(path.cum_rate_integral[j] + cum_gamma));
        }
        out[i] = acc;
    });
    return estimate(out);
}

/// Numerator and denominator of the first-order correction around m0:
///
///   N = E[ int_0^T (m0 - r_t) p(t,m0) (int_0^t eps*gamma_1(X_u, m0, m0(X_u)) du) e^{-int_0^t (r+gamma_0)} dt ]
///   D = E[ int_0^T ((m0 - r_t) p_m(t,m0) + p(t,m0)) e^{-int_0^t (r+gamma_0)} dt ]
///
/// The perturbation enters scaled by the model's epsilon, so N/D is the correction
/// term epsilon * m1.
template <PathSource S, Intensity M>
RatioEstimate m1_integrals(const S& paths, const MortgageSpec& spec, const M& model, double m0_at_x,
                           const CouponCurve& m0_curve, unsigned workers = 1) {
    detail::require_config(paths.n_paths() >= 1, "m1_integrals: empty path set");
    detail::require_domain(m0_at_x >= 0.0, "m1_integrals: negative m0");
    const TimeGrid& grid = paths.grid();
    detail::require_grid_matches(grid, spec);
    const auto p = detail::balance_on_grid(spec, grid, m0_at_x);
    std::vector<double> pm(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) pm[j] = balance_dm(spec, std::min(grid[j], spec.maturity()), m0_at_x);
    const double dt = grid.dt();
    const double eps = model.epsilon();
    std::vector<double> num(paths.n_paths()), den(paths.n_paths());
    detail::for_each_path(paths, workers, [&](std::size_t i, PathView path) {
        double cum_g0 = 0.0;
        double cum_g1 = 0.0;
        double g0_prev = model.baseline(path.rates[0]);
        double g1_prev = eps * model.perturbation(path.rates[0], m0_at_x, m0_curve(path.rates[0]));
        double a = 0.0, b = 0.0;
        for (std::size_t j = 0; j < grid.size(); ++j) {
            const double r = path.rates[j];
            if (j > 0) {
                const double g0 = model.baseline(r);
                const double g1 = eps * model.perturbation(r, m0_at_x, m0_curve(r));
                cum_g0 += 0.5 * (g0_prev + g0) * dt;
                cum_g1 += 0.5 * (g1_prev + g1) * dt;
                g0_prev = g0;
                g1_prev = g1;
            }
            const double w = detail::trapezoid_weight(grid, j) * std::exp(-(path.cum_rate_integral[j] + cum_g0));
            a += w * (m0_at_x - r) * p[j] * cum_g1;
            b += w * ((m0_at_x - r) * pm[j] + p[j]);
        }
        num[i] = a;
        den[i] = b;
    });
    return detail::ratio_from_samples(num, den);
}

/// Pointwise baseline functionals on the path grid:
///   f(t) = E[e^{-int_0^t (r+gamma_0)}],  F(t) = int_0^t f,
///   H(t) = 1 - E[int_0^t gamma_0(X_u) e^{-int_0^u (r+gamma_0)} du].
struct BaselineIntegrals {
    std::vector<double> times;
    std::vector<double> f;
    std::vector<double> f_se;
    std::vector<double> F;
    std::vector<double> H;
    std::vector<double> H_se;
    std::size_t n_paths = 0;
};

namespace detail {

/// Per-path f and H on the grid for a baseline-only intensity.
template <class Baseline>
void baseline_path(const TimeGrid& grid, PathView path, const Baseline& gamma0, std::span<double> f,
                   std::span<double> H) {
    const double dt = grid.dt();
    double cum_g = 0.0;
    double g_prev = gamma0(path.rates[0]);
    double integrand_prev = g_prev;  // gamma_0 * f at t = 0
    double cum_h = 0.0;
    f[0] = 1.0;
    H[0] = 1.0;
    for (std::size_t j = 1; j < grid.size(); ++j) {
        const double g = gamma0(path.rates[j]);
        cum_g += 0.5 * (g_prev + g) * dt;
        g_prev = g;
        f[j] = std::exp(-(path.cum_rate_integral[j] + cum_g));
        const double integrand = g * f[j];
        cum_h += 0.5 * (integrand_prev + integrand) * dt;
        integrand_prev = integrand;
        H[j] = 1.0 - cum_h;
    }
}

// Fixed-size blocks make the node-wise sums independent of the worker count.
inline constexpr std::size_t reduction_block = 256;

}  // namespace detail

/// f, F and H for the baseline part of `model` (the perturbation is ignored).
template <PathSource S, Intensity M>
BaselineIntegrals baseline_integrals(const S& paths, const M& model, unsigned workers = 1) {
    detail::require_config(paths.n_paths() >= 1, "baseline_integrals: empty path set");
    const TimeGrid& grid = paths.grid();
    const std::size_t n = grid.size();
    const std::size_t n_paths = paths.n_paths();
    const std::size_t n_blocks = (n_paths + detail::reduction_block - 1) / detail::reduction_block;
    // per block: sum f, sum f^2, sum H, sum H^2
    std::vector<double> partial(n_blocks * 4 * n, 0.0);
    auto gamma0 = [&model](double x) { return model.baseline(x); };
    parallel_for_chunks(n_blocks, workers, [&](std::size_t b0, std::size_t b1) {
        PathBuffer buf;
        std::vector<double> f(n), H(n);
        for (std::size_t b = b0; b < b1; ++b) {
            double* acc = partial.data() + b * 4 * n;
            const std::size_t end = std::min(n_paths, (b + 1) * detail::reduction_block);
            for (std::size_t i = b * detail::reduction_block; i < end; ++i) {
                detail::baseline_path(grid, paths.path(i, buf), gamma0, f, H);
                for (std::size_t j = 0; j < n; ++j) {
                    acc[j] += f[j];
                    acc[n + j] += f[j] * f[j];
                    acc[2 * n + j] += H[j];
                    acc[3 * n + j] += H[j] * H[j];
                }
            }
        }
    });
    std::vector<double> sums(4 * n, 0.0);
    for (std::size_t b = 0; b < n_blocks; ++b)
        for (std::size_t k = 0; k < 4 * n; ++k) sums[k] += partial[b * 4 * n + k];

    BaselineIntegrals out;
    out.n_paths = n_paths;
    out.times.assign(grid.times().begin(), grid.times().end());
    out.f.resize(n);
    out.f_se.resize(n);
    out.H.resize(n);
    out.H_se.resize(n);
    out.F.resize(n);
    const double dn = static_cast<double>(n_paths);
    auto se = [dn](double s, double s2) {
        if (dn < 2.0) return 0.0;
        const double mean = s / dn;
        const double var = std::max(0.0, (s2 - dn * mean * mean) / (dn - 1.0));
        return std::sqrt(var / dn);
    };
    for (std::size_t j = 0; j < n; ++j) {
        out.f[j] = sums[j] / dn;
        out.f_se[j] = se(sums[j], sums[n + j]);
        out.H[j] = sums[2 * n + j] / dn;
        out.H_se[j] = se(sums[2 * n + j], sums[3 * n + j]);
    }
    out.F[0] = 0.0;
    for (std::size_t j = 1; j < n; ++j) out.F[j] = out.F[j - 1] + 0.5 * (out.f[j - 1] + out.f[j]) * grid.dt();
    return out;
}

}  // namespace mbscc
