#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "errors.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "roots.hpp"

namespace mbscc {

/// CIR short rate dr = kappa (theta - r) dt + sigma sqrt(r) dW.
struct CirParams {
    double kappa;
    double theta;
    double sigma;
    double r0;

    void validate() const {
        detail::require_config(kappa > 0.0 && theta > 0.0 && sigma > 0.0 && r0 > 0.0,
                               "CirParams: kappa, theta, sigma and r0 must all be positive");
        detail::require_config(std::isfinite(kappa) && std::isfinite(theta) && std::isfinite(sigma) &&
                                   std::isfinite(r0),
                               "CirParams: parameters must be finite");
    }

    /// 2 kappa theta >= sigma^2: the origin is unattainable. Recorded, not enforced.
    bool feller_satisfied() const noexcept { return 2.0 * kappa * theta >= sigma * sigma; }

    /// Degrees of freedom of the noncentral chi-square transition law.
    double degrees_of_freedom() const noexcept { return 4.0 * kappa * theta / (sigma * sigma); }

    CirParams with_r0(double x) const {
        CirParams p = *this;
        p.r0 = x;
        return p;
    }
};

/// Uniform time grid 0 = t_0 < ... < t_n = horizon.
class TimeGrid {
public:
    TimeGrid(double horizon, int steps_per_year) : horizon_(horizon) {
        detail::require_config(horizon > 0.0 && std::isfinite(horizon), "TimeGrid: horizon must be positive");
        detail::require_config(steps_per_year >= 1, "TimeGrid: steps_per_year must be >= 1");
        const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(horizon * steps_per_year - 1e-9)));
        dt_ = horizon / static_cast<double>(steps);
        times_.resize(steps + 1);
        for (std::size_t j = 0; j <= steps; ++j) times_[j] = dt_ * static_cast<double>(j);
        times_.back() = horizon;
    }

    double horizon() const noexcept { return horizon_; }
    double dt() const noexcept { return dt_; }
    std::size_t size() const noexcept { return times_.size(); }
    std::size_t steps() const noexcept { return times_.size() - 1; }
    double operator[](std::size_t j) const noexcept { return times_[j]; }
    std::span<const double> times() const noexcept { return times_; }

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

private:
    double horizon_;
    double dt_;
    std::vector<double> times_;
};

/// One simulated path: rates on the grid and the running trapezoid of the rate.
struct PathView {
    std::span<const double> rates;
    std::span<const double> cum_rate_integral;
};

/// Scratch storage used by sources that generate paths on demand.
struct PathBuffer {
    std::vector<double> rates;
    std::vector<double> cum_rate_integral;
};

/// Anything that can hand out path i of a fixed, reproducible set of paths.
template <class S>
concept PathSource = requires(const S& s, std::size_t i, PathBuffer& buf) {
    { s.n_paths() } -> std::convertible_to<std::size_t>;
    { s.grid() } -> std::convertible_to<const TimeGrid&>;
    { s.path(i, buf) } -> std::same_as<PathView>;
};

namespace detail {

/// Exact CIR transition sampler. Holds per-path distribution state.
class CirStepper {
public:
    CirStepper(const CirParams& p, double dt)
        : dof_(p.degrees_of_freedom()),
          decay_(std::exp(-p.kappa * dt)),
          scale_(p.sigma * p.sigma * -std::expm1(-p.kappa * dt) / (4.0 * p.kappa)),
          chi_(dof_ > 1.0 ? 0.5 * (dof_ - 1.0) : 1.0, 2.0) {}

    template <class Rng>
    double step(double r, Rng& rng) {
        const double noncentrality = r * decay_ / scale_;
        double x;
        if (dof_ > 1.0) {
            // chi'^2_d(l) = (Z + sqrt(l))^2 + chi^2_{d-1}
            const double z = normal_(rng) + std::sqrt(noncentrality);
            x = z * z + chi_(rng);
        } else {
            // Poisson mixture of central chi-squares.
            std::poisson_distribution<long> poisson(0.5 * noncentrality);
            const long n = noncentrality > 0.0 ? poisson(rng) : 0;
            const double shape = 0.5 * dof_ + static_cast<double>(n);
            x = std::gamma_distribution<double>(shape, 2.0)(rng);
        }
        return scale_ * x;
    }

private:
    double dof_;
    double decay_;
    double scale_;
    std::normal_distribution<double> normal_;
    std::gamma_distribution<double> chi_;
};

}  // namespace detail

/// Generate path `index` of the run keyed by `seed` into the given spans.
inline void generate_cir_path(const CirParams& params, const TimeGrid& grid, std::uint64_t seed,
                              std::size_t index, std::span<double> rates, std::span<double> cum) {
    auto rng = Xoshiro256::substream(seed, Stream::rates, index);
    detail::CirStepper stepper(params, grid.dt());
    double r = params.r0;
    rates[0] = r;
    cum[0] = 0.0;
    for (std::size_t j = 1; j < grid.size(); ++j) {
        const double next = stepper.step(r, rng);
        rates[j] = next;
        cum[j] = cum[j - 1] + 0.5 * (r + next) * (grid[j] - grid[j - 1]);
        r = next;
    }
}

/// Simulated CIR paths held in memory, row-major by path. Immutable after construction.
class PathSet {
public:
    PathSet(const CirParams& params, TimeGrid grid, std::size_t n_paths, std::uint64_t seed,
            unsigned workers = 1)
        : params_(params), grid_(std::move(grid)), n_paths_(n_paths), seed_(seed) {
        params_.validate();
        detail::require_config(n_paths >= 1, "PathSet: n_paths must be >= 1");
        const std::size_t n = grid_.size();
        rates_.resize(n_paths * n);
        cum_.resize(n_paths * n);
        parallel_for_chunks(n_paths, workers, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                generate_cir_path(params_, grid_, seed_, i, std::span(rates_).subspan(i * n, n),
                                  std::span(cum_).subspan(i * n, n));
            }
        });
    }

    std::size_t n_paths() const noexcept { return n_paths_; }
    const TimeGrid& grid() const noexcept { return grid_; }
    const CirParams& params() const noexcept { return params_; }
    std::uint64_t seed() const noexcept { return seed_; }
    /// Substream id of path i; the rate noise for path i depends only on (seed, i).
    static std::uint64_t substream_id(std::size_t i) noexcept { return i; }

    std::span<const double> rates(std::size_t i) const noexcept {
        return std::span(rates_).subspan(i * grid_.size(), grid_.size());
    }
    std::span<const double> cum_rate_integral(std::size_t i) const noexcept {
        return std::span(cum_).subspan(i * grid_.size(), grid_.size());
    }
    PathView path(std::size_t i) const noexcept { return {rates(i), cum_rate_integral(i)}; }
    PathView path(std::size_t i, PathBuffer&) const noexcept { return path(i); }

    friend bool operator==(const PathSet& a, const PathSet& b) {
        return a.grid_ == b.grid_ && a.rates_ == b.rates_ && a.cum_ == b.cum_;
    }

private:
    CirParams params_;
    TimeGrid grid_;
    std::size_t n_paths_;
    std::uint64_t seed_;
    std::vector<double> rates_;
    std::vector<double> cum_;
};

/// The same paths as a PathSet with identical arguments, regenerated on demand.
///
/// Used where holding every path in memory is too expensive (one path set per
/// reporting grid point across many fixed-point iterations).
class CirPathStream {
public:
    CirPathStream(const CirParams& params, TimeGrid grid, std::size_t n_paths, std::uint64_t seed)
        : params_(params), grid_(std::move(grid)), n_paths_(n_paths), seed_(seed) {
        params_.validate();
        detail::require_config(n_paths >= 1, "CirPathStream: n_paths must be >= 1");
    }

    std::size_t n_paths() const noexcept { return n_paths_; }
    const TimeGrid& grid() const noexcept { return grid_; }
    const CirParams& params() const noexcept { return params_; }
    std::uint64_t seed() const noexcept { return seed_; }

    PathView path(std::size_t i, PathBuffer& buf) const {
        const std::size_t n = grid_.size();
        buf.rates.resize(n);
        buf.cum_rate_integral.resize(n);
        generate_cir_path(params_, grid_, seed_, i, buf.rates, buf.cum_rate_integral);
        return {buf.rates, buf.cum_rate_integral};
    }

    PathSet materialize(unsigned workers = 1) const { return PathSet(params_, grid_, n_paths_, seed_, workers); }

private:
    CirParams params_;
    TimeGrid grid_;
    std::size_t n_paths_;
    std::uint64_t seed_;
};

static_assert(PathSource<PathSet>);
static_assert(PathSource<CirPathStream>);

/// Exact-transition CIR paths started at params.r0.
inline PathSet simulate_paths(const CirParams& params, double horizon, int steps_per_year, std::size_t n_paths,
                              std::uint64_t seed, unsigned workers = 1) {
    return PathSet(params, TimeGrid(horizon, steps_per_year), n_paths, seed, workers);
}

/// Zero-coupon bond E^x[exp(-int_0^t r du)] = A(t) exp(-B(t) x).
inline double bond_price(const CirParams& p, double x, double t) {
    detail::require_domain(t >= 0.0, "bond_price: negative maturity");
    detail::require_domain(x > 0.0, "bond_price: short rate must be positive");
    if (t == 0.0) return 1.0;
    const double h = std::sqrt(p.kappa * p.kappa + 2.0 * p.sigma * p.sigma);
    const double em1 = std::expm1(h * t);
    const double denom = 2.0 * h + (p.kappa + h) * em1;
    const double B = 2.0 * em1 / denom;
    // log A written in delta = h - kappa so every term is O(sigma^2); keeps the
    // 2 kappa theta / sigma^2 prefactor well conditioned as sigma -> 0.
    const double s2 = p.sigma * p.sigma;
    const double delta = 2.0 * s2 / (h + p.kappa);
    const double L = std::log1p(delta / (p.kappa + h)) - 0.5 * delta * t -
                     std::log1p(delta * std::exp(-h * t) / (p.kappa + h));
    const double logA = (2.0 * p.kappa * p.theta / s2) * L;
    return std::exp(logA - B * x);
}

/// Shape and scale of the Gamma invariant law of the CIR rate.
struct GammaLaw {
    double shape;
    double scale;
};

inline GammaLaw invariant_law(const CirParams& p) {
    return {2.0 * p.kappa * p.theta / (p.sigma * p.sigma), p.sigma * p.sigma / (2.0 * p.kappa)};
}

inline double invariant_pdf(const CirParams& p, double r) {
    detail::require_domain(r > 0.0, "invariant_pdf: rate must be positive");
    const auto [k, s] = invariant_law(p);
    return boost::math::gamma_p_derivative(k, r / s) / s;
}

inline double invariant_cdf(const CirParams& p, double r) {
    if (r <= 0.0) return 0.0;
    const auto [k, s] = invariant_law(p);
    if (k <= 1e10) return boost::math::gamma_p(k, r / s);
    // Nearly deterministic rate: Wilson-Hilferty, error O(1/k).
    const double v = 1.0 / (9.0 * k);
    const double z = (std::cbrt(r / (k * s)) - (1.0 - v)) / std::sqrt(v);
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

/// q-quantile of the invariant law by bisection on the regularized incomplete gamma.
inline double invariant_quantile(const CirParams& p, double q) {
    detail::require_domain(q > 0.0 && q < 1.0, "invariant_quantile: q must be in (0, 1)");
    const auto law = invariant_law(p);
    double hi = law.shape * law.scale;
    while (invariant_cdf(p, hi) < q) hi *= 2.0;
    return bisect([&](double r) { return invariant_cdf(p, r) - q; }, 0.0, hi, 1e-15 * hi).root;
}

}  // namespace mbscc
