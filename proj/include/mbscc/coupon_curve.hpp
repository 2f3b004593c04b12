#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "errors.hpp"

namespace mbscc {

/// Current-coupon function m(x) sampled on a rate grid.
///
/// Linear interpolation between nodes, flat extrapolation outside. Evaluating at a
/// node returns the stored value exactly.
class CouponCurve {
public:
    CouponCurve() = default;

    CouponCurve(std::vector<double> rate_grid, std::vector<double> values)
        : grid_(std::move(rate_grid)), values_(std::move(values)) {
        detail::require_config(!grid_.empty() && grid_.size() == values_.size(),
                               "CouponCurve: grid and values must be nonempty and of equal length");
        for (std::size_t i = 0; i < grid_.size(); ++i) {
            detail::require_config(std::isfinite(grid_[i]), "CouponCurve: grid must be finite");
            detail::require_config(std::isfinite(values_[i]) && values_[i] >= 0.0,
                                   "CouponCurve: values must be finite and nonnegative");
            if (i > 0)
                detail::require_config(grid_[i] > grid_[i - 1], "CouponCurve: grid must be strictly increasing");
        }
        detect_uniform();
    }

    /// Curve with m(x) = f(x) on the grid.
    template <class F>
    static CouponCurve from_function(std::vector<double> rate_grid, F&& f) {
        std::vector<double> v(rate_grid.size());
        std::transform(rate_grid.begin(), rate_grid.end(), v.begin(), f);
        return {std::move(rate_grid), std::move(v)};
    }

    std::size_t size() const noexcept { return grid_.size(); }
    bool empty() const noexcept { return grid_.empty(); }
    std::span<const double> rate_grid() const noexcept { return grid_; }
    std::span<const double> values() const noexcept { return values_; }
    double value_at(std::size_t i) const noexcept { return values_[i]; }

    double operator()(double x) const noexcept {
        const std::size_t n = grid_.size();
        if (x <= grid_.front()) return values_.front();
        if (x >= grid_.back()) return values_.back();
        std::size_t i;
        if (uniform_) {
            i = static_cast<std::size_t>((x - grid_.front()) * inv_spacing_);
            i = std::min(i, n - 2);
            while (i > 0 && grid_[i] > x) --i;
            while (i + 2 < n && grid_[i + 1] <= x) ++i;
        } else {
            i = static_cast<std::size_t>(std::upper_bound(grid_.begin(), grid_.end(), x) - grid_.begin()) - 1;
        }
        const double w = (x - grid_[i]) / (grid_[i + 1] - grid_[i]);
        return values_[i] + w * (values_[i + 1] - values_[i]);
    }

    /// max_i |a_i - b_i| over a shared grid.
    friend double sup_distance(const CouponCurve& a, const CouponCurve& b) {
        detail::require_config(a.grid_ == b.grid_, "sup_distance: curves on different grids");
        double d = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a.values_[i] - b.values_[i]));
        return d;
    }

    friend bool operator==(const CouponCurve& a, const CouponCurve& b) {
        return a.grid_ == b.grid_ && a.values_ == b.values_;
    }

private:
    void detect_uniform() {
        uniform_ = false;
        if (grid_.size() < 3) return;
        const double h = (grid_.back() - grid_.front()) / static_cast<double>(grid_.size() - 1);
        for (std::size_t i = 1; i < grid_.size(); ++i)
            if (std::abs(grid_[i] - grid_[i - 1] - h) > 1e-9 * h) return;
        uniform_ = true;
        inv_spacing_ = 1.0 / h;
    }

    std::vector<double> grid_;
    std::vector<double> values_;
    bool uniform_ = false;
    double inv_spacing_ = 0.0;
};

/// n equally spaced rates on [lo, hi].
inline std::vector<double> linear_grid(double lo, double hi, std::size_t n) {
    detail::require_config(n >= 1, "linear_grid: n must be >= 1");
    detail::require_config(n == 1 || hi > lo, "linear_grid: hi must exceed lo");
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    if (n > 1) g.back() = hi;
    return g;
}

}  // namespace mbscc
