#pragma once

#include <cmath>
#include <string>

#include "errors.hpp"

namespace mbscc {

/// Result of a bracketed scalar solve.
struct RootResult {
    double root;
    double residual;
    int iterations;
};

/// Bisection for a continuous function with a sign change on [lo, hi].
///
/// Stops when the bracket is narrower than `x_tol`. Throws SolverError with both
/// endpoint residuals if f(lo) and f(hi) have the same strict sign.
template <class F>
RootResult bisect(F&& f, double lo, double hi, double x_tol = 1e-10, int max_iter = 400) {
    double f_lo = f(lo);
    double f_hi = f(hi);
    if (f_lo == 0.0) return {lo, f_lo, 0};
    if (f_hi == 0.0) return {hi, f_hi, 0};
    if (!(std::isfinite(f_lo) && std::isfinite(f_hi)) || (f_lo > 0.0) == (f_hi > 0.0)) {
        throw SolverError("bisect: residuals at [" + std::to_string(lo) + ", " + std::to_string(hi) +
                              "] do not bracket a root (" + std::to_string(f_lo) + ", " +
                              std::to_string(f_hi) + ")",
                          f_lo, f_hi);
    }
    int it = 0;
    while (hi - lo > x_tol && it < max_iter) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double f_mid = f(mid);
        ++it;
        if (f_mid == 0.0) return {mid, 0.0, it};
        if ((f_mid > 0.0) == (f_lo > 0.0)) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    const double root = 0.5 * (lo + hi);
    return {root, f(root), it};
}

/// Result of a bracketed scalar minimization.
struct MinimumResult {
    double argmin;
    double value;
};

/// Golden-section search for the minimum of a unimodal function on [lo, hi].
template <class F>
MinimumResult golden_section_minimize(F&& f, double lo, double hi, double x_tol = 1e-10) {
    constexpr double inv_phi = 0.6180339887498948482;
    double a = lo;
    double b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > x_tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    const double x = 0.5 * (a + b);
    return {x, f(x)};
}

}  // namespace mbscc
