#pragma once

// Independent reference computations used only by the tests. Nothing here calls
// into the library paths it is used to check.

#include <cmath>
#include <cstddef>
#include <functional>

namespace oracle {

/// Composite Simpson rule with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, std::size_t n = 20000) {
    if (n % 2) ++n;
    const double h = (b - a) / static_cast<double>(n);
    double s = f(a) + f(b);
    for (std::size_t i = 1; i < n; ++i) s += f(a + h * static_cast<double>(i)) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

/// Plain bisection, no early exits.
inline double bisection(const std::function<double(double)>& f, double lo, double hi, int iters = 200) {
    const bool lo_neg = f(lo) < 0.0;
    for (int i = 0; i < iters; ++i) {
        const double mid = 0.5 * (lo + hi);
        if ((f(mid) < 0.0) == lo_neg) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

/// Xi by brute force over a 10^6-point grid in beta, then a golden-section polish.
inline double xi_brute_force(double x) {
    auto g = [x](double b) { return b * std::exp(-b * x) / ((1.0 - b) * (1.0 - std::exp(-b * x))); };
    const std::size_t n = 1000000;
    const double lo = 1e-6, hi = 1.0 - 1e-6;
    double best = g(lo), best_b = lo;
    for (std::size_t i = 1; i < n; ++i) {
        const double b = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        const double v = g(b);
        if (v < best) { best = v; best_b = b; }
    }
    const double step = (hi - lo) / static_cast<double>(n - 1);
    double a = std::max(lo, best_b - step), c = std::min(hi, best_b + step);
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int i = 0; i < 200; ++i) {
        const double x1 = c - r * (c - a), x2 = a + r * (c - a);
        if (g(x1) < g(x2)) c = x2; else a = x1;
    }
    return std::min(best, g(0.5 * (a + c)));
}

/// Closed-form scheduled balance, written out independently.
inline double balance(double T, double t, double m) {
    if (m == 0.0) return 1.0 - t / T;
    return (1.0 - std::exp(-m * (T - t))) / (1.0 - std::exp(-m * T));
}

/// Analytic CIR conditional moments of r_t given r_0.
inline double cir_mean(double kappa, double theta, double r0, double t) {
    return theta + (r0 - theta) * std::exp(-kappa * t);
}
inline double cir_variance(double kappa, double theta, double sigma, double r0, double t) {
    const double e = std::exp(-kappa * t);
    return r0 * sigma * sigma / kappa * (e - e * e) + theta * sigma * sigma / (2.0 * kappa) * (1.0 - e) * (1.0 - e);
}

}  // namespace oracle
