#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "amortization.hpp"
#include "errors.hpp"

namespace mbscc {

/// Prepayment intensity gamma(x, m, z) = baseline(x) + epsilon * perturbation(x, m, z).
///
/// x is the factor (short rate), m the contract rate, z the refinancing rate.
template <class M>
concept Intensity = requires(const M& g, double x, double m, double z) {
    { g.baseline(x) } -> std::convertible_to<double>;
    { g.perturbation(x, m, z) } -> std::convertible_to<double>;
    { g.epsilon() } -> std::convertible_to<double>;
};

/// How a total intensity is split into a factor-only baseline and a perturbation.
enum class Decomposition {
    zero_baseline,      ///< gamma_0 = 0, gamma_1 = gamma
    constant_baseline,  ///< gamma_0 = constant floor, gamma_1 = gamma - floor
};

inline std::string to_string(Decomposition d) {
    return d == Decomposition::zero_baseline ? "zero" : "const";
}

/// Baseline a + b x. The canonical model uses b = 0.
struct AffineRate {
    double level = 0.0;
    double slope = 0.0;
    double operator()(double x) const noexcept { return level + slope * x; }
    bool is_constant() const noexcept { return slope == 0.0; }
};

/// Perturbation a + b x + k (m - z)^+.
struct RefiIncentive {
    double level = 0.0;
    double slope = 0.0;
    double k = 0.0;
    double operator()(double x, double m, double z) const noexcept {
        return level + slope * x + k * std::max(m - z, 0.0);
    }
};

/// Baseline plus scaled perturbation, both supplied as callables.
template <class Baseline, class Perturbation>
class IntensityModel {
public:
    IntensityModel(Baseline baseline, Perturbation perturbation, double epsilon = 1.0)
        : baseline_(std::move(baseline)), perturbation_(std::move(perturbation)), epsilon_(epsilon) {
        detail::require_config(epsilon >= 0.0 && std::isfinite(epsilon), "IntensityModel: epsilon must be >= 0");
    }

    double baseline(double x) const { return baseline_(x); }
    double perturbation(double x, double m, double z) const { return perturbation_(x, m, z); }
    double epsilon() const noexcept { return epsilon_; }

    const Baseline& baseline_fn() const noexcept { return baseline_; }
    const Perturbation& perturbation_fn() const noexcept { return perturbation_; }

    IntensityModel with_epsilon(double epsilon) const { return {baseline_, perturbation_, epsilon}; }

    /// Same model with the perturbation switched off.
    IntensityModel baseline_only() const { return with_epsilon(0.0); }

private:
    Baseline baseline_;
    Perturbation perturbation_;
    double epsilon_;
};

using StandardIntensity = IntensityModel<AffineRate, RefiIncentive>;

/// Full intensity gamma(x, m, z).
template <Intensity M>
double eval(const M& model, double x, double m, double z) {
    detail::require_domain(m >= 0.0 && z >= 0.0, "intensity: contract and refinancing rates must be >= 0");
    return model.baseline(x) + model.epsilon() * model.perturbation(x, m, z);
}

/// gamma + k (m - z)^+ with an optional rate-linear turnover term gamma_slope * x.
struct RefiIncentiveIntensity {
    double gamma_base = 0.0;
    double k = 0.0;
    double gamma_slope = 0.0;

    void validate() const {
        detail::require_config(gamma_base >= 0.0 && k >= 0.0 && gamma_slope >= 0.0,
                               "refi-incentive: gamma_base, k and gamma_slope must be >= 0");
    }

    double operator()(double x, double m, double z) const {
        return gamma_base + gamma_slope * x + k * std::max(m - z, 0.0);
    }

    StandardIntensity decompose(Decomposition d, double epsilon = 1.0) const {
        validate();
        if (d == Decomposition::zero_baseline)
            return {AffineRate{}, RefiIncentive{gamma_base, gamma_slope, k}, epsilon};
        detail::require_config(gamma_slope == 0.0,
                               "constant-baseline decomposition requires a constant baseline intensity "
                               "(gamma_slope must be 0)");
        return {AffineRate{gamma_base, 0.0}, RefiIncentive{0.0, 0.0, k}, epsilon};
    }
};

/// Grid point where the contract-rate sensitivity leaves [0, Xi(mT)], or has a kink.
struct AdmissibilityFinding {
    double x;
    double m;
    double z;
    double gamma_m;  ///< central difference estimate
    double bound;    ///< Xi(m T); +inf at m = 0
    enum class Kind { negative_slope, above_bound, non_smooth } kind;
};

struct AdmissibilityReport {
    std::size_t points_checked = 0;
    std::vector<AdmissibilityFinding> violations;
    std::vector<AdmissibilityFinding> non_smooth;

    bool admissible() const noexcept { return violations.empty(); }
};

/// Check 0 <= d gamma / dm <= Xi(m T) on a grid. Diagnostic only; never throws on violations.
template <Intensity M>
AdmissibilityReport admissibility_report(const M& model, const MortgageSpec& spec, std::span<const double> m_grid,
                                         std::span<const double> z_grid, std::span<const double> x_grid,
                                         double h = 1e-5) {
    using Kind = AdmissibilityFinding::Kind;
    AdmissibilityReport report;
    const double T = spec.maturity();
    auto g = [&](double x, double m, double z) { return eval(model, x, m, z); };
    for (double x : x_grid) {
        for (double m : m_grid) {
            for (double z : z_grid) {
                ++report.points_checked;
                const double lo = std::max(m - h, 0.0);
                const double hi = m + h;
                const double mid = g(x, m, z);
                const double forward = (g(x, hi, z) - mid) / (hi - m);
                const double gamma_m = (g(x, hi, z) - g(x, lo, z)) / (hi - lo);
                const double bound = m > 0.0 ? xi(m * T) : std::numeric_limits<double>::infinity();
                if (lo < m) {
                    const double backward = (mid - g(x, lo, z)) / (m - lo);
                    const double scale = std::max({1.0, std::abs(forward), std::abs(backward)});
                    if (std::abs(forward - backward) > 1e-4 * scale)
                        report.non_smooth.push_back({x, m, z, gamma_m, bound, Kind::non_smooth});
                }
                if (gamma_m < -1e-9)
                    report.violations.push_back({x, m, z, gamma_m, bound, Kind::negative_slope});
                else if (gamma_m > bound)
                    report.violations.push_back({x, m, z, gamma_m, bound, Kind::above_bound});
            }
        }
    }
    return report;
}

}  // namespace mbscc
