#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "../coupon_solvers.hpp"
#include "../path_bank.hpp"
#include "../pool_simulator.hpp"
#include "config.hpp"
#include "report.hpp"

#ifndef MBSCC_VERSION
#define MBSCC_VERSION "v0.0.0-unknown"
#endif

namespace mbscc {

inline std::string version_string() { return std::string("mbscc ") + MBSCC_VERSION; }

/// UTC time in ISO 8601, for the timestamp comment line.
inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Progress sink; a null stream pointer silences it.
struct RunLog {
    std::ostream* out = nullptr;
    void operator()(const std::string& msg) const {
        if (out) *out << msg << std::endl;
    }
};

namespace detail {

inline std::vector<std::string> report_header(const ExperimentConfig& c, const std::string& command) {
    std::vector<std::string> lines{version_string(), "command: " + command, "seed: " + std::to_string(c.mc.seed)};
    for (const auto& [k, v] : config_echo(c)) lines.push_back("config " + k + " = " + v);
    return lines;
}

inline ReportRow blank_row(const ExperimentConfig& c, double x) {
    ReportRow r;
    r.x = x;
    r.invariant_pdf = invariant_pdf(c.cir, x);
    return r;
}

inline StreamedPathBank make_bank(const ExperimentConfig& c, const std::vector<double>& rates) {
    return {c.cir, TimeGrid(c.spec.maturity(), c.mc.steps_per_year), rates, c.mc.n_paths, c.mc.seed};
}

inline void add_contraction_notes(ComparisonReport& report, const ContractionReport& cr) {
    report.comments.push_back("contraction converged: " + std::string(cr.converged ? "yes" : "no") + " after " +
                              std::to_string(cr.iterations_used) + " iterations");
    for (std::size_t k = 0; k < cr.sup_deltas.size(); ++k)
        report.comments.push_back("contraction sup_delta[" + std::to_string(k + 1) +
                                  "] = " + format_value(cr.sup_deltas[k]));
}

}  // namespace detail

/// Everything computed by the compare subcommand.
struct CompareResult {
    ComparisonReport report;
    std::vector<double> rates;
    ApproxCurve approx;
    ContractionReport contraction;
};

/// Assemble the comparison report from an approximation and a contraction run on one grid.
inline ComparisonReport make_comparison_report(const ExperimentConfig& c, std::span<const double> rates,
                                               const ApproxCurve& approx, const ContractionReport& contraction) {
    ComparisonReport report;
    report.comments = detail::report_header(c, "compare");
    detail::add_contraction_notes(report, contraction);
    if (!approx.positive) report.comments.push_back("warning: m0 + m1 was non-positive at some grid points");
    const auto& mc = contraction.final_curve();
    for (std::size_t i = 0; i < rates.size(); ++i) {
        ReportRow r = detail::blank_row(c, rates[i]);
        r.m0 = approx.m0.value_at(i);
        r.m1 = approx.m1[i];
        r.approx = approx.approx.value_at(i);
        r.m_contraction = mc.value_at(i);
        r.error_bps = std::abs(r.approx - r.m_contraction) * 1e4;
        r.approx_se_bps = approx.std_error[i] * 1e4;
        report.rows.push_back(r);
    }
    return report;
}

/// m0 + m1 against the contraction fixed point on shared frozen paths.
inline CompareResult run_compare(const ExperimentConfig& c, const RunLog& log = {}) {
    c.validate();
    const auto rates = c.rates();
    const auto bank = detail::make_bank(c, rates);
    const auto model = c.model();
    log("approximation m0 + m1 (" + to_string(c.decomposition) + " baseline) on " + std::to_string(rates.size()) +
        " grid points");
    auto approx = approx_current_coupon(bank, c.cir, c.spec, model, c.decomposition, c.workers);
    log("contraction oracle");
    auto contraction = contraction_solve(bank, c.spec, model, CouponCurve(rates, rates), c.contraction.tol,
                                         c.contraction.max_iter, c.workers, [&](std::size_t n, double d) {
                                             log("  iteration " + std::to_string(n) + ": sup change " +
                                                 format_value(d * 1e4) + " bp");
                                         });
    auto report = make_comparison_report(c, rates, approx, contraction);
    return {std::move(report), rates, std::move(approx), std::move(contraction)};
}

/// Closed-form m0 only.
inline ComparisonReport run_baseline(const ExperimentConfig& c) {
    c.validate();
    const auto model = c.model();
    ComparisonReport report;
    report.comments = detail::report_header(c, "baseline");
    for (double x : c.rates()) {
        ReportRow r = detail::blank_row(c, x);
        r.m0 = solve_m0(c.cir, c.spec, model, c.decomposition, x);
        report.rows.push_back(r);
    }
    return report;
}

/// Contraction oracle only.
inline std::pair<ComparisonReport, ContractionReport> run_contract(const ExperimentConfig& c, const RunLog& log = {}) {
    c.validate();
    const auto rates = c.rates();
    const auto bank = detail::make_bank(c, rates);
    auto contraction = contraction_solve(bank, c.spec, c.model(), CouponCurve(rates, rates), c.contraction.tol,
                                         c.contraction.max_iter, c.workers, [&](std::size_t n, double d) {
                                             log("  iteration " + std::to_string(n) + ": sup change " +
                                                 format_value(d * 1e4) + " bp");
                                         });
    ComparisonReport report;
    report.comments = detail::report_header(c, "contract");
    detail::add_contraction_notes(report, contraction);
    for (std::size_t i = 0; i < rates.size(); ++i) {
        ReportRow r = detail::blank_row(c, rates[i]);
        r.m_contraction = contraction.final_curve().value_at(i);
        report.rows.push_back(r);
    }
    return {std::move(report), std::move(contraction)};
}

/// (x, Xi(x)) on an even grid.
inline std::vector<std::pair<double, double>> xi_table(double lo, double hi, std::size_t n) {
    detail::require_config(lo > 0.0 && hi >= lo && n >= 1, "xi table: need 0 < lo <= hi and n >= 1");
    std::vector<std::pair<double, double>> out;
    const auto xs = n == 1 ? std::vector<double>{lo} : linear_grid(lo, hi, n);
    for (double x : xs) out.emplace_back(x, xi(x));
    return out;
}

// ---------------------------------------------------------------------------
// Verification

/// One pass/fail line of the verify subcommand.
struct CheckResult {
    std::string name;
    bool passed = false;
    double measured = 0.0;   ///< worst deviation found
    double threshold = 0.0;  ///< allowance at that worst point
    std::string detail;
};

struct VerificationSummary {
    std::vector<CheckResult> checks;
    std::vector<LlnRow> lln;
    bool passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
    }
};

/// Absolute allowance for trapezoid-level differences between estimators that agree
/// exactly in continuous time.
inline constexpr double quadrature_allowance = 1e-6;

/// One (m, scale) cell of the estimator-equivalence grid.
struct EquivalenceCell {
    double m;
    double scale;
    FunctionalEstimate direct;
    FunctionalEstimate intensity;
    double deviation;
    double allowance;  ///< 3 combined SE + quadrature allowance
};

/// Direct cash-flow pricing against the intensity form for every (m, scale) pair, where
/// the intensity is `base` scaled by `scale` (0 switches prepayment off).
template <PathSource S>
std::vector<EquivalenceCell> estimator_equivalence(const S& paths, const MortgageSpec& spec,
                                                   const RefiIncentiveIntensity& base, const CouponCurve& z_curve,
                                                   std::span<const double> coupons, std::span<const double> scales,
                                                   std::size_t n_loans, std::uint64_t uniform_seed,
                                                   unsigned workers = 1) {
    std::vector<EquivalenceCell> cells;
    for (double m : coupons) {
        for (double s : scales) {
            const RefiIncentiveIntensity scaled{base.gamma_base * s, base.k * s, base.gamma_slope * s};
            const LoanPoolConfig<StandardIntensity> pool{n_loans, m, spec,
                                                         scaled.decompose(Decomposition::zero_baseline), z_curve};
            const auto direct = price_loan_direct(paths, pool, uniform_seed, workers);
            const auto form = price_pool_intensity_form(paths, pool, workers).par_form;
            const double se = std::sqrt(direct.std_error * direct.std_error + form.std_error * form.std_error);
            cells.push_back({m, s, direct, form, std::abs(direct.value - form.value),
                             3.0 * se + quadrature_allowance});
        }
    }
    return cells;
}

/// Grid indices nearest to the given invariant-law quantiles, without duplicates.
inline std::vector<std::size_t> nearest_indices(const CirParams& cir, std::span<const double> rates,
                                                std::initializer_list<double> quantiles) {
    std::vector<std::size_t> out;
    for (double q : quantiles) {
        const double target = invariant_quantile(cir, q);
        std::size_t best = 0;
        for (std::size_t i = 1; i < rates.size(); ++i)
            if (std::abs(rates[i] - target) < std::abs(rates[best] - target)) best = i;
        if (std::find(out.begin(), out.end(), best) == out.end()) out.push_back(best);
    }
    return out;
}

/// Pool value at the solved coupon on the contraction's own frozen paths.
struct ParPoint {
    double x;
    double m;
    FunctionalEstimate value;
    double denominator;
    double deviation;
    double allowance;  ///< 3 SE + 2 tol * denominator
};

template <PathBank B, Intensity M>
std::vector<ParPoint> par_check(const B& bank, const MortgageSpec& spec, const M& model, const CouponCurve& m_curve,
                                std::span<const std::size_t> indices, double tol, std::size_t n_loans,
                                std::uint64_t uniform_seed, unsigned workers = 1) {
    std::vector<ParPoint> out;
    for (std::size_t i : indices) {
        const double m = m_curve.value_at(i);
        const LoanPoolConfig<M> pool{n_loans, m, spec, model, m_curve};
        const auto value = price_loan_direct(bank.source(i), pool, uniform_seed, workers);
        const double den = valuation_integrals(bank.source(i), spec, model, m, m_curve, workers).denominator.value;
        out.push_back({bank.rate(i), m, value, den, std::abs(value.value - 1.0),
                       3.0 * value.std_error + 2.0 * tol * den});
    }
    return out;
}

/// Pool-simulation cross-checks: estimator equivalence, survival, par at solved coupons, LLN.
inline VerificationSummary run_verify(const ExperimentConfig& c, const RunLog& log = {}) {
    c.validate();
    VerificationSummary summary;
    const auto rates = c.rates();
    const auto bank = detail::make_bank(c, rates);
    const auto model = c.model();
    const TimeGrid grid(c.spec.maturity(), c.mc.steps_per_year);

    log("contraction on the reporting grid");
    const auto contraction = contraction_solve(bank, c.spec, model, CouponCurve(rates, rates), c.contraction.tol,
                                               c.contraction.max_iter, c.workers);
    const auto& m_curve = contraction.final_curve();
    summary.checks.push_back({"contraction_converged", contraction.converged, contraction.sup_deltas.back(),
                              c.contraction.tol,
                              std::to_string(contraction.iterations_used) + " iterations"});

    log("par property at solved coupons");
    {
        const auto idx = nearest_indices(c.cir, rates, {0.25, 0.5, 0.75});
        const auto pts = par_check(bank, c.spec, model, m_curve, idx, c.contraction.tol, c.verify.loans,
                                   c.mc.seed, c.workers);
        CheckResult r{"par_property", true, 0.0, 0.0, ""};
        double worst = -1.0;
        for (const auto& p : pts) {
            r.passed = r.passed && p.deviation <= p.allowance;
            if (p.deviation - p.allowance > worst) {
                worst = p.deviation - p.allowance;
                r.measured = p.deviation;
                r.threshold = p.allowance;
            }
            r.detail += (r.detail.empty() ? "" : "; ") + std::string("x=") + format_value(p.x) +
                        " value=" + format_value(p.value.value);
        }
        summary.checks.push_back(r);
    }

    const double x0 = c.cir.theta;
    const CirPathStream paths(c.cir.with_r0(x0), grid, c.verify.paths, c.mc.seed);
    const std::uint64_t uniform_seed = c.mc.seed + 1;

    log("estimator equivalence on a 3x3 (m, intensity scale) grid");
    {
        const double m_mid = m_curve(x0);
        const std::vector<double> coupons{std::max(m_mid - 0.01, 0.0), m_mid, m_mid + 0.01};
        const std::vector<double> scales{0.0, 1.0, 2.0};
        const auto cells = estimator_equivalence(paths, c.spec, c.intensity.model(), m_curve, coupons, scales,
                                                 c.verify.loans, uniform_seed, c.workers);
        CheckResult r{"estimator_equivalence", true, 0.0, 0.0, std::to_string(cells.size()) + " configurations"};
        double worst = -1.0;
        for (const auto& cell : cells) {
            r.passed = r.passed && cell.deviation <= cell.allowance;
            if (cell.deviation / cell.allowance > worst) {
                worst = cell.deviation / cell.allowance;
                r.measured = cell.deviation;
                r.threshold = cell.allowance;
            }
        }
        summary.checks.push_back(r);
    }

    log("survival consistency");
    {
        std::vector<double> times;
        for (double t : {1.0, 5.0, 15.0, 30.0})
            if (t <= c.spec.maturity()) times.push_back(t);
        const LoanPoolConfig<StandardIntensity> pool{std::max<std::size_t>(c.verify.loans, 1), m_curve(x0), c.spec,
                                                     model, m_curve};
        const auto rows = survival_check(paths, pool, uniform_seed, times, c.workers);
        CheckResult r{"survival_consistency", true, 0.0, 0.0, ""};
        double worst = -1.0;
        for (const auto& row : rows) {
            const double dev = std::abs(row.difference.value);
            const double allow = 3.0 * row.difference.std_error + quadrature_allowance;
            r.passed = r.passed && dev <= allow;
            if (dev / allow > worst) {
                worst = dev / allow;
                r.measured = dev;
                r.threshold = allow;
            }
        }
        summary.checks.push_back(r);
    }

    log("large-pool convergence");
    {
        const CirPathStream lln_paths(c.cir.with_r0(x0), grid, c.verify.lln_paths, c.mc.seed);
        const LoanPoolConfig<StandardIntensity> pool{1, m_curve(x0), c.spec, model, m_curve};
        const std::vector<std::size_t> sizes{1, 10, 100, 1000};
        summary.lln = large_pool_convergence(lln_paths, pool, sizes, uniform_seed, c.workers);
        double max_rms = 0.0;
        for (const auto& row : summary.lln) max_rms = std::max(max_rms, row.rms_deviation);
        CheckResult band{"lln_consistency_band", true, 0.0, 0.0, ""};
        double worst = -1.0;
        for (const auto& row : summary.lln) {
            const double dev = std::abs(row.mean_deviation.value);
            const double allow = 4.0 * row.mean_deviation.std_error + quadrature_allowance;
            band.passed = band.passed && dev <= allow;
            if (dev / allow > worst) {
                worst = dev / allow;
                band.measured = dev;
                band.threshold = allow;
            }
        }
        CheckResult slope{"lln_rate", true, 0.0, 0.15, ""};
        if (max_rms < 1e-12) {
            slope.detail = "no prepayment randomness: every pool size matches exactly";
        } else {
            const double s = lln_log_slope(summary.lln);
            slope.measured = std::abs(s + 0.5);
            slope.passed = slope.measured <= 0.15;
            slope.detail = "log-log slope " + format_value(s);
        }
        summary.checks.push_back(band);
        summary.checks.push_back(slope);
    }
    return summary;
}

}  // namespace mbscc
