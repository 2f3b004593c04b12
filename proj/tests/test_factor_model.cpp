#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mbscc/factor_model.hpp"
#include "oracles.hpp"

using namespace mbscc;

namespace {

const CirParams reference_case{0.25, 0.06, 0.1, 0.06};

struct Moments {
    double mean, mean_se, var, var_se;
};

template <PathSource S>
Moments terminal_moments(const S& paths) {
    PathBuffer buf;
    const std::size_t n = paths.n_paths();
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = paths.path(i, buf).rates.back();
    double mean = 0;
    for (double v : r) mean += v;
    mean /= n;
    double m2 = 0, m4 = 0;
    for (double v : r) {
        const double d = v - mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= (n - 1);
    m4 /= n;
    return {mean, std::sqrt(m2 / n), m2, std::sqrt((m4 - m2 * m2) / n)};
}

}  // namespace

TEST(CirParams, Validation) {
    EXPECT_NO_THROW(reference_case.validate());
    EXPECT_THROW((CirParams{0.0, 0.06, 0.1, 0.06}.validate()), ConfigError);
    EXPECT_THROW((CirParams{0.25, -0.06, 0.1, 0.06}.validate()), ConfigError);
    EXPECT_THROW((CirParams{0.25, 0.06, 0.0, 0.06}.validate()), ConfigError);
    EXPECT_THROW((CirParams{0.25, 0.06, 0.1, 0.0}.validate()), ConfigError);
    EXPECT_TRUE(reference_case.feller_satisfied());
    EXPECT_FALSE((CirParams{0.1, 0.02, 0.2, 0.02}.feller_satisfied()));
    EXPECT_THROW(simulate_paths(reference_case, 1.0, 12, 0, 1), ConfigError);
    EXPECT_THROW(simulate_paths(reference_case, 0.0, 12, 10, 1), ConfigError);
    EXPECT_THROW(simulate_paths(reference_case, 1.0, 0, 10, 1), ConfigError);
}

TEST(TimeGrid, MonthlyThirtyYears) {
    TimeGrid g(30.0, 12);
    EXPECT_EQ(g.size(), 361u);
    EXPECT_EQ(g[0], 0.0);
    EXPECT_EQ(g[360], 30.0);
    EXPECT_NEAR(g.dt(), 1.0 / 12.0, 1e-15);
}

TEST(SimulatePaths, ConditionalMeanAndVariance) {
    const auto paths = simulate_paths(reference_case, 1.0, 12, 100000, 2024);
    const auto mo = terminal_moments(paths);
    const double mean = oracle::cir_mean(0.25, 0.06, 0.06, 1.0);
    const double var = oracle::cir_variance(0.25, 0.06, 0.1, 0.06, 1.0);
    EXPECT_LE(std::abs(mo.mean - mean), 3 * mo.mean_se);
    EXPECT_LE(std::abs(mo.var - var), 3 * mo.var_se);
}

TEST(SimulatePaths, ConditionalMomentsOffEquilibrium) {
    const CirParams p = reference_case.with_r0(0.12);
    const auto paths = simulate_paths(p, 5.0, 4, 100000, 99);
    const auto mo = terminal_moments(paths);
    EXPECT_LE(std::abs(mo.mean - oracle::cir_mean(0.25, 0.06, 0.12, 5.0)), 3 * mo.mean_se);
    EXPECT_LE(std::abs(mo.var - oracle::cir_variance(0.25, 0.06, 0.1, 0.12, 5.0)), 3 * mo.var_se);
}

TEST(SimulatePaths, PoissonMixtureBranchWhenDofBelowOne) {
    const CirParams p{0.1, 0.02, 0.2, 0.02};
    ASSERT_LT(p.degrees_of_freedom(), 1.0);
    const auto paths = simulate_paths(p, 2.0, 12, 100000, 5);
    const auto mo = terminal_moments(paths);
    EXPECT_LE(std::abs(mo.mean - oracle::cir_mean(0.1, 0.02, 0.02, 2.0)), 3 * mo.mean_se);
    EXPECT_LE(std::abs(mo.var - oracle::cir_variance(0.1, 0.02, 0.2, 0.02, 2.0)), 3 * mo.var_se);
}

TEST(SimulatePaths, DeterministicAndPartitionIndependent) {
    const auto a = simulate_paths(reference_case, 30.0, 12, 1, 42);
    const auto b = simulate_paths(reference_case, 30.0, 12, 1, 42);
    EXPECT_TRUE(a == b);
    const auto serial = simulate_paths(reference_case, 30.0, 12, 300, 42, 1);
    const auto threaded = simulate_paths(reference_case, 30.0, 12, 300, 42, 8);
    EXPECT_TRUE(serial == threaded);
    const auto other = simulate_paths(reference_case, 30.0, 12, 300, 43, 1);
    EXPECT_FALSE(serial == other);
}

TEST(SimulatePaths, StreamReproducesStoredPaths) {
    const auto stored = simulate_paths(reference_case, 30.0, 12, 50, 7);
    const CirPathStream stream(reference_case, TimeGrid(30.0, 12), 50, 7);
    PathBuffer buf;
    for (std::size_t i = 0; i < 50; ++i) {
        const auto s = stream.path(i, buf);
        const auto p = stored.path(i);
        EXPECT_TRUE(std::equal(s.rates.begin(), s.rates.end(), p.rates.begin()));
        EXPECT_TRUE(std::equal(s.cum_rate_integral.begin(), s.cum_rate_integral.end(), p.cum_rate_integral.begin()));
    }
}

TEST(SimulatePaths, PathInvariants) {
    const auto paths = simulate_paths(reference_case, 30.0, 12, 500, 3);
    for (std::size_t i = 0; i < paths.n_paths(); ++i) {
        const auto r = paths.rates(i);
        const auto c = paths.cum_rate_integral(i);
        EXPECT_EQ(c[0], 0.0);
        EXPECT_EQ(r[0], 0.06);
        for (std::size_t j = 0; j < r.size(); ++j) {
            EXPECT_GT(r[j], 0.0);  // Feller holds for these parameters
            if (j) EXPECT_GE(c[j], c[j - 1]);
        }
    }
    // Outside the Feller region paths remain nonnegative.
    const auto rough = simulate_paths(CirParams{0.1, 0.02, 0.2, 0.02}, 10.0, 12, 500, 3);
    for (std::size_t i = 0; i < rough.n_paths(); ++i)
        for (double r : rough.rates(i)) EXPECT_GE(r, 0.0);
}

TEST(BondPrice, Examples) {
    EXPECT_EQ(bond_price(reference_case, 0.06, 0.0), 1.0);
    EXPECT_EQ(bond_price(CirParams{1.0, 0.1, 0.3, 0.1}, 0.2, 0.0), 1.0);
    const CirParams calm{0.25, 0.06, 1e-6, 0.06};
    for (double t : {1.0, 5.0, 30.0}) EXPECT_NEAR(bond_price(calm, 0.06, t), std::exp(-0.06 * t), 1e-4);
    const CirParams frozen{0.25, 0.06, 1e-8, 0.06};
    for (double t : {0.5, 1.0, 5.0, 30.0}) EXPECT_NEAR(bond_price(frozen, 0.06, t), std::exp(-0.06 * t), 1e-12);
    // Textbook A(t) B(t) form at ordinary volatility.
    for (double t : {0.25, 1.0, 7.0, 30.0}) {
        const double k = 0.25, th = 0.06, s = 0.1, x = 0.045;
        const double h = std::sqrt(k * k + 2 * s * s);
        const double den = 2 * h + (k + h) * (std::exp(h * t) - 1);
        const double A = std::pow(2 * h * std::exp((k + h) * t / 2) / den, 2 * k * th / (s * s));
        const double B = 2 * (std::exp(h * t) - 1) / den;
        EXPECT_NEAR(bond_price(reference_case, x, t), A * std::exp(-B * x), 1e-13);
    }
    EXPECT_THROW(bond_price(reference_case, 0.06, -1.0), DomainError);
    EXPECT_THROW(bond_price(reference_case, 0.0, 1.0), DomainError);
}

TEST(BondPrice, AgreesWithMonteCarlo) {
    // One year, a million paths.
    const CirPathStream stream(reference_case, TimeGrid(1.0, 12), 1000000, 17);
    PathBuffer buf;
    std::vector<double> d(stream.n_paths());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::exp(-stream.path(i, buf).cum_rate_integral.back());
    double mean = 0;
    for (double v : d) mean += v;
    mean /= d.size();
    double var = 0;
    for (double v : d) var += (v - mean) * (v - mean);
    const double se = std::sqrt(var / (d.size() - 1) / d.size());
    EXPECT_LE(std::abs(mean - bond_price(reference_case, 0.06, 1.0)), 3 * se);
}

TEST(BondPrice, DiscountOracleAcrossMaturities) {
    for (double T : {1.0, 5.0, 30.0}) {
        const CirPathStream stream(reference_case, TimeGrid(T, 12), 40000, 1234);
        PathBuffer buf;
        double s = 0, s2 = 0;
        for (std::size_t i = 0; i < stream.n_paths(); ++i) {
            const double v = std::exp(-stream.path(i, buf).cum_rate_integral.back());
            s += v;
            s2 += v * v;
        }
        const double n = static_cast<double>(stream.n_paths());
        const double mean = s / n;
        const double se = std::sqrt((s2 / n - mean * mean) / (n - 1));
        EXPECT_LE(std::abs(mean - bond_price(reference_case, 0.06, T)), 3 * se) << T;
    }
}

TEST(InvariantLaw, ShapeScaleMode) {
    const auto law = invariant_law(reference_case);
    EXPECT_NEAR(law.shape, 3.0, 1e-12);
    EXPECT_NEAR(law.scale, 0.02, 1e-15);
    EXPECT_NEAR(law.shape * law.scale, 0.06, 1e-15);
    double best = 0, arg = 0;
    for (int i = 1; i < 100000; ++i) {
        const double r = 1e-6 * i;
        const double v = invariant_pdf(reference_case, r);
        if (v > best) { best = v; arg = r; }
    }
    EXPECT_NEAR(arg, (law.shape - 1) * law.scale, 2e-6);
    EXPECT_THROW(invariant_pdf(reference_case, 0.0), DomainError);
}

TEST(InvariantLaw, PdfIntegratesToOne) {
    const double total = oracle::simpson([](double r) { return r > 0 ? invariant_pdf(reference_case, r) : 0.0; }, 0.0, 1.0, 200000);
    EXPECT_NEAR(total, 1.0, 1e-6);
}

TEST(InvariantLaw, Quantiles) {
    auto cdf = [](double x) {
        return oracle::simpson([](double r) { return r > 0 ? invariant_pdf(reference_case, r) : 0.0; }, 0.0, x, 20000);
    };
    const double median_ref = oracle::bisection([&](double x) { return cdf(x) - 0.5; }, 1e-6, 0.5, 60);
    EXPECT_NEAR(invariant_quantile(reference_case, 0.5), median_ref, 1e-8);
    const double lo = invariant_quantile(reference_case, 0.025);
    const double mid = invariant_quantile(reference_case, 0.5);
    const double hi = invariant_quantile(reference_case, 0.975);
    EXPECT_LT(lo, mid);
    EXPECT_LT(mid, hi);
    for (double q : {0.005, 0.025, 0.25, 0.5, 0.75, 0.9, 0.975, 0.995})
        EXPECT_NEAR(invariant_cdf(reference_case, invariant_quantile(reference_case, q)), q, 1e-8) << q;
    EXPECT_THROW(invariant_quantile(reference_case, 0.0), DomainError);
    EXPECT_THROW(invariant_quantile(reference_case, 1.0), DomainError);
}

TEST(InvariantLaw, NearlyDeterministicRate) {
    const CirParams frozen{0.25, 0.06, 1e-8, 0.06};
    const double sd = 1e-8 * std::sqrt(0.06 / 0.5);
    EXPECT_NEAR(invariant_quantile(frozen, 0.5), 0.06, 1e-3 * sd);
    EXPECT_NEAR(invariant_quantile(frozen, 0.975), 0.06 + 1.959963985 * sd, 1e-2 * sd);
    EXPECT_NEAR(invariant_pdf(frozen, 0.06), 1.0 / (sd * std::sqrt(2 * M_PI)), 1e-3 / sd);
    // The CDF switches method at shape 1e10; both sides must agree.
    const double theta = 0.06, kappa = 0.25;
    auto at_shape = [&](double shape) { return CirParams{kappa, theta, std::sqrt(2 * kappa * theta / shape), theta}; };
    for (double z : {-2.0, -0.5, 0.0, 1.0, 2.5}) {
        const auto lo = at_shape(0.999e10), hi = at_shape(1.001e10);
        const double r_lo = theta + z * theta / std::sqrt(0.999e10);
        const double r_hi = theta + z * theta / std::sqrt(1.001e10);
        EXPECT_NEAR(invariant_cdf(lo, r_lo), invariant_cdf(hi, r_hi), 1e-6) << z;
    }
}
