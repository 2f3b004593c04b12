#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "mbscc/intensity.hpp"

using namespace mbscc;

namespace {
const RefiIncentiveIntensity canonical{0.045, 5.0};
const MortgageSpec thirty{30.0};
}  // namespace

TEST(Intensity, RefiIncentiveExamples) {
    for (auto d : {Decomposition::zero_baseline, Decomposition::constant_baseline}) {
        const auto model = canonical.decompose(d);
        EXPECT_DOUBLE_EQ(eval(model, 0.05, 0.06, 0.08), 0.045);
        EXPECT_DOUBLE_EQ(eval(model, 0.05, 0.08, 0.06), 0.045 + 5.0 * 0.02);
        EXPECT_DOUBLE_EQ(canonical(0.05, 0.08, 0.06), 0.145);
    }
}

TEST(Intensity, DecompositionsSplitTheSameTotal) {
    const auto zero = canonical.decompose(Decomposition::zero_baseline);
    const auto cnst = canonical.decompose(Decomposition::constant_baseline);
    EXPECT_EQ(zero.baseline(0.07), 0.0);
    EXPECT_EQ(cnst.baseline(0.07), 0.045);
    EXPECT_DOUBLE_EQ(zero.perturbation(0.07, 0.09, 0.05), 0.045 + 0.2);
    EXPECT_DOUBLE_EQ(cnst.perturbation(0.07, 0.09, 0.05), 0.2);
}

TEST(Intensity, EpsilonZeroIsBaseline) {
    const auto model = canonical.decompose(Decomposition::constant_baseline, 0.0);
    for (double m : {0.0, 0.03, 0.1})
        for (double z : {0.0, 0.05, 0.2}) EXPECT_EQ(eval(model, 0.06, m, z), model.baseline(0.06));
}

TEST(Intensity, DomainAndConfigErrors) {
    const auto model = canonical.decompose(Decomposition::zero_baseline);
    EXPECT_THROW(eval(model, 0.05, -0.01, 0.05), DomainError);
    EXPECT_THROW(eval(model, 0.05, 0.05, -0.01), DomainError);
    EXPECT_THROW((RefiIncentiveIntensity{0.045, 5.0, 0.5}.decompose(Decomposition::constant_baseline)), ConfigError);
    EXPECT_NO_THROW((RefiIncentiveIntensity{0.045, 5.0, 0.5}.decompose(Decomposition::zero_baseline)));
    EXPECT_THROW((RefiIncentiveIntensity{-0.1, 5.0}.decompose(Decomposition::zero_baseline)), ConfigError);
    EXPECT_THROW(canonical.decompose(Decomposition::zero_baseline, -1.0), ConfigError);
}

TEST(IntensityProperties, NonnegativeMonotoneAndLinearInEpsilon) {
    std::mt19937_64 gen(19);
    std::uniform_real_distribution<double> rate(0.0, 0.3), eps_dist(0.0, 3.0);
    for (auto d : {Decomposition::zero_baseline, Decomposition::constant_baseline}) {
        const auto unit = canonical.decompose(d);
        for (int k = 0; k < 2000; ++k) {
            const double x = rate(gen), m = rate(gen), z = rate(gen), eps = eps_dist(gen);
            const auto scaled = unit.with_epsilon(eps);
            const double g = eval(scaled, x, m, z);
            EXPECT_GE(g, 0.0);
            EXPECT_EQ(g, scaled.baseline(x) + eps * unit.perturbation(x, m, z));
            EXPECT_LE(eval(unit, x, m, z), eval(unit, x, m + 0.01, z));
            EXPECT_GE(eval(unit, x, m, z), eval(unit, x, m, z + 0.01));
        }
    }
}

TEST(Admissibility, ConstantIntensityHasNoViolations) {
    const auto model = RefiIncentiveIntensity{0.045, 0.0}.decompose(Decomposition::constant_baseline);
    const std::vector<double> grid{0.0, 0.02, 0.05, 0.08, 0.15};
    const auto report = admissibility_report(model, thirty, grid, grid, grid);
    EXPECT_TRUE(report.admissible());
    EXPECT_TRUE(report.non_smooth.empty());
    EXPECT_EQ(report.points_checked, 125u);
}

TEST(Admissibility, CanonicalModelViolatesXiBound) {
    const auto model = canonical.decompose(Decomposition::zero_baseline);
    const std::vector<double> m{0.05}, z{0.04}, x{0.06};
    const auto report = admissibility_report(model, thirty, m, z, x);
    ASSERT_EQ(report.violations.size(), 1u);
    const auto& v = report.violations.front();
    EXPECT_EQ(v.kind, AdmissibilityFinding::Kind::above_bound);
    EXPECT_NEAR(v.gamma_m, 5.0, 1e-6);
    EXPECT_NEAR(v.bound, 1.0 / 1.5, 1e-12);
}

TEST(Admissibility, KinkIsFlaggedNotFatal) {
    const auto model = canonical.decompose(Decomposition::zero_baseline);
    const std::vector<double> m{0.05}, z{0.05}, x{0.06};
    const auto report = admissibility_report(model, thirty, m, z, x);
    EXPECT_EQ(report.non_smooth.size(), 1u);
}

TEST(Admissibility, PerturbationFreeOfContractRate) {
    IntensityModel model([](double x) { return 0.01 + 0.2 * x; },
                         [](double x, double, double z) { return 0.3 * x + z * z; });
    const std::vector<double> grid{0.0, 0.01, 0.04, 0.1, 0.2};
    const auto report = admissibility_report(model, thirty, grid, grid, grid);
    EXPECT_TRUE(report.admissible());
}

TEST(Admissibility, DecreasingInContractRateIsNegativeSlope) {
    IntensityModel model([](double) { return 0.02; }, [](double, double m, double) { return 1.0 - m; });
    const std::vector<double> m{0.03}, z{0.03}, x{0.05};
    const auto report = admissibility_report(model, thirty, m, z, x);
    ASSERT_EQ(report.violations.size(), 1u);
    EXPECT_EQ(report.violations[0].kind, AdmissibilityFinding::Kind::negative_slope);
}
