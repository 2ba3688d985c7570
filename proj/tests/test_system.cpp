#include "toy_model.hpp"

#include "imprs/errors.hpp"
#include "imprs/system.hpp"

#include <gtest/gtest.h>

#include <bit>
#include <cmath>

using namespace imprs;

namespace {

// P(exactly the components in `mask` have failed), independent components.
double exact_set_prob(const std::vector<double>& pf, unsigned mask)
{
    double p = 1.0;
    for (std::size_t k = 0; k < pf.size(); ++k) p *= (mask >> k & 1u) ? pf[k] : 1.0 - pf[k];
    return p;
}

std::vector<std::uint8_t> failed_set(unsigned mask, std::size_t n)
{
    std::vector<std::uint8_t> f(n);
    for (std::size_t k = 0; k < n; ++k) f[k] = (mask >> k) & 1u;
    return f;
}

double brute_force(const SystemModel& sys, const std::vector<double>& pf)
{
    double s = 0.0;
    for (unsigned mask = 0; mask < (1u << pf.size()); ++mask)
        s += exact_set_prob(pf, mask) * sys.failure_given(failed_set(mask, pf.size()));
    return s;
}

CapacityModel three_component_general()
{
    CapacityModel cap;
    cap.mode = CapacityModel::Mode::General;
    cap.intact_resistance = 200.0;
    cap.sets = {{{0}, 0.7}, {{1}, 0.8}, {{2}, 0.9}, {{0, 1}, 0.35}, {{1, 2}, 0.5}, {{0, 1, 2}, 0.1}};
    return cap;
}

}  // namespace

TEST(Load, ExceedanceMatchesLognormal)
{
    const LoadModel load{50.0, 0.53};
    for (double r : {20.0, 50.0, 150.0, 282.0}) EXPECT_NEAR(load.exceedance(r), toy::exceedance(r, 50.0, 0.53), 1e-14);
    EXPECT_EQ(load.exceedance(0.0), 1.0);
}

TEST(System, GroupCountMatchesBruteForce)
{
    CapacityModel cap;
    cap.groups = {{{0, 1, 2}, {0.0, 0.3, 0.6, 0.9}}, {{3, 4}, {0.0, 0.2, 0.5}}, {{5}, {0.0, 0.4}}};
    const SystemModel sys(cap, LoadModel{}, 6);
    const std::vector<double> pf{0.1, 0.02, 0.3, 0.05, 0.5, 0.2};
    EXPECT_NEAR(sys.interval_failure_prob(pf), brute_force(sys, pf), 1e-14);
}

TEST(System, GroupCountFractionIsClamped)
{
    CapacityModel cap;
    cap.groups = {{{0, 1}, {0.0, 0.7, 1.4}}};
    EXPECT_EQ(cap.fraction({1, 1}), 0.0);
    EXPECT_NEAR(cap.fraction({1, 0}), 0.3, 1e-15);
}

TEST(System, GeneralModeEnumerationMatchesBruteForce)
{
    const SystemModel sys(three_component_general(), LoadModel{}, 3);
    const std::vector<double> pf{0.2, 0.4, 0.1};
    EXPECT_NEAR(sys.interval_failure_prob(pf), brute_force(sys, pf), 1e-14);
    EXPECT_NEAR(sys.failure_given({1, 1, 0}), LoadModel{}.exceedance(200.0 * 0.35), 1e-15);
    // superset of listed sets takes the smallest fraction
    EXPECT_NEAR(three_component_general().fraction({1, 1, 1}), 0.1, 1e-15);
}

TEST(System, GeneralModeMonteCarloForLargeSystems)
{
    CapacityModel cap;
    cap.mode = CapacityModel::Mode::General;
    for (int k = 0; k < 14; ++k) cap.sets.push_back({{k}, 0.6});
    SystemOptions opt;
    opt.enumeration_limit = 12;
    opt.monte_carlo_samples = 200000;
    const SystemModel sys(cap, LoadModel{}, 14, opt);
    const std::vector<double> pf(14, 0.05);
    const double none = std::pow(0.95, 14);
    const double expected = none * LoadModel{}.exceedance(282.0) + (1.0 - none) * LoadModel{}.exceedance(282.0 * 0.6);
    EXPECT_NEAR(sys.interval_failure_prob(pf), expected, 0.02 * expected);
}

TEST(System, DisjointDecompositionHolds)
{
    const SystemModel sys(three_component_general(), LoadModel{}, 3);
    const std::vector<double> pf{0.15, 0.35, 0.05};
    const double a = sys.failure_given({0, 0, 0});
    double total = a;
    for (unsigned mask = 1; mask < 8; ++mask) {
        const double importance = sys.failure_given(failed_set(mask, 3)) - a;
        if (std::popcount(mask) == 1) {
            const int k = std::countr_zero(mask);
            EXPECT_NEAR(importance, sys.sei(k), 1e-15);
        }
        total += importance * exact_set_prob(pf, mask);
    }
    EXPECT_NEAR(sys.interval_failure_prob(pf), total, 1e-12);
}

TEST(System, SeiDefinition)
{
    CapacityModel cap;
    cap.groups = {{{0, 1}, {0.0, 0.5, 1.0}}, {{2}, {0.0, 0.1}}};
    const SystemModel sys(cap, LoadModel{}, 3);
    const auto sei = sys.sei_all();
    ASSERT_EQ(sei.size(), 3u);
    const double base = LoadModel{}.exceedance(282.0);
    EXPECT_NEAR(sei[0], LoadModel{}.exceedance(141.0) - base, 1e-15);
    EXPECT_NEAR(sei[2], LoadModel{}.exceedance(282.0 * 0.9) - base, 1e-15);
    EXPECT_GT(sei[0], sei[2]);
}

TEST(System, BeliefProbabilityAccountsForCorrelation)
{
    const toy::Toy t = toy::make_toy();
    BeliefState b = t.dbn->prior(0);
    for (int i = 0; i < 3; ++i) b.predict();
    // correlated components: the belief-based value differs from the independent approximation
    const double corr = t.system->interval_failure_prob(b);
    const double indep = t.system->interval_failure_prob({b.component_failure_prob(0), b.component_failure_prob(1)});
    EXPECT_GT(corr, 0.0);
    EXPECT_NE(corr, indep);
}

TEST(System, CumulativeFailure)
{
    const auto c = cumulative_failure({0.1, 0.2, 0.0});
    EXPECT_NEAR(c.cdf[0], 0.1, 1e-15);
    EXPECT_NEAR(c.cdf[1], 1.0 - 0.9 * 0.8, 1e-15);
    EXPECT_NEAR(c.cdf[2], c.cdf[1], 1e-15);
    EXPECT_NEAR(c.annual[1], c.cdf[1] - c.cdf[0], 1e-15);
}

TEST(System, ValidationRejectsOverlappingGroups)
{
    CapacityModel cap;
    cap.groups = {{{0, 1}, {0.0, 0.1, 0.2}}, {{1}, {0.0, 0.1}}};
    EXPECT_THROW(cap.validate(2), ConfigError);
}
