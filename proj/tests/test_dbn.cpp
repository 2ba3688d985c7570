#include "toy_model.hpp"

#include "imprs/errors.hpp"
#include "imprs/numerics.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

using namespace imprs;

namespace {

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

struct ToyRun {
    std::vector<BeliefState> predicted;
    std::vector<BeliefState> filtered;
    std::vector<double> interval;
};

ToyRun run_filter(const toy::Toy& t)
{
    ToyRun r;
    BeliefState b = t.dbn->prior(0);
    for (const auto& rec : t.records) {
        b.predict();
        r.predicted.push_back(b);
        r.interval.push_back(t.system->interval_failure_prob(b));
        b.update(rec.outcomes);
        b.apply_repairs(rec.repaired);
        r.filtered.push_back(b);
    }
    return r;
}

}  // namespace

TEST(DbnToy, FilteredPosteriorMatchesEnumeration)
{
    const toy::Toy t = toy::make_toy();
    const toy::JointOracle oracle(t);
    const toy::Oracle o = oracle.run();
    const ToyRun r = run_filter(t);
    for (std::size_t y = 0; y < t.records.size(); ++y) {
        EXPECT_LT(max_abs_diff(oracle.joint(r.predicted[y]), o.predicted[y]), 1e-10) << "year " << y + 1;
        EXPECT_LT(max_abs_diff(oracle.joint(r.filtered[y]), o.filtered[y]), 1e-10) << "year " << y + 1;
    }
}

TEST(DbnToy, IntervalFailureMatchesEnumeration)
{
    const toy::Toy t = toy::make_toy();
    const toy::Oracle o = toy::JointOracle(t).run();
    const ToyRun r = run_filter(t);
    for (std::size_t y = 0; y < t.records.size(); ++y) {
        EXPECT_NEAR(r.interval[y], o.interval[y], 1e-10);
        EXPECT_GT(o.interval[y], 0.0);
    }
}

TEST(DbnToy, SmoothedPosteriorMatchesEnumeration)
{
    const toy::Toy t = toy::make_toy();
    const toy::JointOracle oracle(t);
    const toy::Oracle o = oracle.run();
    const ToyRun r = run_filter(t);
    const auto s = smooth(r.predicted, t.records);
    ASSERT_EQ(s.size(), t.records.size());
    for (std::size_t y = 0; y < s.size(); ++y)
        EXPECT_LT(max_abs_diff(oracle.joint(s[y]), o.smoothed[y]), 1e-10) << "year " << y + 1;
}

TEST(DbnToy, ToyHasNontrivialFailureMass)
{
    const toy::Toy t = toy::make_toy();
    BeliefState b = t.dbn->prior(0);
    for (int i = 0; i < 3; ++i) b.predict();
    EXPECT_GT(b.component_failure_prob(0), 1e-4);
    EXPECT_LT(b.component_failure_prob(0), 0.9);
}

TEST(Dbn, KernelRowsAreStochastic)
{
    const toy::Toy t = toy::make_toy();
    const DbnModel& m = *t.dbn;
    for (int g = 0; g < m.n_groups(); ++g)
        for (int aK = 0; aK < m.alpha_bins(1); ++aK)
            for (int iK = 0; iK < m.nK(); ++iK) {
                const SparseKernel& k = m.kernel(g, aK, iK, 0, 0);
                for (int d = 0; d < m.nD(); ++d) {
                    double s = 0.0;
                    for (auto e = k.offset[static_cast<std::size_t>(d)]; e < k.offset[static_cast<std::size_t>(d) + 1]; ++e)
                        s += k.weight[e];
                    EXPECT_NEAR(s, 1.0, 1e-12);
                    // cracks never shrink
                    EXPECT_GE(k.first[static_cast<std::size_t>(d)], d);
                }
            }
}

TEST(Dbn, PredictPreservesNormalization)
{
    const toy::Toy t = toy::make_toy();
    BeliefState b = t.dbn->prior(0);
    for (int i = 0; i < 20; ++i) b.predict();
    EXPECT_LT(b.normalization_error(), 1e-12);
    EXPECT_EQ(b.year(), 20);
}

TEST(Dbn, FailureProbabilityNondecreasingWithoutEvidence)
{
    const toy::Toy t = toy::make_toy();
    BeliefState b = t.dbn->prior(0);
    double prev = 0.0;
    for (int i = 0; i < 15; ++i) {
        b.predict();
        const double p = b.component_failure_prob(1);
        EXPECT_GE(p, prev - 1e-15);
        prev = p;
    }
}

TEST(Dbn, NoDetectionLowersFailureProbability)
{
    const toy::Toy t = toy::make_toy();
    BeliefState b = t.dbn->prior(0);
    for (int i = 0; i < 2; ++i) b.predict();
    const double before0 = b.component_failure_prob(0);
    const double before1 = b.component_failure_prob(1);
    std::vector<Outcome> z(2);
    z[0] = Outcome{Outcome::Kind::NoDetection, 0.0};
    b.update(z);
    EXPECT_LT(b.component_failure_prob(0), before0);
    // correlated through alpha_K
    EXPECT_LT(b.component_failure_prob(1), before1);
}

TEST(Dbn, RepairResetsCrackToInitialDistribution)
{
    const toy::Toy t = toy::make_toy();
    BeliefState b = t.dbn->prior(0);
    for (int i = 0; i < 4; ++i) b.predict();
    b.apply_repairs({1, 0});
    const auto marg = b.crack_marginal(0);
    const auto& d0 = t.dbn->d0_marginal();
    for (std::size_t d = 0; d < marg.size(); ++d) EXPECT_NEAR(marg[d], d0[d], 1e-12);
}

TEST(Dbn, FilterStepRejectsWrongYear)
{
    const toy::Toy t = toy::make_toy();
    BeliefState b = t.dbn->prior(0);
    EXPECT_THROW(b.filter_step(t.records[1]), std::invalid_argument);
}

TEST(Dbn, CrackGridWithinBinFunctionsAreInverse)
{
    DiscretizationConfig dc;
    const CrackGrid g(dc, 50.0);
    EXPECT_EQ(g.size(), dc.crack_bins + 1);
    EXPECT_DOUBLE_EQ(g.critical_depth(), 50.0);
    for (int bin = 0; bin < g.failed(); ++bin) {
        for (double u : {0.1, 0.5, 0.9}) {
            const double x = g.quantile_within(bin, u);
            EXPECT_GE(x, g.lower(bin));
            EXPECT_LE(x, g.upper(bin));
            EXPECT_NEAR(g.cdf_within(bin, x), u, 1e-12);
            EXPECT_EQ(g.bin_of(x), bin);
        }
    }
    EXPECT_EQ(g.bin_of(50.0), g.failed());
    EXPECT_EQ(g.bin_of(0.0), 0);
}

TEST(Dbn, PosteriorSampleDrawsFromBelief)
{
    const toy::Toy t = toy::make_toy();
    BeliefState b = t.dbn->prior(0);
    for (int i = 0; i < 3; ++i) b.predict();
    const auto marg = b.crack_marginal(1);
    std::vector<double> freq(marg.size(), 0.0);
    Rng rng = substream(5, "test");
    const int n = 40000;
    for (int i = 0; i < n; ++i) {
        const GroundTruth g = posterior_sample(b, rng);
        const auto& c = g.components[1];
        freq[static_cast<std::size_t>(c.failed ? t.dbn->grid().failed() : t.dbn->grid().bin_of(c.depth))] += 1.0 / n;
    }
    for (std::size_t d = 0; d < marg.size(); ++d) EXPECT_NEAR(freq[d], marg[d], 4.0 * std::sqrt(marg[d] / n) + 1e-3);
}

TEST(Dbn, TransitionMatchesContinuousSimulation)
{
    FatigueParams fp;
    const double sd = fp.std_lnK;
    const auto dbn = std::make_shared<DbnModel>(fp, CorrelationParams{}, DiscretizationConfig{}, InspectionModel{},
                                                std::vector<double>{std::log(13.0) - sd * sd / 2}, std::vector<int>{0});
    BeliefState b = dbn->prior(0);
    for (int i = 0; i < 10; ++i) b.predict();
    const auto marg = b.crack_marginal(0);
    std::vector<double> freq(marg.size(), 0.0);
    Rng rng = substream(11, "transition");
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        GroundTruth g = dbn->sample_prior_truth(rng);
        for (int y = 0; y < 10; ++y) dbn->grow_truth(g);
        const auto& c = g.components[0];
        freq[static_cast<std::size_t>(c.failed ? dbn->grid().failed() : dbn->grid().bin_of(c.depth))] += 1.0 / n;
    }
    double tv = 0.0;
    for (std::size_t d = 0; d < marg.size(); ++d) tv += 0.5 * std::abs(freq[d] - marg[d]);
    EXPECT_LT(tv, 0.03);
}

TEST(Dbn, ChainSamplesFollowThePredictedBelief)
{
    const toy::Toy t = toy::make_toy();
    const DbnModel& m = *t.dbn;
    BeliefState b = m.prior(0);
    for (int i = 0; i < 4; ++i) b.predict();
    const int n = 40000;
    std::vector<std::vector<double>> freq(2, std::vector<double>(static_cast<std::size_t>(m.nD()), 0.0));
    Rng rng = substream(5, "chain");
    for (int i = 0; i < n; ++i) {
        ChainState s = sample_chain_state(m.prior(0), rng);
        for (int y = 0; y < 4; ++y) m.advance_chain(s, rng);
        for (int k = 0; k < 2; ++k) freq[static_cast<std::size_t>(k)][static_cast<std::size_t>(s.index[static_cast<std::size_t>(k)] % m.nD())] += 1.0 / n;
    }
    for (int k = 0; k < 2; ++k) {
        const auto marg = b.crack_marginal(k);
        for (std::size_t d = 0; d < marg.size(); ++d)
            EXPECT_NEAR(freq[static_cast<std::size_t>(k)][d], marg[d], 4.0 * std::sqrt(marg[d] / n) + 1e-3);
    }
}

TEST(Dbn, ChainDepthStaysInItsBin)
{
    const toy::Toy t = toy::make_toy();
    const DbnModel& m = *t.dbn;
    Rng rng = substream(6, "chain-depth");
    ChainState s = sample_chain_state(m.prior(0), rng);
    for (int i = 0; i < 200; ++i) {
        m.advance_chain(s, rng);
        const int d = s.index[0] % m.nD();
        const double depth = m.chain_depth(s, 0, rng);
        if (d == m.grid().failed()) {
            EXPECT_EQ(depth, m.fatigue().critical_depth);
            m.repair_chain(s, 0, rng);
            EXPECT_NE(s.index[0] % m.nD(), m.grid().failed());
        } else {
            EXPECT_EQ(m.grid().bin_of(depth), d);
        }
    }
}
