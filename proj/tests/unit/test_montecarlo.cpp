#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "lobexec/montecarlo.hpp"
#include "lobexec/valuation.hpp"
#include "support.hpp"

using namespace lobexec;
using namespace lobexec::testing;

namespace {

struct Moments {
    double mean = 0.0, var = 0.0, se = 0.0;
};

Moments moments(const std::vector<double>& x) {
    Moments m;
    const double n = static_cast<double>(x.size());
    m.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    for (double v : x) m.var += (v - m.mean) * (v - m.mean);
    m.var /= n - 1;
    m.se = std::sqrt(m.var / n);
    return m;
}

BoundaryTable table_for(const Market& m, double y_max) {
    TabulateOptions o;
    o.y_max = y_max;
    return tabulate(m, o);
}

}  // namespace

TEST(PathSampler, BrownianIncrementsHaveTheRightMoments) {
    const LevyModel bm(kMu, kSigma2);
    const PathSampler s(bm, make_time_grid(1.0, 0.25), 1e-3, 7);
    EXPECT_EQ(s.jump_intensity(), 0.0);
    std::vector<double> first, total;
    for (const auto& row : s.sample_increments(40000)) {
        first.push_back(row[0]);
        total.push_back(std::accumulate(row.begin(), row.end(), 0.0));
    }
    const Moments a = moments(first), b = moments(total);
    EXPECT_LE(std::abs(a.mean - 0.25 * kMu), 4 * a.se);
    EXPECT_LE(std::abs(b.mean - kMu), 4 * b.se);
    // sample variance of a Gaussian: relative standard error sqrt(2 / n)
    EXPECT_LE(rel_err(a.var, 0.25 * kSigma2), 4 * std::sqrt(2.0 / 40000));
    EXPECT_LE(rel_err(b.var, kSigma2), 4 * std::sqrt(2.0 / 40000));
}

TEST(PathSampler, JumpModelReproducesItsCumulant) {
    const LevyModel lvg(kMu, 0.0, LinearVarianceGamma{kVg});
    const double eps = choose_truncation(lvg, 1e-2, 100.0);
    const PathSampler s(lvg, make_time_grid(2.0, 0.5), eps, 11);
    for (double theta : {-2.0, -0.5, 0.8}) {
        std::vector<double> e;
        for (const auto& row : s.sample_increments(40000))
            e.push_back(std::exp(theta * std::accumulate(row.begin(), row.end(), 0.0)));
        const Moments m = moments(e);
        const double exact = std::exp(2.0 * lvg.cumulant(theta));
        EXPECT_LE(std::abs(m.mean - exact), 4 * m.se + 1e-6 * exact) << theta;
    }
}

TEST(PathSampler, LargeJumpsFollowTheLevyMeasure) {
    const LevyModel lvg(kMu, 0.0, LinearVarianceGamma{kVg});
    const double eps = 1e-3;
    const PathSampler s(lvg, make_time_grid(1.0, 1.0), eps, 3);
    auto beyond = [&](const std::function<double(double)>& g) {
        return lvg.jump_integral(g, -kInfinity, -eps) + lvg.jump_integral(g, eps, kInfinity);
    };
    const double mass = beyond([](double) { return 1.0; });
    EXPECT_LE(rel_err(s.jump_intensity(), mass), 1e-8);
    const double mean = beyond([](double z) { return z; }) / mass;
    const double second = beyond([](double z) { return z * z; }) / mass;
    const double small = lvg.jump_integral([](double z) { return z * z; }, -eps, eps);
    EXPECT_LE(rel_err(s.small_jump_variance(), small), 1e-8);

    auto rng = s.path_rng(0);
    std::vector<double> d(200000), d2;
    for (auto& v : d) v = s.draw_jump(rng);
    for (double v : d) {
        EXPECT_GE(std::abs(v), eps * (1 - 1e-12));
        d2.push_back(v * v);
    }
    const Moments m = moments(d), m2 = moments(d2);
    EXPECT_LE(std::abs(m.mean - mean), 4 * m.se);
    EXPECT_LE(std::abs(m2.mean - second), 4 * m2.se);
}

TEST(PathSampler, GeneratorsDependOnlyOnSeedAndPath) {
    const LevyModel lvg(kMu, 0.0, LinearVarianceGamma{kVg});
    const auto grid = make_time_grid(3.0, 0.1);
    const PathSampler a(lvg, grid, 1e-3, 5), b(lvg, grid, 1e-3, 5), c(lvg, grid, 1e-3, 6);
    std::vector<double> x, y, z;
    a.path_increments(17, x);
    b.path_increments(17, y);
    c.path_increments(17, z);
    EXPECT_EQ(x, y);
    EXPECT_NE(x, z);
    b.path_increments(18, y);
    EXPECT_NE(x, y);
}

TEST(PathSampler, SinglePointGridHasNoIncrements) {
    const PathSampler s(LevyModel(kMu, kSigma2), make_time_grid(0.0, 0.1), 1e-3, 1);
    EXPECT_EQ(s.intervals(), 0u);
    std::vector<double> out{1.0};
    s.path_increments(0, out);
    EXPECT_TRUE(out.empty());
}

TEST(Truncation, ChosenLevelMeetsItsTolerance) {
    const LevyModel lvg(kMu, 0.0, LinearVarianceGamma{kVg});
    EXPECT_EQ(choose_truncation(LevyModel(kMu, kSigma2), 1e-2, 100.0), 1e-2);
    for (double tol : {1e-4, 1e-6, 1e-8}) {
        const double theta = -1e-2 * 100.0;
        const double e = choose_truncation(lvg, 1e-2, 100.0, tol);
        auto err = [&](double w) {
            return std::abs(lvg.jump_integral(
                [&](double z) { return std::expm1(theta * z) - theta * z - 0.5 * theta * theta * z * z; }, -w, w));
        };
        const double kappa = std::abs(lvg.cumulant(theta));
        EXPECT_LE(err(e), tol * kappa) << tol;
        if (e < 1e-2 && e > 1e-8) EXPECT_GT(err(2 * e), tol * kappa) << tol;
    }
}

TEST(TimeGrid, MergesEventTimes) {
    const auto g = make_time_grid(1.0, 0.3, {0.45, 0.6, 0.6 + 1e-14, 2.0, -1.0});
    const std::vector<double> expect{0.0, 0.3, 0.45, 0.6, 0.9, 1.0};
    ASSERT_EQ(g.size(), expect.size());
    for (std::size_t k = 0; k < g.size(); ++k) EXPECT_NEAR(g[k], expect[k], 1e-15);
    EXPECT_THROW(make_time_grid(1.0, 0.0), std::invalid_argument);
}

class Accounting : public ::testing::TestWithParam<int> {
 protected:
    static Market market() {
        if (GetParam() == 0) return bm_market();
        if (GetParam() == 1) return lvg_market();
        return {LevyModel(0.0, kSigma2), BookShape::block(kDepth, -1.0), Resilience::exponential(kLambda), 1e-2};
    }
};

TEST_P(Accounting, ImpactCostAgreesWithWalkingTheBook) {
    const Market m = market();
    const BoundaryTable t = table_for(m, 600.0);
    for (auto [y, z] : {std::pair{500.0, 0.0}, {500.0, -300.0}, {40.0, -0.01}, {200.0, -20.0}}) {
        const StrategyPath p = simulate(t, m, y, z);
        const double a = impact_cost(p, m), b = impact_cost_direct(p, m);
        EXPECT_LE(std::abs(a - b), 1e-8 * std::abs(b)) << y << "," << z;
        // the closed-form value splits into these parts plus the cost of the current book state
        const double v = Valuation(m, t).value(y, z);
        const double parts = m.A * (a - m.book.psi_integral(z, 0.0)) + risk_cost(p, m);
        EXPECT_LE(std::abs(parts - v), 1e-7 * v) << y << "," << z;
    }
}

INSTANTIATE_TEST_SUITE_P(Models, Accounting, ::testing::Values(0, 1, 2));

TEST(RealizedCash, EmptyPositionAndFlatPrice) {
    const Market m = bm_market();
    const BoundaryTable t = table_for(m, 400.0);
    const auto grid = make_time_grid(1.0, 0.1);
    const StrategyPath none = simulate(t, m, 0.0, -40.0);
    const std::vector<std::vector<double>> inc(3, std::vector<double>(grid.size() - 1, 0.3));
    for (double c : realized_cash(none, m, inc, grid, 5.0, 2.0)) EXPECT_DOUBLE_EQ(c, 5.0);

    const StrategyPath p = simulate(t, m, 300.0, -10.0);
    const auto g2 = make_time_grid(p.t_bar, 0.1);
    const std::vector<std::vector<double>> zero(2, std::vector<double>(g2.size() - 1, 0.0));
    for (double c : realized_cash(p, m, zero, g2, 1.0, 3.0)) EXPECT_NEAR(c, 1.0 + 900.0 - impact_cost(p, m), 1e-12);
    EXPECT_THROW(realized_cash(p, m, zero, grid, 1.0, 3.0), std::invalid_argument);
}

TEST(Utility, DeterministicPriceGivesAPointMass) {
    const Market m{LevyModel(kMu, 0.0), BookShape::block(kDepth, -1.0), Resilience::exponential(kLambda), 1e-2};
    const BoundaryTable t = table_for(m, 400.0);
    const StrategyPath p = simulate(t, m, 300.0, 0.0);
    const PathSampler s(m.levy, make_time_grid(p.t_bar, 0.05, {p.wait_time}), 1e-3, 2);
    const UtilityEstimate u = estimate_utility(p, m, s, 0.0, 1.0, 500);
    EXPECT_LE(u.stderr_, 1e-14 * std::abs(u.mean));
    EXPECT_NEAR(u.mean_gain, u.expected_gain, 1e-12 * std::abs(u.expected_gain));
    EXPECT_NEAR(u.log_mean, -m.A * (300.0 - impact_cost(p, m) + u.expected_gain), 1e-10);
}

TEST(Utility, ThreadCountDoesNotChangeTheEstimate) {
    const Market m = lvg_market();
    const BoundaryTable t = table_for(m, 400.0);
    const StrategyPath p = simulate(t, m, 300.0, -50.0);
    const PathSampler s(m.levy, make_time_grid(p.t_bar, 0.05), choose_truncation(m.levy, m.A, 300.0), 9);
    const UtilityEstimate a = estimate_utility(p, m, s, 0.0, 1.0, 3001, 1);
    const UtilityEstimate b = estimate_utility(p, m, s, 0.0, 1.0, 3001, 4);
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_EQ(a.stderr_, b.stderr_);
    EXPECT_EQ(a.mean_gain, b.mean_gain);
}

TEST(Utility, TradingGainsAreDriftOnly) {
    // with zero drift the price is a martingale; otherwise the gain centres on mu * int Y dt
    for (const Market& m : {bm_market(), lvg_market()}) {
        const BoundaryTable t = table_for(m, 400.0);
        const StrategyPath p = simulate(t, m, 300.0, 0.0);
        const PathSampler s(m.levy, make_time_grid(p.t_bar, 0.05), choose_truncation(m.levy, m.A, 300.0), 4);
        const UtilityEstimate u = estimate_utility(p, m, s, 0.0, 1.0, 20000, 4);
        EXPECT_LE(std::abs(u.mean_gain - u.expected_gain), 4 * u.gain_stderr);
        EXPECT_EQ(u.clamped, 0u);
    }
}

TEST(Utility, OptimalRuleBeatsPerturbedRulesOnCommonPaths) {
    const Market m = bm_market();
    const BoundaryTable t = table_for(m, 400.0);
    const StrategyPath best = simulate(t, m, 300.0, 0.0);
    std::vector<BoundaryTable> tables;
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> scale(0.3, 2.0), shift(-30.0, -0.05);
    for (int k = 0; k < 20; ++k) tables.push_back(perturbed_table(t, scale(rng), shift(rng)));
    double t_end = best.t_bar;
    std::vector<StrategyPath> paths;
    for (const auto& pt : tables) {
        paths.push_back(simulate(pt, m, 300.0, 0.0));
        t_end = std::max(t_end, paths.back().t_bar);
    }
    const PathSampler s(m.levy, make_time_grid(t_end, 0.02), 1e-3, 31);
    const UtilityEstimate u = estimate_utility(best, m, s, 0.0, 1.0, 4000, 4);
    for (std::size_t k = 0; k < paths.size(); ++k) {
        const UtilityEstimate w = estimate_utility(paths[k], m, s, 0.0, 1.0, 4000, 4);
        EXPECT_GE(u.mean, w.mean) << k;
    }
}
