#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lobexec/valuation.hpp"
#include "support.hpp"

using namespace lobexec;
using namespace lobexec::testing;

namespace {

struct Fixture {
    Market market;
    BoundaryTable table;
    Valuation val;
    Fixture(Market m, double y_max)
        : market(std::move(m)), table(make(market, y_max)), val(market, table) {}
    static BoundaryTable make(const Market& m, double y_max) {
        TabulateOptions o;
        o.y_max = y_max;
        return tabulate(m, o);
    }
};

}  // namespace

class ValuationModels : public ::testing::TestWithParam<int> {
 protected:
    static Market market() {
        switch (GetParam()) {
            case 0: return bm_market();
            case 1: return lvg_market();
            default:
                return Market{LevyModel(0.0, kSigma2), BookShape::block(kDepth, -1.0), Resilience::exponential(kLambda), 1e-2};
        }
    }
};

TEST_P(ValuationModels, BoundaryRowIsBookIntegral) {
    const Fixture f(market(), 500.0);
    EXPECT_EQ(f.val.value(0.0, 0.0), 0.0);
    for (double z : {-1.0, -300.0}) EXPECT_NEAR(f.val.value(0.0, z), f.market.A * z * z / (2 * kDepth), 1e-15);
}

TEST_P(ValuationModels, ValueEqualsPerformanceOfSimulatedPath) {
    const Fixture f(market(), 500.0);
    for (auto [y, z] : {std::pair{400.0, 0.0}, {400.0, -300.0}, {50.0, -1.0}, {250.0, -20.0}, {3.0, -0.1}}) {
        const double v = f.val.value(y, z);
        const double j = performance(simulate(f.table, f.market, y, z), f.market);
        EXPECT_LE(std::abs(v - j), 1e-8 * (1 + std::abs(v))) << y << "," << z;
    }
    // on the boundary itself
    const double b = f.table.beta(321.0);
    EXPECT_NEAR(f.val.value(321.0, b), performance(simulate(f.table, f.market, 321.0, b), f.market), 1e-9);
}

TEST_P(ValuationModels, ContinuousAcrossBoundaryWithContinuousZDerivative) {
    const Fixture f(market(), 500.0);
    for (double y : {7.0, 120.0, 444.0}) {
        const double b = f.table.beta(y);
        const double up = f.val.value(y, b + 1e-7), down = f.val.value(y, b - 1e-7);
        EXPECT_NEAR(up, down, 1e-8 * (1 + std::abs(up)));
        const auto d_up = f.val.derivatives(y, b + 1e-9), d_down = f.val.derivatives(y, b - 1e-9);
        EXPECT_NEAR(d_up.dz, d_down.dz, 1e-6 * (std::abs(d_up.dz) + 1e-12));
    }
}

TEST_P(ValuationModels, AnalyticDerivativesMatchFiniteDifferences) {
    const Fixture f(market(), 500.0);
    for (auto [y, z] : {std::pair{300.0, -100.0}, {300.0, -1.0}, {80.0, -40.0}, {80.0, -0.2}}) {
        const auto d = f.val.derivatives(y, z);
        const double hz = 1e-4 * std::max(1.0, std::abs(z)) * (z < -1.0 ? 1.0 : 0.1);
        const double fd_z = (f.val.value(y, z + hz) - f.val.value(y, z - hz)) / (2 * hz);
        EXPECT_NEAR(d.dz, fd_z, 1e-5 * std::abs(d.dz) + 1e-12) << y << "," << z;
        // one-sided difference from the left in y (second order)
        const double hy = 1e-3;
        const double fd_y = (3 * f.val.value(y, z) - 4 * f.val.value(y - hy, z) + f.val.value(y - 2 * hy, z)) / (2 * hy);
        EXPECT_NEAR(d.dy_minus, fd_y, 1e-5 * std::abs(d.dy_minus) + 1e-12) << y << "," << z;
    }
}

TEST_P(ValuationModels, HjbResidualsOnRandomStates) {
    const Fixture f(market(), 500.0);
    const auto pts = sample_solvency_region(f.table, 500.0, 3000, 17);
    const HjbReport r = hjb_check(f.val, pts);
    EXPECT_LE(r.sell_equality_max, 1e-8);
    EXPECT_LE(r.wait_equality_max, 1e-8);
    EXPECT_LE(r.sell_inequality_max, 1e-8);
    EXPECT_LE(r.wait_inequality_max, 1e-8);
    EXPECT_GT(r.sell_points, 0u);
    EXPECT_LT(r.sell_points, r.points);
}

TEST_P(ValuationModels, PerturbedStrategiesNeverBeatTheValue) {
    const Fixture f(market(), 600.0);
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> scale(0.5, 1.5), shift(-20.0, -0.01), frac(0.0, 1.0);
    const std::pair<double, double> starts[] = {{400.0, 0.0}, {200.0, -150.0}, {60.0, -5.0}};
    for (int k = 0; k < 50; ++k) {
        const auto [y, z] = starts[k % 3];
        const double v = f.val.value(y, z);
        double j;
        if (k % 2 == 0) {
            const BoundaryTable p = perturbed_table(f.table, scale(rng), shift(rng));
            j = performance(simulate(p, f.market, y, z), f.market);
        } else {
            // block of arbitrary size, then the optimal rule
            const double d = frac(rng) * y;
            j = performance(simulate(f.table, f.market, y - d, z - d), f.market);
        }
        EXPECT_GE(j, v - 1e-9 * (1 + v)) << k;
    }
}

INSTANTIATE_TEST_SUITE_P(Models, ValuationModels, ::testing::Values(0, 1, 2));

TEST(Performance, WaitPrefixClosedForm) {
    const Fixture f(bm_market(), 500.0);
    const StrategyPath p = simulate(f.table, f.market, 300.0, -200.0);
    const double b = f.table.beta(300.0);
    const double ref = f.market.kappa_A(300.0) * p.wait_time - f.market.A * f.market.book.psi_integral(-200.0, b);
    EXPECT_NEAR(wait_prefix_cost(p, f.market), ref, 1e-13);
    EXPECT_NEAR(p.wait_time, std::log(-200.0 / b) / kLambda, 1e-12);
}

TEST(Performance, ZeroPosition) {
    const Fixture f(bm_market(), 100.0);
    const StrategyPath p = simulate(f.table, f.market, 0.0, -30.0);
    EXPECT_NEAR(performance(p, f.market), f.market.A * 900.0 / (2 * kDepth), 1e-15);
}

TEST(Valuation, RejectsInsolventStates) {
    const Market m = avg_market();
    const Fixture f(m, 1.2 * m.ybar_A());
    EXPECT_THROW(f.val.value(m.ybar_A() + 500.0, -900.0), std::domain_error);
    EXPECT_NO_THROW(f.val.value(m.ybar_A() + 500.0, -100.0));
}

TEST(Utility, TrivialCasesAndBothForms) {
    const Market m = bm_market();
    const UtilityForms u0 = utility(m, 1.0, 2.5, 0.0, 0.0, 0.0);
    EXPECT_DOUBLE_EQ(u0.resting, -std::exp(-m.A * 2.5));
    EXPECT_DOUBLE_EQ(u0.walk, u0.resting);
    const Market tiny = bm_market(1e-14);
    EXPECT_NEAR(utility(tiny, 1.0, 0.0, 100.0, -5.0, 0.0).resting, -1.0, 1e-10);
    const UtilityForms u = utility(m, 1.0, 0.0, 100.0, -10.0, 0.01);
    EXPECT_NEAR(u.resting_log, -m.A * 100.0 + m.A * m.book.psi_integral(-10.0, 0.0) + 0.01, 1e-15);
    EXPECT_NEAR(u.walk_log, -m.A * 100.0 + m.A * m.book.psi_integral(-10.0, -110.0) + 0.01, 1e-15);
    EXPECT_TRUE(std::isnan(utility(m, 1.0, 0.0, 2000.0, -10.0, 0.0).walk));
    EXPECT_THROW(utility(m, 0.0, 0.0, 1.0, 0.0, 0.0), std::invalid_argument);
}
