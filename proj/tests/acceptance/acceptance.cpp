// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any selected criterion fails.
#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "lobexec/montecarlo.hpp"
#include "lobexec/oracle.hpp"
#include "lobexec/valuation.hpp"

using namespace lobexec;

namespace {

constexpr double kMu = -0.0018;
constexpr double kSigma2 = 4.011e-4;
constexpr double kDepth = 1000.0;
constexpr double kLambda = 5.0;
const VarianceGammaParams kVg{0.02, 0.6, -0.002};

Market bm(double A = 1e-2, double mu = kMu) {
    return {LevyModel(mu, kSigma2), BookShape::block(kDepth, -1.0), Resilience::exponential(kLambda), A};
}
Market lvg(double A = 1e-2, double mu = kMu) {
    return {LevyModel(mu, 0.0, LinearVarianceGamma{kVg}), BookShape::block(kDepth, -1.0),
            Resilience::exponential(kLambda), A};
}

BoundaryTable table_for(const Market& m, double y_max) {
    TabulateOptions o;
    o.y_max = y_max;
    o.threads = std::max(1u, std::thread::hardware_concurrency());
    return tabulate(m, o);
}

double kInf() { return std::numeric_limits<double>::infinity(); }

unsigned threads() { return std::max(1u, std::thread::hardware_concurrency()); }

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// Brownian price, block book, exponential resilience: the boundary solves a quadratic.
Outcome closed_form_match() {
    double worst = 0.0;
    std::size_t points = 0;
    for (double A : {1e-3, 1e-2}) {
        const Market m = bm(A);
        for (int i = 0; i < 250; ++i) {
            const double y = 1e-2 * std::pow(1e6, i / 249.0);
            const double k = A * A * kSigma2 * y * y / 2 - A * kMu * y;
            const double kp = A * A * kSigma2 * y - A * kMu;
            const double root = kDepth / (2 * kLambda * A) * (-kp - std::sqrt(kp * kp + 4 * kLambda * A * k / kDepth));
            const double exact = std::max(root, -kDepth);
            const double got = solve_beta(m, y).beta_star;
            worst = std::max(worst, std::abs(got - exact) / std::abs(exact));
            ++points;
        }
    }
    return {worst <= 1e-8, std::to_string(points) + " points, max rel err " + fmt("%.3g", worst)};
}

Outcome example_blocks() {
    struct Case {
        const char* name;
        Market m;
        double lo, hi;
    };
    const Case cases[] = {{"lvg", lvg(), 180.0, 220.0}, {"bm", bm(), 135.0, 165.0}};
    bool ok = true;
    std::ostringstream os;
    for (const auto& c : cases) {
        const BoundaryTable t = table_for(c.m, 1e4);
        const InitialAction a = initial_action(t, c.m.resilience, 1e4, 0.0);
        const double block = a.kind == InitialAction::Kind::Block ? a.amount : 0.0;
        const double bid = 1.0 + c.m.book.psi(-block);
        const bool in = block >= c.lo && block <= c.hi;
        ok = ok && in;
        os << c.name << " block " << fmt("%.2f", block) << " (want " << c.lo << ".." << c.hi << "), bid "
           << fmt("%.3f", bid) << "; ";
    }
    return {ok, os.str()};
}

Outcome value_matches_performance() {
    const Market m = bm();
    const BoundaryTable t = table_for(m, 1e4);
    const Valuation val(m, t);
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> uy(1.0, 1e4), uu(0.0, 1.0);
    double worst = 0.0;
    int sell = 0, wait = 0, on = 0;
    for (int k = 0; k < 50; ++k) {
        const double y = uy(rng), b = t.beta(y);
        double z = b;
        if (k % 3 == 0) z = b + uu(rng) * (0.0 - b);
        if (k % 3 == 1) z = b + uu(rng) * (m.book.zbar() - b);
        switch (classify(t, y, z)) {
            case Region::Sell: ++sell; break;
            case Region::Wait: ++wait; break;
            case Region::OnBoundary: ++on; break;
        }
        const double v = val.value(y, z);
        const double j = performance(simulate(t, m, y, z), m);
        worst = std::max(worst, std::abs(v - j) / (1 + std::abs(v)));
    }
    return {worst <= 1e-6, "sell " + std::to_string(sell) + ", wait " + std::to_string(wait) + ", boundary " +
                               std::to_string(on) + ", max scaled diff " + fmt("%.3g", worst)};
}

Outcome hjb_residuals() {
    bool ok = true;
    std::ostringstream os;
    for (const auto& [name, m] : {std::pair{"bm", bm()}, {"lvg", lvg()}}) {
        const BoundaryTable t = table_for(m, 1e4);
        const Valuation val(m, t);
        const HjbReport r = hjb_check(val, sample_solvency_region(t, 1e4, 10000, 5), threads());
        const double eq = std::max(r.sell_equality_max, r.wait_equality_max);
        const double ineq = std::max(r.sell_inequality_max, r.wait_inequality_max);
        ok = ok && eq <= 1e-8 && ineq <= 1e-8;
        os << name << " equality " << fmt("%.3g", eq) << ", inequality " << fmt("%.3g", ineq) << " over "
           << r.points << " points; ";
    }
    return {ok, os.str()};
}

Outcome oracle_agreement() {
    const Market m = bm();
    const BoundaryTable t = table_for(m, 400.0);
    const Valuation val(m, t);
    struct Level {
        double err, scale, frontier;
    };
    auto level = [&](std::size_t n) {
        GridSpec g;
        g.y_max = 400.0;
        g.n_y = n;
        g.n_z = n;
        const DpResult r = solve_dp(m, g);
        Level l{0.0, 0.0, 0.0};
        double vz = 0.0;
        for (std::size_t i = 1; i <= r.n_y(); ++i)
            for (std::size_t j = 0; j < r.n_z(); ++j) {
                l.err = std::max(l.err, std::abs(r.value(i, j) - val.value(r.y(i), r.z(j))));
                vz = std::max(vz, std::abs(val.derivatives(r.y(i), r.z(j)).dz));
            }
        l.scale = r.q() * vz;
        for (std::size_t i = 1; i <= r.n_y(); ++i) {
            const double f = r.sell_frontier(i);
            l.frontier = std::max(l.frontier, std::isnan(f) ? kInf() : std::abs(f - t.beta(r.y(i))) / r.q());
        }
        return l;
    };
    const Level a = level(200), b = level(400);
    const double ratio = a.err / b.err;
    const bool ok = a.err <= 5 * a.scale && ratio >= 1.8 && a.frontier <= 2.0;
    return {ok, "max diff " + fmt("%.3g", a.err) + " vs 5 x step cost " + fmt("%.3g", 5 * a.scale) +
                    ", refinement ratio " + fmt("%.3f", ratio) + ", frontier " + fmt("%.2f", a.frontier) + " cells"};
}

Outcome monte_carlo_forms() {
    const Market m = bm();
    const double y0 = 100.0, z0 = 0.0, b = 1.0, c = 0.0;
    const BoundaryTable t = table_for(m, 200.0);
    const Valuation val(m, t);
    const UtilityForms u = utility(m, b, c, y0, z0, val.value(y0, z0));
    const StrategyPath path = simulate(t, m, y0, z0);
    const auto grid = make_time_grid(path.t_bar, 0.01, {path.wait_time});
    int resting_ok = 0, walk_ok = 0;
    std::ostringstream os;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const PathSampler s(m.levy, grid, 1e-3, seed);
        const UtilityEstimate e = estimate_utility(path, m, s, c, b, 100000, threads());
        const double zr = (e.log_mean - u.resting_log) / e.log_stderr;
        const double zw = std::isnan(u.walk_log) ? kInf() : (e.log_mean - u.walk_log) / e.log_stderr;
        resting_ok += std::abs(zr) <= 3.0;
        walk_ok += std::abs(zw) <= 3.0;
        os << fmt("%.2f", zr) << "/" << fmt("%.1f", zw) << " ";
    }
    const bool ok = resting_ok == 5 && walk_ok == 0;
    return {ok, "z-scores resting-book/full-walk per seed: " + os.str() + "-> resting-book form selected on " +
                    std::to_string(resting_ok) + " of 5 seeds"};
}

Outcome property_suites() {
    std::ostringstream os;
    bool ok = true;
    auto note = [&](const char* name, bool pass, const std::string& extra = {}) {
        ok = ok && pass;
        os << name << (pass ? " ok" : " FAILED") << extra << "; ";
    };

    // inverse identities of the tabulated boundary
    {
        const Market m = bm();
        const BoundaryTable t = table_for(m, 2000.0);
        double interp = 0.0;
        const auto& y = t.y_grid();
        for (std::size_t i = 2; i < y.size(); i += 7) {
            const double mid = 0.5 * (y[i - 1] + y[i]);
            interp = std::max(interp, std::abs(t.beta(mid) - solve_beta(m, mid).beta_star));
        }
        const double tol = 2 * interp + 1e-12 * kDepth;
        std::mt19937_64 rng(21);
        std::uniform_real_distribution<double> us(t.beta(2000.0) - 2000.0, 0.0), uz(t.beta(2000.0), 0.0),
            uy(0.0, 2000.0);
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const double x = us(rng), z = uz(rng), yy = uy(rng);
            const double yz = t.beta_inv(z).y;
            worst = std::max({worst, std::abs(t.rho_beta_inv(x) - (x + t.gamma_beta_inv(x))) / tol,
                              std::abs(t.gamma_beta_inv(t.rho_beta(z)) - yz) / (tol + 1e-9 * (1 + yz)),
                              std::abs(t.rho_beta_inv(t.gamma_beta(yy)) - t.beta(yy)) / tol});
        }
        note("inverse identities", worst <= 1.0, " (worst/tol " + fmt("%.3g", worst) + ")");
    }
    // recovery of the book
    {
        const Resilience r = Resilience::exponential(kLambda);
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> uz(-999.0, -1e-3), ut(0.0, 2.0);
        double worst = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const double z = uz(rng), s = ut(rng), u = ut(rng);
            worst = std::max(worst, std::abs(r.decay(r.decay(z, s), u) - r.decay(z, s + u)));
            double z1 = uz(rng), z2 = uz(rng);
            if (z1 > z2) std::swap(z1, z2);
            worst = std::max(worst, std::abs(r.decay(z1, r.big_h(z1) - r.big_h(z2)) - z2));
        }
        note("decay semigroup and travel time", worst <= 1e-9, " (" + fmt("%.3g", worst) + ")");
    }
    // cumulant shape
    {
        bool good = true;
        for (const Market& m : {bm(), lvg()}) {
            const LevyModel& l = m.levy;
            std::mt19937_64 rng(7);
            std::uniform_real_distribution<double> u(-80.0, 0.5);
            for (int i = 0; i < 200; ++i) {
                const double a = u(rng), b = u(rng), mid = l.cumulant(0.5 * (a + b));
                good = good && mid <= 0.5 * (l.cumulant(a) + l.cumulant(b)) + 1e-14 * (1 + std::abs(mid));
            }
            auto central = [&](double x, double h) { return (l.cumulant(x + h) - l.cumulant(x - h)) / (2 * h); };
            for (double th : {-40.0, -4.0, -0.2}) {
                const double h = 1e-2 * std::max(1.0, std::abs(th));
                const double fd = (4 * central(th, h / 2) - central(th, h)) / 3;
                good = good && std::abs(fd - l.cumulant_derivative(th)) <= 1e-7 * std::abs(l.cumulant_derivative(th));
            }
        }
        note("cumulant convexity and derivatives", good);
    }
    // small-position limits of the boundary
    {
        bool first_ok = true, second_ok = true;
        double second_last = 0.0;
        for (const Market& m : {bm(), lvg()}) {
            double pa = kInf(), pb = kInf(), ra = 0.0, rb = 0.0;
            for (double y : {1e-2, 1e-3, 1e-4}) {
                const double b = solve_beta(m, y).beta_star;
                ra = std::abs(m.kappa_A(y) / m.resilience.h(b));
                rb = std::abs(m.kappa_A_prime(y) * m.resilience.big_h(b));
                first_ok = first_ok && ra < pa;
                second_ok = second_ok && rb < pb;
                pa = ra;
                pb = rb;
            }
            first_ok = first_ok && ra < 1e-6;
            second_ok = second_ok && rb < 1e-7;
            second_last = std::max(second_last, rb);
        }
        note("kappa_A/h(beta) -> 0", first_ok);
        note("kappa_A' H(beta) -> 0", second_ok, " (" + fmt("%.3g", second_last) + " at y = 1e-4)");
    }
    // perturbed boundaries and block sizes never beat the value
    {
        const Market m = bm();
        const BoundaryTable t = table_for(m, 2000.0);
        const Valuation val(m, t);
        std::mt19937_64 rng(41);
        std::uniform_real_distribution<double> scale(0.5, 1.5), shift(-20.0, -0.01), frac(0.0, 1.0);
        const std::pair<double, double> starts[] = {{1500.0, 0.0}, {800.0, -300.0}, {60.0, -5.0}};
        double worst = -kInf();
        for (int k = 0; k < 50; ++k) {
            const auto [y, z] = starts[k % 3];
            const double v = val.value(y, z);
            double j;
            if (k % 2 == 0) {
                std::vector<double> bs = t.beta_star(), bl = t.beta_lower();
                const double a = scale(rng), d = shift(rng);
                auto move = [&](double x) { return std::clamp(a * x + d, t.zbar(), 0.0); };
                for (std::size_t i = 0; i < bs.size(); ++i) {
                    bs[i] = i == 0 ? 0.0 : move(bs[i]);
                    bl[i] = move(bl[i]);
                }
                const BoundaryTable p(t.y_grid(), bs, bl, t.ybar_A(), t.zbar());
                j = performance(simulate(p, m, y, z), m);
            } else {
                const double d = frac(rng) * std::min(y, z - m.book.zbar());
                j = performance(simulate(t, m, y - d, z - d), m);
            }
            worst = std::max(worst, (v - j) / (1 + v));
        }
        note("perturbation dominance", worst <= 1e-9, " (largest gain " + fmt("%.3g", worst) + ")");
    }
    return {ok, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance checks"};
    std::vector<int> selected;
    app.add_option("--criterion", selected, "run only these criteria (1-7)")->check(CLI::Range(1, 7));
    CLI11_PARSE(app, argc, argv);
    if (selected.empty()) selected = {1, 2, 3, 4, 5, 6, 7};

    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"closed-form boundary match", closed_form_match},
        {"published block sizes", example_blocks},
        {"value equals performance", value_matches_performance},
        {"HJB residuals", hjb_residuals},
        {"grid oracle agreement", oracle_agreement},
        {"Monte Carlo utility", monte_carlo_forms},
        {"property suites", property_suites},
    };
    int failures = 0;
    for (int id : selected) {
        const auto& [name, run] = criteria[static_cast<std::size_t>(id - 1)];
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        while (!o.detail.empty() && (o.detail.back() == ' ' || o.detail.back() == ';')) o.detail.pop_back();
        std::printf("criterion %d %s: %s [%s] (%.1f s)\n", id, o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
        std::fflush(stdout);
        failures += !o.pass;
    }
    return failures == 0 ? 0 : 1;
}
