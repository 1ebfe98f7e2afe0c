#include "lobexec/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace lobexec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct WaitMove {
    std::size_t lo;  // node index at or above the landing point (closer to 0)
    double w;        // weight on node lo + 1
    double cost;     // exact running cost accrued during the step
};

double choose_dt(const Market& m, const GridSpec& g, double q, std::size_t n_z) {
    if (g.dt > 0.0) return g.dt;
    double h_max = 0.0;
    for (std::size_t j = 1; j <= n_z; ++j) h_max = std::max(h_max, std::abs(m.resilience.h(-static_cast<double>(j) * q)));
    if (!(h_max > 0.0)) throw std::runtime_error("oracle: resilience vanishes on the grid");
    return q / h_max;
}

DpResult run(const Market& m, const GridSpec& g, const FeedbackPolicy* policy) {
    m.validate();
    if (!(g.y_max > 0.0) || g.n_y < 2 || g.n_z < 2)
        throw std::invalid_argument("oracle: need y_max > 0 and at least 2 cells per axis");
    const double q = g.y_max / static_cast<double>(g.n_y);
    std::size_t n_z = g.n_z;
    const double zbar = m.book.zbar();
    while (static_cast<double>(n_z) * q > -zbar) --n_z;
    const double dt = choose_dt(m, g, q, n_z);
    DpResult r(g.n_y, n_z, q, dt);
    const double A = m.A;
    const double ybar = m.ybar_A();

    // wait transitions do not depend on y
    std::vector<WaitMove> moves(n_z + 1);
    for (std::size_t j = 0; j <= n_z; ++j) {
        const double z = r.z(j);
        const double z1 = m.resilience.decay(z, dt);
        const double pos = -z1 / q;  // fractional node index of the landing point
        std::size_t lo = static_cast<std::size_t>(std::floor(pos));
        if (lo >= j) lo = j == 0 ? 0 : j - 1;
        double w = pos - static_cast<double>(lo);
        w = std::clamp(w, 0.0, 1.0);
        moves[j] = {lo, w, -A * m.book.psi_integral(z, z1)};
    }

    for (std::size_t j = 0; j <= n_z; ++j) {
        r.value(0, j) = A * m.book.psi_integral(0.0, r.z(j));
        r.set_sells(0, j, false);
    }
    std::vector<double> s_prev(n_z + 1, kInf), s_cur(n_z + 1, kInf);
    for (std::size_t i = 1; i <= g.n_y; ++i) {
        const double y = r.y(i);
        const double kappa = y < ybar ? m.kappa_A(y) : kInf;
        for (std::size_t j = 0; j <= n_z; ++j) {
            const double z = r.z(j);
            const bool solvent = std::isinf(ybar) || z > y - ybar + zbar;
            // best value reachable by selling one or more quanta
            double sell = kInf;
            if (j + 1 <= n_z) sell = std::min(r.value(i - 1, j + 1), s_prev[j + 1]);
            s_cur[j] = sell;
            if (!solvent) {
                r.value(i, j) = kInf;
                r.set_sells(i, j, false);
                continue;
            }
            const WaitMove& mv = moves[j];
            const double c = kappa * dt + mv.cost;
            double wait;
            if (mv.lo + 1 == j || (j == 0 && mv.lo == 0)) {
                // landing between node j and the one above: closed-form fixed point
                const double above = j == 0 ? kInf : r.value(i, j - 1);
                if (j == 0)
                    wait = c > 0.0 ? kInf : sell;
                else if (mv.w >= 1.0)
                    wait = c > 0.0 ? kInf : above;
                else
                    wait = above + c / (1.0 - mv.w);
            } else {
                wait = c + (1.0 - mv.w) * r.value(i, mv.lo) + mv.w * r.value(i, mv.lo + 1);
            }
            bool do_sell;
            if (policy)
                do_sell = (*policy)(y, z) && std::isfinite(sell);
            else
                do_sell = sell < wait;
            r.value(i, j) = do_sell ? sell : wait;
            r.set_sells(i, j, do_sell);
        }
        std::swap(s_prev, s_cur);
    }
    r.sweeps = 1;

    // Verification sweep: every node must satisfy its own Bellman equation.
    double residual = 0.0;
    for (std::size_t i = 1; i <= g.n_y; ++i) {
        const double y = r.y(i);
        const double kappa = y < ybar ? m.kappa_A(y) : kInf;
        for (std::size_t j = 1; j <= n_z; ++j) {
            const double v = r.value(i, j);
            if (!std::isfinite(v)) continue;
            const WaitMove& mv = moves[j];
            const double wait = kappa * dt + mv.cost + (1.0 - mv.w) * r.value(i, mv.lo) +
                                mv.w * r.value(i, mv.lo + 1);
            double target = wait;
            if (r.sells(i, j)) target = j + 1 <= n_z ? r.value(i - 1, j + 1) : kInf;
            if (r.sells(i, j) && j + 1 <= n_z && !std::isfinite(target)) continue;
            if (!r.sells(i, j) && !policy) {
                // selling must not be better than waiting
                const double sell = j + 1 <= n_z ? r.value(i - 1, j + 1) : kInf;
                residual = std::max(residual, std::max(0.0, v - sell));
            }
            if (std::isfinite(target)) residual = std::max(residual, std::abs(v - target) / (1.0 + std::abs(v)));
        }
    }
    r.residual = residual;
    if (residual > g.convergence_tol && !policy) {
        std::ostringstream os;
        os << "oracle: Bellman residual " << residual << " exceeds tolerance after " << r.sweeps
           << " sweep(s)";
        throw std::runtime_error(os.str());
    }
    return r;
}

}  // namespace

DpResult::DpResult(std::size_t n_y, std::size_t n_z, double q, double dt)
    : n_y_(n_y), n_z_(n_z), q_(q), dt_(dt), v_((n_y + 1) * (n_z + 1), kInf), sell_((n_y + 1) * (n_z + 1), 0) {}

double DpResult::sell_frontier(std::size_t i) const {
    double lowest = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t j = 0; j <= n_z_; ++j)
        if (sells(i, j)) lowest = z(j);
    return lowest;
}

DpResult solve_dp(const Market& market, const GridSpec& grid) { return run(market, grid, nullptr); }

DpResult evaluate_policy(const Market& market, const GridSpec& grid, const FeedbackPolicy& sell) {
    return run(market, grid, &sell);
}

double policy_cost(const StrategyPath& path, const Market& market, const GridSpec& grid) {
    if (!path.table) throw std::invalid_argument("policy_cost: path has no boundary table");
    const BoundaryTable& table = *path.table;
    FeedbackPolicy rule = [&table](double y, double z) { return y > 0.0 && z > table.beta(y); };
    const DpResult r = evaluate_policy(market, grid, rule);
    const double i = std::round(path.y0 / r.q());
    const double j = std::round(-path.z0 / r.q());
    if (i < 0 || i > static_cast<double>(r.n_y()) || j < 0 || j > static_cast<double>(r.n_z()))
        throw std::out_of_range("policy_cost: starting state outside the grid");
    return r.value(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
}

}  // namespace lobexec
