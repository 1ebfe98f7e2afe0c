#include "lobexec/valuation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

namespace lobexec {

namespace {

using numerics::kInf;

std::size_t first_vertex_at_or_below(const std::vector<double>& vs, double s) {
    auto it = std::lower_bound(vs.begin(), vs.end(), s, [](double a, double b) { return a > b; });
    return static_cast<std::size_t>(it - vs.begin());
}

}  // namespace

Valuation::Valuation(const Market& market, const BoundaryTable& table, numerics::QuadratureOptions quad)
    : market_(market), table_(table), quad_(quad) {
    const auto& v = table_.vertices();
    const auto& vs = table_.vertex_s();
    final_vertex_ = v.size() > 1 && v[1].y == 0.0 ? 1 : 0;
    const double b0 = table_.beta_zero_plus();
    beta0_psi_ = market_.A * market_.book.psi_integral(0.0, b0);

    sell_cum_.assign(vs.size(), 0.0);
    for (std::size_t k = final_vertex_ + 1; k < vs.size(); ++k) {
        const double piece = numerics::integrate([this](double u) { return sell_integrand(u); },
                                                 vs[k - 1], vs[k], quad_)
                                 .value;
        sell_cum_[k] = sell_cum_[k - 1] + piece;
    }

    const auto& y = table_.y_grid();
    wait_cum_.assign(y.size(), 0.0);
    for (std::size_t i = 1; i < y.size(); ++i) {
        if (y[i - 1] >= table_.ybar_A()) {
            wait_cum_[i] = kInf;
            continue;
        }
        const double piece = numerics::integrate([this](double u) { return wait_integrand(u); },
                                                 y[i - 1], std::min(y[i], table_.ybar_A()), quad_)
                                 .value;
        wait_cum_[i] = wait_cum_[i - 1] + piece;
    }
}

double Valuation::sell_integrand(double u) const {
    const GraphPoint p = table_.intersect(u);
    const double kappa = p.y > 0.0 ? market_.kappa_A(p.y) : 0.0;
    double f = market_.A * market_.book.psi(p.z);
    if (kappa != 0.0) f += kappa / market_.resilience.h(p.z);
    return f;
}

double Valuation::wait_integrand(double u) const {
    const double b = table_.beta(u);
    const double kappa = market_.kappa_A(u);
    const double kappa_p = market_.kappa_A_prime(u);
    double g = market_.A * market_.book.psi(b);
    if (kappa != 0.0) g += kappa / market_.resilience.h(b);
    if (kappa_p != 0.0) g += kappa_p * market_.resilience.big_h(b);
    return g;
}

double Valuation::value(double y, double z) const {
    if (!table_.solvent(y, z)) throw std::domain_error("value: state outside the solvency region");
    const double A = market_.A;
    if (y == 0.0) return A * market_.book.psi_integral(0.0, z);
    if (y > table_.y_max()) throw std::out_of_range("value: y beyond the boundary table");
    const double b = table_.beta(y);
    if (z > b) {
        const double s = z - y;
        const auto& vs = table_.vertex_s();
        if (s >= vs[final_vertex_]) return A * market_.book.psi_integral(0.0, s);
        const std::size_t k = first_vertex_at_or_below(vs, s);
        const double partial = numerics::integrate([this](double u) { return sell_integrand(u); },
                                                   vs[k - 1], s, quad_)
                                   .value;
        return sell_cum_[k - 1] + partial + beta0_psi_;
    }
    const auto& yg = table_.y_grid();
    auto it = std::lower_bound(yg.begin(), yg.end(), y);
    const std::size_t i = static_cast<std::size_t>(it - yg.begin());
    double y_int = wait_cum_[i];
    if (yg[i] != y) {
        y_int = wait_cum_[i - 1] +
                numerics::integrate([this](double u) { return wait_integrand(u); }, yg[i - 1], y,
                                    quad_)
                    .value;
    }
    return market_.kappa_A(y) * market_.resilience.big_h(z) + A * market_.book.psi_integral(0.0, z) -
           y_int;
}

ValueDerivatives Valuation::derivatives(double y, double z) const {
    const double A = market_.A;
    const auto& res = market_.resilience;
    if (y > 0.0 && z > table_.beta(y)) {
        const double d2 = sell_integrand(z - y);
        return {-d2, d2};
    }
    const double kappa = market_.kappa_A(y);
    const double kappa_p = market_.kappa_A_prime(y);
    const double b = table_.beta(y);
    double d4 = A * market_.book.psi(z);
    if (kappa != 0.0) d4 += kappa / res.h(z);
    double d3 = -A * market_.book.psi(b);
    if (kappa != 0.0) d3 -= kappa / res.h(b);
    if (kappa_p != 0.0) d3 += kappa_p * (res.big_h(z) - res.big_h(b));
    return {d3, d4};
}

double wait_prefix_cost(const StrategyPath& path, const Market& market) {
    if (!(path.wait_time > 0.0)) return 0.0;
    const double A = market.A;
    auto f = [&](double t) {
        const double zt = market.resilience.decay(path.z0, t);
        return A * market.resilience.h(zt) * market.book.psi(zt);
    };
    const double impact = numerics::integrate(f, 0.0, path.wait_time, {1e-14, 1e-12, 4000}).value;
    return market.kappa_A(path.y0) * path.wait_time + impact;
}

double performance(const StrategyPath& path, const Market& market) {
    const double A = market.A;
    if (path.y0 == 0.0) return A * market.book.psi_integral(0.0, path.z0);
    double j = wait_prefix_cost(path, market);
    for (const auto& st : path.steps) {
        const double half = 0.5 * (st.t1 - st.t0);
        if (!(half > 0.0)) continue;
        const double mid = 0.5 * (st.t1 + st.t0);
        double sum = 0.0;
        for (std::size_t i = 0; i < numerics::kGauss5Nodes.size(); ++i) {
            const double tt = mid + half * numerics::kGauss5Nodes[i];
            const double s = numerics::hermite(st.t0, st.s0, st.ds0, st.t1, st.s1, st.ds1, tt);
            const GraphPoint p = path.table->intersect(std::min(s, 0.0));
            double f = A * market.resilience.h(p.z) * market.book.psi(p.z);
            if (p.y > 0.0) f += market.kappa_A(p.y);
            sum += numerics::kGauss5Weights[i] * f;
        }
        j += half * sum;
    }
    if (std::isfinite(path.t_bar))
        j += A * market.book.psi_integral(0.0, path.z_at_t_bar);
    else
        j += path.tail_cost;
    return j;
}

HjbReport hjb_check(const Valuation& val, const std::vector<HjbPoint>& points, unsigned threads) {
    const Market& m = val.market();
    const BoundaryTable& table = val.table();
    std::vector<HjbResidual> out(points.size());
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const double y = points[i].y, z = points[i].z;
            const auto d = val.derivatives(y, z);
            const double kappa = m.kappa_A(y);
            const double h = m.resilience.h(z);
            const double ahpsi = m.A * h * m.book.psi(z);
            const bool sell = y > 0.0 && z > table.beta(y);
            HjbResidual r{y, z, sell, 0.0, 0.0, 1.0};
            const double first = d.dy_minus + d.dz;
            const double second = h * d.dz - kappa - ahpsi;
            const double scale_first = std::abs(d.dy_minus) + std::abs(d.dz);
            const double scale_second = std::abs(h * d.dz) + std::abs(kappa) + std::abs(ahpsi);
            if (sell) {
                r.equality = first / std::max(scale_first, 1e-300);
                r.inequality = second / std::max(scale_second, 1e-300);
            } else {
                r.equality = second / std::max(scale_second, 1e-300);
                r.inequality = first / std::max(scale_first, 1e-300);
            }
            r.scale = sell ? scale_first : scale_second;
            out[i] = r;
        }
    };
    threads = std::max(1u, threads);
    if (threads == 1 || points.size() < 2 * threads) {
        work(0, points.size());
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (points.size() + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t b = t * chunk, e = std::min(points.size(), b + chunk);
            if (b < e) pool.emplace_back(work, b, e);
        }
        for (auto& th : pool) th.join();
    }
    HjbReport rep;
    rep.points = points.size();
    const HjbResidual* worst[4] = {nullptr, nullptr, nullptr, nullptr};
    for (const auto& r : out) {
        if (r.sell_region) {
            ++rep.sell_points;
            if (std::abs(r.equality) > rep.sell_equality_max) {
                rep.sell_equality_max = std::abs(r.equality);
                worst[0] = &r;
            }
            if (r.inequality > rep.sell_inequality_max) {
                rep.sell_inequality_max = r.inequality;
                worst[1] = &r;
            }
        } else {
            if (std::abs(r.equality) > rep.wait_equality_max) {
                rep.wait_equality_max = std::abs(r.equality);
                worst[2] = &r;
            }
            if (r.inequality > rep.wait_inequality_max) {
                rep.wait_inequality_max = r.inequality;
                worst[3] = &r;
            }
        }
    }
    for (const auto* w : worst)
        if (w) rep.worst.push_back(*w);
    return rep;
}

std::vector<HjbPoint> sample_solvency_region(const BoundaryTable& table, double y_max,
                                             std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uy(0.0, y_max);
    std::uniform_real_distribution<double> uz(table.zbar(), 0.0);
    std::vector<HjbPoint> pts;
    pts.reserve(count);
    while (pts.size() < count) {
        const double y = uy(rng);
        const double z = uz(rng);
        if (y > 0.0 && z < 0.0 && table.solvent(y, z)) pts.push_back({y, z});
    }
    return pts;
}

UtilityForms utility(const Market& market, double b, double c, double y, double z, double v_value) {
    if (!(b > 0.0)) throw std::invalid_argument("utility: b must be positive");
    const double A = market.A;
    const auto& book = market.book;
    UtilityForms u{};
    const double base = -A * (c + b * y) + v_value;
    u.resting_log = base + A * book.psi_integral(z, 0.0);
    u.resting = -std::exp(u.resting_log);
    if (z - y >= book.zbar()) {
        u.walk_log = base + A * book.psi_integral(z, z - y);
        u.walk = -std::exp(u.walk_log);
    } else {
        u.walk_log = std::numeric_limits<double>::quiet_NaN();
        u.walk = std::numeric_limits<double>::quiet_NaN();
    }
    return u;
}

}  // namespace lobexec
