#include "lobexec/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "lobexec/numerics.hpp"

namespace lobexec {

namespace {

using numerics::kInf;

std::size_t final_vertex(const BoundaryTable& table) {
    const auto& v = table.vertices();
    return v.size() > 1 && v[1].y == 0.0 ? 1 : 0;
}

// first vertex index k with vertex_s[k] <= s
std::size_t vertex_at_or_below(const BoundaryTable& table, double s) {
    const auto& vs = table.vertex_s();
    auto it = std::lower_bound(vs.begin(), vs.end(), s, [](double a, double b) { return a > b; });
    return static_cast<std::size_t>(it - vs.begin());
}

struct SegmentLine {
    GraphPoint a, b;  // a is the vertex reached as s increases
    double sa, sb;
    double y_at(double s) const { return a.y == b.y ? a.y : a.y + (s - sa) * (b.y - a.y) / (sb - sa); }
    double z_at(double s) const { return a.z + (s - sa) * (b.z - a.z) / (sb - sa); }
    bool vertical() const { return a.y == b.y; }
};

SegmentLine segment_line(const BoundaryTable& table, std::size_t k) {
    const auto& v = table.vertices();
    const auto& vs = table.vertex_s();
    return {v[k - 1], v[k], vs[k - 1], vs[k]};
}

}  // namespace

const char* phase_name(Phase p) {
    switch (p) {
        case Phase::Block: return "block";
        case Phase::Wait: return "wait";
        case Phase::Boundary: return "boundary";
        case Phase::Done: return "done";
    }
    return "?";
}

Region classify(const BoundaryTable& table, double y, double z, double tol) {
    if (!table.solvent(y, z)) {
        std::ostringstream os;
        os << "state (y=" << y << ", z=" << z << ") is outside the solvency region";
        throw std::domain_error(os.str());
    }
    if (y == 0.0) return Region::Wait;
    const double b = table.beta(y);
    const double scale = tol * std::max(1.0, std::abs(b));
    if (std::abs(z - b) <= scale) return Region::OnBoundary;
    return z > b ? Region::Sell : Region::Wait;
}

InitialAction initial_action(const BoundaryTable& table, const Resilience& res, double y, double z) {
    const Region r = classify(table, y, z);
    if (y == 0.0 || r == Region::OnBoundary) return {InitialAction::Kind::Block, 0.0};
    if (r == Region::Sell) {
        const double rest = table.gamma_beta_inv(z - y);
        return {InitialAction::Kind::Block, std::max(0.0, y - rest)};
    }
    return {InitialAction::Kind::Wait, res.big_h(z) - res.big_h(table.beta(y))};
}

bool StrategyPath::on_graph(double t) const {
    return !steps.empty() && t >= steps.front().t0 && t <= steps.back().t1;
}

double StrategyPath::graph_s(double t) const {
    if (steps.empty()) throw std::logic_error("path has no graph part");
    auto it = std::lower_bound(steps.begin(), steps.end(), t,
                               [](const GraphStep& st, double tt) { return st.t1 < tt; });
    if (it == steps.end()) it = std::prev(steps.end());
    return numerics::hermite(it->t0, it->s0, it->ds0, it->t1, it->s1, it->ds1, t);
}

double StrategyPath::Y(double t) const {
    if (t < 0.0) return y0;
    if (t < wait_time) return y0;
    if (on_graph(t)) return table->intersect(std::min(graph_s(t), 0.0)).y;
    if (t <= t_end || std::isinf(t_bar)) return y_end;
    return 0.0;
}

double StrategyPath::Z(double t) const {
    if (t < 0.0) return z0;
    if (t < wait_time) return resilience->decay(z0, t);
    if (on_graph(t)) return table->intersect(std::min(graph_s(t), 0.0)).z;
    if (std::isinf(t_bar)) return z_end;
    if (t <= t_bar) return z_end;
    return resilience->decay(z_at_t_bar, t - t_bar);
}

StrategyPath simulate(const BoundaryTable& table, const Market& market, double y, double z,
                      const SimulateOptions& opts) {
    const Resilience& res = market.resilience;
    if (!(y >= 0.0)) throw std::domain_error("simulate: y must be non-negative");
    if (y > table.y_max()) throw std::out_of_range("simulate: y beyond the boundary table");
    const Region region = classify(table, y, z);

    StrategyPath p;
    p.table = &table;
    p.resilience = &res;
    p.y0 = y;
    p.z0 = z;

    double s = z - y;
    double t = 0.0;
    if (y == 0.0) {
        p.t_bar = 0.0;
        p.z_at_t_bar = z;
        p.t_end = 0.0;
        p.z_end = z;
    } else {
        if (region == Region::Wait) {
            const double b = table.beta(y);
            p.wait_time = res.big_h(z) - res.big_h(b);
            t = p.wait_time;
            s = b - y;
        } else {
            p.initial_block = std::max(0.0, y - table.gamma_beta_inv(s));
        }
    }
    const double y_post = y - p.initial_block;

    if (y > 0.0) {
        const std::size_t e = final_vertex(table);
        const auto& vs = table.vertex_s();
        std::size_t k = vertex_at_or_below(table, s);
        numerics::OdeOptions ode;
        ode.abs_tol = 1e-4 * opts.path_tol;
        ode.rel_tol = 1e-2 * opts.path_tol;
        ode.h_max = opts.dt_max;
        bool done = s >= vs[e];
        while (!done && k > e) {
            const SegmentLine seg = segment_line(table, k);
            double target = seg.sa;
            const bool tail = k - 1 == e && e == 0;
            if (tail) {
                // approach to (0, 0): stop once Y falls below the tail fraction
                const double y_cut = opts.tail_fraction * y_post;
                target = seg.sa + y_cut * (seg.sb - seg.sa) / seg.b.y;
            }
            if (s >= target) {
                if (tail) {
                    p.truncated = true;
                    break;
                }
                --k;
                continue;
            }
            using DP = numerics::DormandPrince<1>;
            auto rhs = [&](double, const DP::State& u, DP::State& du) { du[0] = -res.h(seg.z_at(u[0])); };
            const double rate = -res.h(seg.z_at(s));
            ode.h_init = std::min(opts.dt_max, rate > 0 ? 0.25 * (target - s) / rate : opts.dt_max);
            if (!(ode.h_init > 0.0)) ode.h_init = opts.dt_max;
            DP integrator(rhs, ode);
            const double t_seg0 = t;
            const double z_seg0 = seg.z_at(s);
            auto outcome = integrator.integrate(
                t, DP::State{s}, opts.horizon,
                [target](double, const DP::State& u) { return u[0] - target; },
                [&](const DP::Step& st) {
                    p.steps.push_back({st.t0, st.t1, st.y0[0], st.y1[0], st.dy0[0], st.dy1[0], k});
                });
            t = outcome.t;
            if (outcome.reason == DP::Stop::Horizon) {
                s = outcome.y[0];
                p.horizon_reached = true;
                break;
            }
            s = target;
            if (!p.steps.empty()) {
                auto& last = p.steps.back();
                last.s1 = target;
            }
            if (seg.vertical() && seg.a.y > 0.0)
                p.waiting_intervals.push_back({t_seg0, t, seg.a.y, z_seg0, seg.a.z});
            if (tail) {
                p.truncated = true;
                break;
            }
            --k;
            done = s >= vs[e];
        }
        p.t_end = t;
        const GraphPoint end = table.intersect(std::min(s, 0.0));
        p.y_end = end.y;
        p.z_end = end.z;
        if (p.truncated || p.horizon_reached) {
            p.t_bar = kInf;
        } else {
            p.t_bar = t;
            p.y_end = 0.0;
            p.z_at_t_bar = end.z;
        }
        if (p.truncated) {
            const SegmentLine seg = segment_line(table, 1);
            const double A = market.A;
            auto risk = [&](double u) {
                return market.kappa_A(seg.y_at(u)) / (-res.h(seg.z_at(u)));
            };
            auto impact = [&](double u) { return -A * market.book.psi(seg.z_at(u)); };
            p.tail_risk = numerics::integrate(risk, s, seg.sa, {1e-16, 1e-10, 2000}).value;
            p.tail_cost =
                p.tail_risk + numerics::integrate(impact, s, seg.sa, {1e-16, 1e-10, 2000}).value;
        }
    }

    if (opts.record_samples) {
        const double dt = opts.dt_max;
        auto push = [&](double tt, Phase ph) { p.samples.push_back({tt, p.Y(tt), p.Z(tt), ph}); };
        if (p.initial_block > 0.0) {
            p.samples.push_back({0.0, p.y0, p.z0, Phase::Block});
            p.samples.push_back({0.0, y_post, p.z0 - p.initial_block, Phase::Block});
        }
        if (p.wait_time > 0.0) {
            for (double tt = 0.0; tt < p.wait_time; tt += dt) push(tt, Phase::Wait);
        }
        if (y > 0.0 && !p.steps.empty()) {
            std::size_t wi = 0;
            double next = p.wait_time;
            for (const auto& st : p.steps) {
                const bool vertical = segment_line(table, st.segment).vertical();
                const Phase ph = vertical ? Phase::Wait : Phase::Boundary;
                while (next <= st.t1) {
                    if (next >= st.t0) push(next, ph);
                    next += dt;
                }
                while (wi < p.waiting_intervals.size() && p.waiting_intervals[wi].t_end <= st.t1) {
                    push(p.waiting_intervals[wi].t_start, Phase::Wait);
                    push(p.waiting_intervals[wi].t_end, Phase::Wait);
                    ++wi;
                }
            }
            std::stable_sort(p.samples.begin(), p.samples.end(),
                             [](const PathSample& a, const PathSample& b) { return a.t < b.t; });
            push(p.t_end, p.truncated || p.horizon_reached ? Phase::Boundary : Phase::Done);
        } else if (y > 0.0) {
            push(p.t_end, Phase::Done);
        }
        if (std::isfinite(p.t_bar)) {
            double relax = 0.0;
            if (p.z_at_t_bar < 0.0) {
                relax = res.big_h(1e-3 * p.z_at_t_bar) - res.big_h(p.z_at_t_bar);
            }
            const double t_stop = std::min(opts.horizon, p.t_bar + relax);
            if (y == 0.0) push(0.0, Phase::Done);
            for (double tt = p.t_bar + dt; tt <= t_stop; tt += dt) push(tt, Phase::Done);
        }
    }
    return p;
}

AdmissibilityReport verify_admissibility(const StrategyPath& path, const Market& market) {
    AdmissibilityReport r;
    double risk = market.kappa_A(path.y0) * path.wait_time;
    for (const auto& st : path.steps) {
        const double half = 0.5 * (st.t1 - st.t0);
        const double mid = 0.5 * (st.t1 + st.t0);
        for (std::size_t i = 0; i < numerics::kGauss5Nodes.size(); ++i) {
            const double tt = mid + half * numerics::kGauss5Nodes[i];
            risk += half * numerics::kGauss5Weights[i] * market.kappa_A(path.Y(tt));
        }
    }
    risk += path.tail_risk;
    r.risk_integral = risk;
    r.risk_integral_finite = std::isfinite(risk);
    r.final_t_times_y = path.t_end * path.y_end;
    r.final_t_times_y2 = path.t_end * path.y_end * path.y_end;
    const double y_ref = std::max(path.y0, 1e-300);
    if (std::isfinite(path.t_bar)) {
        r.vanishing_ok = true;
        r.note = "shares reach zero at a finite time";
    } else if (path.horizon_reached) {
        r.vanishing_ok = false;
        r.note = "horizon reached before liquidation finished";
    } else if (market.levy.mu() < 0.0) {
        r.vanishing_ok = r.final_t_times_y <= 1e-6 * y_ref;
        r.note = "infinite tail, checked t*Y_t at truncation";
    } else {
        r.vanishing_ok = r.final_t_times_y2 <= 1e-6 * y_ref * y_ref;
        r.note = "infinite tail, checked t*Y_t^2 at truncation";
    }
    r.admissible = r.risk_integral_finite && r.vanishing_ok;
    return r;
}

}  // namespace lobexec
