#include "lobexec/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "lobexec/numerics.hpp"

namespace lobexec {

namespace {

using numerics::kInf;

constexpr double kExponentCap = 700.0;
constexpr std::size_t kJumpNodesPerSide = 2000;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// distance beyond which the jump measure carries negligible mass on one side
double tail_cut(const LevyModel& m, double sign, double total) {
    const auto one = [](double) { return 1.0; };
    double r = 1.0;
    while (r < 1e6) {
        const double beyond = sign < 0 ? m.jump_integral(one, -kInf, -r) : m.jump_integral(one, r, kInf);
        if (beyond <= 1e-14 * std::max(total, 1e-300)) break;
        r *= 2.0;
    }
    return r;
}

// Gauss-5 on every accepted step of the graph part
template <class F>
double along_steps(const StrategyPath& path, F&& f) {
    double sum = 0.0;
    for (const auto& st : path.steps) {
        const double half = 0.5 * (st.t1 - st.t0);
        if (!(half > 0.0)) continue;
        const double mid = 0.5 * (st.t1 + st.t0);
        double acc = 0.0;
        for (std::size_t i = 0; i < numerics::kGauss5Nodes.size(); ++i) {
            const double tt = mid + half * numerics::kGauss5Nodes[i];
            const double s = numerics::hermite(st.t0, st.s0, st.ds0, st.t1, st.s1, st.ds1, tt);
            const GraphPoint p = path.table->intersect(std::min(s, 0.0));
            acc += numerics::kGauss5Weights[i] * f(p);
        }
        sum += half * acc;
    }
    return sum;
}

}  // namespace

PathSampler::PathSampler(const LevyModel& model, std::vector<double> time_grid, double eps,
                         std::uint64_t seed)
    : model_(&model), grid_(std::move(time_grid)), eps_(eps), seed_(seed) {
    if (!(eps > 0.0)) throw std::invalid_argument("sampler: jump truncation must be positive");
    for (std::size_t i = 1; i < grid_.size(); ++i)
        if (!(grid_[i] > grid_[i - 1])) throw std::invalid_argument("sampler: time grid must increase");
    total_var_ = model.sigma2();
    if (!model.has_jumps()) return;
    const auto one = [](double) { return 1.0; };
    const auto id = [](double z) { return z; };
    const auto sq = [](double z) { return z * z; };
    small_var_ = model.jump_integral(sq, -eps, eps);
    total_var_ += small_var_;
    const double neg_mass = model.jump_integral(one, -kInf, -eps);
    const double pos_mass = model.jump_integral(one, eps, kInf);
    intensity_ = neg_mass + pos_mass;
    large_mean_ = model.jump_integral(id, -kInf, -eps) + model.jump_integral(id, eps, kInf);
    if (!(intensity_ > 0.0)) return;

    std::vector<double> nodes;
    auto side = [&](double sign, double mass) {
        std::vector<double> pts;
        if (!(mass > 0.0)) return pts;
        const double r = tail_cut(model, sign, intensity_);
        if (r <= eps) return pts;
        for (std::size_t i = 0; i <= kJumpNodesPerSide; ++i)
            pts.push_back(eps * std::pow(r / eps, static_cast<double>(i) / kJumpNodesPerSide));
        return pts;
    };
    auto neg = side(-1.0, neg_mass);
    auto pos = side(1.0, pos_mass);
    for (auto it = neg.rbegin(); it != neg.rend(); ++it) nodes.push_back(-*it);
    for (double p : pos) nodes.push_back(p);
    jump_nodes_ = nodes;
    jump_cdf_.assign(nodes.size(), 0.0);
    for (std::size_t i = 1; i < nodes.size(); ++i) {
        double piece = 0.0;
        if (!(nodes[i - 1] < 0.0 && nodes[i] > 0.0)) piece = model.jump_integral(one, nodes[i - 1], nodes[i]);
        jump_cdf_[i] = jump_cdf_[i - 1] + piece;
    }
    const double total = jump_cdf_.back();
    for (auto& v : jump_cdf_) v /= total;
}

std::mt19937_64 PathSampler::path_rng(std::uint64_t path) const {
    std::mt19937_64 rng(splitmix64(seed_ ^ splitmix64(path + 0x632be59bd9b4e019ULL)));
    return rng;
}

double PathSampler::draw_jump(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double u = u01(rng);
    auto it = std::upper_bound(jump_cdf_.begin(), jump_cdf_.end(), u);
    std::size_t i = static_cast<std::size_t>(it - jump_cdf_.begin());
    i = std::clamp<std::size_t>(i, 1, jump_cdf_.size() - 1);
    const double c0 = jump_cdf_[i - 1], c1 = jump_cdf_[i];
    const double w = c1 > c0 ? (u - c0) / (c1 - c0) : 0.5;
    return jump_nodes_[i - 1] + w * (jump_nodes_[i] - jump_nodes_[i - 1]);
}

void PathSampler::path_increments(std::uint64_t path, std::vector<double>& out) const {
    const std::size_t n = intervals();
    out.resize(n);
    auto rng = path_rng(path);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double drift = model_->mu() - large_mean_;
    for (std::size_t k = 0; k < n; ++k) {
        const double dt = grid_[k + 1] - grid_[k];
        double dl = drift * dt + std::sqrt(total_var_ * dt) * normal(rng);
        if (intensity_ > 0.0) {
            std::poisson_distribution<long> count(intensity_ * dt);
            for (long j = count(rng); j > 0; --j) dl += draw_jump(rng);
        }
        out[k] = dl;
    }
}

std::vector<std::vector<double>> PathSampler::sample_increments(std::size_t n_paths) const {
    std::vector<std::vector<double>> m(n_paths);
    for (std::size_t p = 0; p < n_paths; ++p) path_increments(p, m[p]);
    return m;
}

double choose_truncation(const LevyModel& model, double A, double y_ref, double rel_tol) {
    double eps = 1e-2;
    if (!model.has_jumps()) return eps;
    const double theta = -A * y_ref;
    const double kappa = std::abs(model.cumulant(theta));
    auto correction = [&](double e) {
        return std::abs(model.jump_integral(
            [theta](double z) {
                const double x = theta * z;
                return numerics::expm1_minus_linear(x) - 0.5 * x * x;
            },
            -e, e));
    };
    while (eps > 1e-8 && correction(eps) > rel_tol * kappa) eps *= 0.5;
    return eps;
}

std::vector<double> make_time_grid(double t_end, double dt, const std::vector<double>& extra) {
    if (!(dt > 0.0)) throw std::invalid_argument("time grid: dt must be positive");
    if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw std::invalid_argument("time grid: t_end must be finite");
    std::vector<double> g;
    const auto n = static_cast<std::size_t>(std::ceil(t_end / dt));
    for (std::size_t k = 0; k <= n; ++k) g.push_back(std::min(t_end, static_cast<double>(k) * dt));
    for (double t : extra)
        if (t > 0.0 && t < t_end) g.push_back(t);
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }), g.end());
    return g;
}

double risk_cost(const StrategyPath& path, const Market& market) {
    double r = market.kappa_A(path.y0) * path.wait_time;
    r += along_steps(path, [&](const GraphPoint& p) { return p.y > 0.0 ? market.kappa_A(p.y) : 0.0; });
    return r + path.tail_risk;
}

double impact_cost(const StrategyPath& path, const Market& market) {
    const auto& book = market.book;
    const auto& res = market.resilience;
    double f = book.psi_integral(path.z0, 0.0);
    if (path.y0 == 0.0) return f + book.psi_integral(0.0, path.z0);
    if (path.wait_time > 0.0) {
        f += numerics::integrate(
                 [&](double t) {
                     const double zt = res.decay(path.z0, t);
                     return res.h(zt) * book.psi(zt);
                 },
                 0.0, path.wait_time, {1e-14, 1e-12, 4000})
                 .value;
    }
    f += along_steps(path, [&](const GraphPoint& p) { return res.h(p.z) * book.psi(p.z); });
    if (std::isfinite(path.t_bar))
        f += book.psi_integral(0.0, path.z_at_t_bar);
    else
        f += (path.tail_cost - path.tail_risk) / market.A;
    return f;
}

double impact_cost_direct(const StrategyPath& path, const Market& market) {
    const auto& book = market.book;
    double f = 0.0;
    if (path.initial_block > 0.0) f += book.psi_integral(path.z0, path.z0 - path.initial_block);
    const BoundaryTable& table = *path.table;
    for (const auto& st : path.steps) {
        const GraphPoint a = table.intersect(std::min(st.s0, 0.0));
        const GraphPoint b = table.intersect(std::min(st.s1, 0.0));
        const double dy = b.y - a.y;
        if (dy == 0.0) continue;
        const double dz = b.z - a.z;
        // Y and Z are both affine in s on a polyline segment, so dY = (dy/dz) dZ
        if (std::abs(dz) > 0.0)
            f += dy / dz * book.psi_integral(a.z, b.z);
        else
            f += book.psi(a.z) * dy;
    }
    if (path.truncated) {
        // the tail sells the last y_end shares along the final segment into (0, 0)
        const GraphPoint a{path.y_end, path.z_end};
        if (a.y > 0.0 && a.z < 0.0) f += a.y / a.z * book.psi_integral(a.z, 0.0);
    }
    return f;
}

std::vector<double> holdings_on_grid(const StrategyPath& path, const std::vector<double>& grid) {
    if (grid.empty() || grid.front() != 0.0) throw std::invalid_argument("time grid must start at 0");
    const double done = std::isfinite(path.t_bar) ? path.t_bar : path.t_end;
    if (path.y0 > 0.0 && grid.back() < done * (1.0 - 1e-12))
        throw std::invalid_argument("time grid ends before the strategy finishes trading");
    std::vector<double> y(grid.size() - 1);
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) y[k] = path.Y(grid[k]);
    return y;
}

std::vector<double> realized_cash(const StrategyPath& path, const Market& market,
                                  const std::vector<std::vector<double>>& increments,
                                  const std::vector<double>& grid, double c, double b) {
    const auto y = holdings_on_grid(path, grid);
    const double base = c + b * path.y0 - impact_cost(path, market);
    std::vector<double> out;
    out.reserve(increments.size());
    for (const auto& row : increments) {
        if (row.size() != y.size()) throw std::invalid_argument("increments do not match the time grid");
        double gain = 0.0;
        for (std::size_t k = 0; k < y.size(); ++k) gain += y[k] * row[k];
        out.push_back(base + gain);
    }
    return out;
}

UtilityEstimate estimate_utility(const StrategyPath& path, const Market& market, const PathSampler& sampler,
                                 double c, double b, std::size_t n_paths, unsigned threads) {
    const auto& grid = sampler.time_grid();
    const auto y = holdings_on_grid(path, grid);
    const double A = market.A;
    const double base = c + b * path.y0 - impact_cost(path, market);
    std::vector<double> gains(n_paths);
    auto work = [&](std::size_t begin, std::size_t end) {
        std::vector<double> inc;
        for (std::size_t p = begin; p < end; ++p) {
            sampler.path_increments(p, inc);
            double g = 0.0;
            for (std::size_t k = 0; k < y.size(); ++k) g += y[k] * inc[k];
            gains[p] = g;
        }
    };
    threads = std::max(1u, threads);
    if (threads == 1 || n_paths < threads) {
        work(0, n_paths);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (n_paths + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t lo = t * chunk, hi = std::min(n_paths, lo + chunk);
            if (lo < hi) pool.emplace_back(work, lo, hi);
        }
        for (auto& th : pool) th.join();
    }

    UtilityEstimate est;
    est.paths = n_paths;
    double sum = 0.0, sum2 = 0.0, gsum = 0.0, gsum2 = 0.0;
    for (double g : gains) {
        double expo = -A * (base + g);
        if (expo > kExponentCap) {
            expo = kExponentCap;
            ++est.clamped;
        }
        const double u = -std::exp(expo);
        sum += u;
        sum2 += u * u;
        gsum += g;
        gsum2 += g * g;
    }
    const double n = static_cast<double>(n_paths);
    est.mean = sum / n;
    const double var = std::max(0.0, (sum2 - n * est.mean * est.mean) / (n - 1.0));
    est.stderr_ = std::sqrt(var / n);
    est.log_mean = std::log(-est.mean);
    est.log_stderr = est.stderr_ / std::abs(est.mean);
    est.mean_gain = gsum / n;
    const double gvar = std::max(0.0, (gsum2 - n * est.mean_gain * est.mean_gain) / (n - 1.0));
    est.gain_stderr = std::sqrt(gvar / n);
    double ydt = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) ydt += y[k] * (grid[k + 1] - grid[k]);
    est.expected_gain = market.levy.mu() * ydt;
    return est;
}

}  // namespace lobexec
