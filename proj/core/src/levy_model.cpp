#include "lobexec/levy_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "lobexec/numerics.hpp"

namespace lobexec {

namespace {

using numerics::kInf;

constexpr double kYbarCap = 1e6;

const numerics::QuadratureOptions kJumpQuad{1e-16, 1e-11, 4000};

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double vg_log_density(const VarianceGammaParams& p, double u) {
    return std::exp(p.c() * u - p.d() * std::abs(u)) / (p.eta * std::abs(u));
}

// g integrated against the LVG measure over lo < z < hi, with lo, hi on one side of 0.
double lvg_side(const VarianceGammaParams& p, const std::function<double(double)>& g, double lo,
                double hi) {
    const double u_lo = lo <= -1.0 ? -kInf : std::log1p(lo);
    const double u_hi = std::isinf(hi) ? kInf : std::log1p(hi);
    auto f = [&](double u) {
        if (u == 0.0) return 0.0;
        const double w = vg_log_density(p, u);
        if (w == 0.0) return 0.0;
        return g(std::expm1(u)) * w;
    };
    return numerics::integrate(f, u_lo, u_hi, kJumpQuad).value;
}

double avg_side(const VarianceGammaParams& p, const std::function<double(double)>& g, double lo,
                double hi) {
    auto f = [&](double z) {
        if (z == 0.0) return 0.0;
        const double w = vg_log_density(p, z);
        if (w == 0.0) return 0.0;
        return g(z) * w;
    };
    return numerics::integrate(f, lo, hi, kJumpQuad).value;
}

// Tilted moments of the arithmetic VG measure with the exponential folded into the
// log-weight so that e^{theta z} never overflows on its own.
// order 0: e^{tz}-1-tz, 1: z(e^{tz}-1), 2: z^2 e^{tz}
double avg_tilted(const VarianceGammaParams& p, double theta, int order) {
    auto f = [&](double z) {
        if (z == 0.0) return 0.0;
        const double az = std::abs(z);
        const double log_w = p.c() * z - p.d() * az - std::log(p.eta * az);
        const double tz = theta * z;
        if (std::abs(tz) < 1.0) {
            const double w = std::exp(log_w);
            if (order == 0) return numerics::expm1_minus_linear(tz) * w;
            if (order == 1) return z * std::expm1(tz) * w;
            return z * z * std::exp(tz) * w;
        }
        const double tilted = std::exp(tz + log_w);
        const double w = std::exp(log_w);
        if (order == 0) return tilted - w * (1.0 + tz);
        if (order == 1) return z * (tilted - w);
        return z * z * tilted;
    };
    return numerics::integrate(f, -kInf, 0.0, kJumpQuad).value +
           numerics::integrate(f, 0.0, kInf, kJumpQuad).value;
}

double table_density(const TabulatedJumpDensity& t, double z) {
    const auto& x = t.z;
    if (z < x.front() || z > x.back() || z == 0.0) return 0.0;
    auto it = std::upper_bound(x.begin(), x.end(), z);
    if (it == x.end()) return t.density.back();
    const std::size_t i = static_cast<std::size_t>(it - x.begin());
    if (i == 0) return t.density.front();
    if (x[i - 1] < 0.0 && x[i] > 0.0) return 0.0;
    const double w = (z - x[i - 1]) / (x[i] - x[i - 1]);
    return (1 - w) * t.density[i - 1] + w * t.density[i];
}

double table_side(const TabulatedJumpDensity& t, const std::function<double(double)>& g,
                  double lo, double hi) {
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < t.z.size(); ++i) {
        const double a = std::max(lo, t.z[i]);
        const double b = std::min(hi, t.z[i + 1]);
        if (!(a < b)) continue;
        if (t.z[i] < 0.0 && t.z[i + 1] > 0.0) continue;
        auto f = [&](double z) { return g(z) * table_density(t, z); };
        sum += numerics::integrate(f, a, b, kJumpQuad).value;
    }
    return sum;
}

}  // namespace

double VarianceGammaParams::c() const { return theta / (rho * rho); }

double VarianceGammaParams::d() const {
    return std::sqrt(theta * theta + 2.0 * rho * rho / eta) / (rho * rho);
}

double VarianceGammaParams::matching_drift() const {
    return -std::log(1.0 - rho * rho * eta / 2.0 - theta * eta) / eta;
}

void VarianceGammaParams::validate() const {
    if (!(rho > 0.0) || !(eta > 0.0))
        throw std::invalid_argument("variance-gamma: rho and eta must be positive");
    if (!(1.0 - rho * rho * eta / 2.0 - theta * eta > 0.0))
        throw std::invalid_argument("variance-gamma: 1 - rho^2 eta/2 - theta eta must be positive");
    if (!(d() > std::abs(c())))
        throw std::invalid_argument("variance-gamma: D must exceed |C|");
}

LevyModel::LevyModel(double mu, double sigma2, JumpSpec jumps)
    : mu_(mu), sigma2_(sigma2), jumps_(std::move(jumps)) {
    if (!std::isfinite(mu) || mu > 0.0)
        throw std::invalid_argument("levy: drift mu must be <= 0 (supermartingale)");
    if (!std::isfinite(sigma2) || sigma2 < 0.0)
        throw std::invalid_argument("levy: sigma2 must be non-negative");
    std::visit(Overloaded{
                   [](const NoJumps&) {},
                   [](const LinearVarianceGamma& j) { j.params.validate(); },
                   [](const ArithmeticVarianceGamma& j) { j.params.validate(); },
                   [](const TabulatedJumpDensity& t) {
                       if (t.z.size() < 2 || t.z.size() != t.density.size())
                           throw std::invalid_argument("levy: jump table needs >= 2 matching rows");
                       for (std::size_t i = 0; i < t.z.size(); ++i) {
                           if (t.z[i] == 0.0)
                               throw std::invalid_argument("levy: jump table node at z = 0");
                           if (!(t.density[i] >= 0.0) || !std::isfinite(t.density[i]))
                               throw std::invalid_argument("levy: jump density must be >= 0");
                           if (i > 0 && !(t.z[i] > t.z[i - 1]))
                               throw std::invalid_argument("levy: jump table z not increasing");
                       }
                   },
               },
               jumps_);
    if (!std::isfinite(jump_second_moment()))
        throw std::invalid_argument("levy: jump measure is not square integrable");
}

bool LevyModel::exponential_moment_finite(double theta) const {
    return std::visit(Overloaded{
                          [](const NoJumps&) { return true; },
                          [](const TabulatedJumpDensity&) { return true; },
                          [&](const LinearVarianceGamma&) { return theta <= 0.0; },
                          [&](const ArithmeticVarianceGamma& j) {
                              const double c = j.params.c();
                              const double d = j.params.d();
                              return theta > -(c + d) && theta < d - c;
                          },
                      },
                      jumps_);
}

double LevyModel::jump_density(double z) const {
    return std::visit(Overloaded{
                          [](const NoJumps&) { return 0.0; },
                          [&](const LinearVarianceGamma& j) {
                              if (z <= -1.0 || z == 0.0) return 0.0;
                              const double u = std::log1p(z);
                              return vg_log_density(j.params, u) / (1.0 + z);
                          },
                          [&](const ArithmeticVarianceGamma& j) {
                              return z == 0.0 ? 0.0 : vg_log_density(j.params, z);
                          },
                          [&](const TabulatedJumpDensity& t) { return table_density(t, z); },
                      },
                      jumps_);
}

double LevyModel::jump_integral(const std::function<double(double)>& g, double lo,
                                double hi) const {
    auto side = [&](double a, double b) -> double {
        if (!(a < b)) return 0.0;
        return std::visit(Overloaded{
                              [](const NoJumps&) { return 0.0; },
                              [&](const LinearVarianceGamma& j) {
                                  return lvg_side(j.params, g, std::max(a, -1.0), b);
                              },
                              [&](const ArithmeticVarianceGamma& j) {
                                  return avg_side(j.params, g, a, b);
                              },
                              [&](const TabulatedJumpDensity& t) { return table_side(t, g, a, b); },
                          },
                          jumps_);
    };
    return side(lo, std::min(hi, 0.0)) + side(std::max(lo, 0.0), hi);
}

double LevyModel::jump_integral(const std::function<double(double)>& g) const {
    return jump_integral(g, -kInf, kInf);
}

double LevyModel::jump_second_moment() const {
    return jump_integral([](double z) { return z * z; });
}

double LevyModel::cumulant(double theta) const {
    if (theta == 0.0) return 0.0;
    if (!exponential_moment_finite(theta)) return kInf;
    double k = mu_ * theta + 0.5 * sigma2_ * theta * theta;
    if (const auto* j = std::get_if<ArithmeticVarianceGamma>(&jumps_))
        k += avg_tilted(j->params, theta, 0);
    else if (has_jumps())
        k += jump_integral([theta](double z) { return numerics::expm1_minus_linear(theta * z); });
    return k;
}

double LevyModel::cumulant_derivative(double theta) const {
    if (!exponential_moment_finite(theta)) return kInf;
    double k = mu_ + sigma2_ * theta;
    if (const auto* j = std::get_if<ArithmeticVarianceGamma>(&jumps_))
        k += theta != 0.0 ? avg_tilted(j->params, theta, 1) : 0.0;
    else if (has_jumps() && theta != 0.0)
        k += jump_integral([theta](double z) { return z * std::expm1(theta * z); });
    return k;
}

double LevyModel::cumulant_second_derivative(double theta) const {
    if (!exponential_moment_finite(theta)) return kInf;
    double k = sigma2_;
    if (const auto* j = std::get_if<ArithmeticVarianceGamma>(&jumps_))
        k += avg_tilted(j->params, theta, 2);
    else if (has_jumps())
        k += jump_integral([theta](double z) { return z * z * std::exp(theta * z); });
    return k;
}

double LevyModel::kappa_A(double A, double y) const { return cumulant(-A * y); }

double LevyModel::kappa_A_prime(double A, double y) const {
    const double d = cumulant_derivative(-A * y);
    return std::isinf(d) ? kInf : -A * d;
}

double LevyModel::ybar_A(double A) const {
    if (!(A > 0.0)) throw std::invalid_argument("ybar_A: A must be positive");
    auto finite_at = [&](double y) { return exponential_moment_finite(-A * y); };
    if (finite_at(kYbarCap)) return kInf;
    return numerics::bisect_predicate(finite_at, 0.0, kYbarCap, 200);
}

double LevyModel::truncation_error_estimate() const {
    const auto* t = std::get_if<TabulatedJumpDensity>(&jumps_);
    if (!t) return 0.0;
    auto tail = [](double z0, double z1, double d0, double d1) {
        // exponential fit through the last two nodes, extended to infinity
        const double dz = std::abs(z1 - z0);
        const double z = std::abs(z1);
        if (d1 <= 0.0) return 0.0;
        if (!(d0 > d1)) return kInf;
        const double r = std::log(d0 / d1) / dz;
        return d1 * (z * z / r + 2 * z / (r * r) + 2 / (r * r * r));
    };
    const auto n = t->z.size();
    double err = 0.0;
    if (t->z.back() > 0.0 && n >= 2)
        err += tail(t->z[n - 2], t->z[n - 1], t->density[n - 2], t->density[n - 1]);
    if (t->z.front() < 0.0 && n >= 2)
        err += tail(t->z[1], t->z[0], t->density[1], t->density[0]);
    return err;
}

std::string LevyModel::describe() const {
    std::ostringstream os;
    os << "mu=" << mu_ << " sigma2=" << sigma2_ << " jumps=";
    std::visit(Overloaded{
                   [&](const NoJumps&) { os << "none"; },
                   [&](const LinearVarianceGamma& j) {
                       os << "vg(rho=" << j.params.rho << ",eta=" << j.params.eta
                          << ",theta=" << j.params.theta << ")";
                   },
                   [&](const ArithmeticVarianceGamma& j) {
                       os << "vg_arith(rho=" << j.params.rho << ",eta=" << j.params.eta
                          << ",theta=" << j.params.theta << ")";
                   },
                   [&](const TabulatedJumpDensity& t) { os << "table(" << t.z.size() << " nodes)"; },
               },
               jumps_);
    return os.str();
}

TabulatedJumpDensity read_jump_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open jump table: " + path);
    TabulatedJumpDensity t;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        double z, d;
        if (!(ls >> z)) continue;
        if (!(ls >> d)) throw std::runtime_error("malformed jump table row in " + path);
        t.z.push_back(z);
        t.density.push_back(d);
    }
    return t;
}

}  // namespace lobexec
