#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>

namespace lobexec::numerics {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct QuadratureOptions {
    double abs_tol = 1e-10;
    double rel_tol = 1e-8;
    int max_subdivisions = 4000;
};

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    bool converged = true;
};

/// Globally adaptive Gauss-Kronrod (10/21 point) quadrature on [a, b].
/// Either bound may be infinite; infinite ranges are mapped onto finite ones.
/// Reversed bounds give the negated integral.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const QuadratureOptions& opts = {});

/// Fixed 21-point Kronrod rule on a finite interval, no adaptivity.
double kronrod21(const std::function<double(double)>& f, double a, double b);

/// e^x - 1 - x without cancellation for small |x|.
double expm1_minus_linear(double x);

/// Finds the maximiser of a unimodal function on [lo, hi] by golden-section search.
/// Returns the bracket midpoint once the bracket is narrower than x_tol.
std::pair<double, double> golden_section_bracket(const std::function<double(double)>& f,
                                                 double lo, double hi, double x_tol,
                                                 int max_iter = 200);

/// Bisection for the sign change of a monotone predicate: returns the boundary
/// point x in [lo, hi] such that pred(x) holds to its left and fails to its right.
double bisect_predicate(const std::function<bool(double)>& holds_left, double lo, double hi,
                        int iterations = 200);

/// Root of a continuous function with f(lo) and f(hi) of opposite sign.
double find_root(const std::function<double(double)>& f, double lo, double hi,
                 double x_tol = 0.0, int max_iter = 300);

/// Cubic Hermite interpolation on [t0, t1].
inline double hermite(double t0, double y0, double dy0, double t1, double y1, double dy1,
                      double t) {
    const double h = t1 - t0;
    if (h <= 0.0) return y0;
    const double s = (t - t0) / h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * dy0 + (-2 * s3 + 3 * s2) * y1 +
           (s3 - s2) * h * dy1;
}

/// Five-point Gauss-Legendre nodes/weights on [-1, 1].
inline constexpr std::array<double, 5> kGauss5Nodes = {
    -0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640};
inline constexpr std::array<double, 5> kGauss5Weights = {
    0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
    0.2369268850561891};

struct OdeOptions {
    double abs_tol = 1e-12;
    double rel_tol = 1e-10;
    double h_init = 1e-3;
    double h_max = kInf;
    double h_min = 1e-14;
    int max_steps = 2'000'000;
};

class StepSizeUnderflow : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

/// Dormand-Prince 5(4) integrator with the standard 4th-order continuous
/// extension and event location on a scalar event function.
template <std::size_t N>
class DormandPrince {
 public:
    using State = std::array<double, N>;
    using Rhs = std::function<void(double, const State&, State&)>;

    struct Step {
        double t0, t1;
        State y0, y1, dy0, dy1;
    };

    enum class Stop { Horizon, Event };

    struct Outcome {
        Stop reason;
        double t;
        State y;
    };

    DormandPrince(Rhs rhs, OdeOptions opts) : rhs_(std::move(rhs)), opts_(opts) {}

    /// Integrates from (t, y) until t_end or the first time event(t, y) crosses zero
    /// from negative to non-negative. on_step is called for every accepted step
    /// (truncated at the event time when one fires).
    Outcome integrate(double t, State y, double t_end,
                      const std::function<double(double, const State&)>& event,
                      const std::function<void(const Step&)>& on_step) {
        State k1, k2, k3, k4, k5, k6, k7, tmp, y_new, err;
        rhs_(t, y, k1);
        double h = std::min(opts_.h_init, opts_.h_max);
        double g_prev = event ? event(t, y) : -1.0;
        if (event && g_prev >= 0.0) return {Stop::Event, t, y};
        for (int step = 0; step < opts_.max_steps; ++step) {
            if (t >= t_end) return {Stop::Horizon, t, y};
            bool last = false;
            if (t + h >= t_end) {
                h = t_end - t;
                last = true;
            }
            for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a21 * k1[i]);
            rhs_(t + c2 * h, tmp, k2);
            for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
            rhs_(t + c3 * h, tmp, k3);
            for (std::size_t i = 0; i < N; ++i)
                tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
            rhs_(t + c4 * h, tmp, k4);
            for (std::size_t i = 0; i < N; ++i)
                tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
            rhs_(t + c5 * h, tmp, k5);
            for (std::size_t i = 0; i < N; ++i)
                tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                                     a65 * k5[i]);
            rhs_(t + h, tmp, k6);
            for (std::size_t i = 0; i < N; ++i)
                y_new[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] +
                                       a76 * k6[i]);
            rhs_(t + h, y_new, k7);
            double err_norm = 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                              e7 * k7[i]);
                const double sc =
                    opts_.abs_tol + opts_.rel_tol * std::max(std::abs(y[i]), std::abs(y_new[i]));
                err_norm = std::max(err_norm, std::abs(err[i]) / sc);
            }
            if (!std::isfinite(err_norm)) err_norm = 1e10;
            if (err_norm > 1.0) {
                h *= std::max(0.2, 0.9 * std::pow(err_norm, -0.2));
                if (h < opts_.h_min) throw StepSizeUnderflow("ODE step size underflow");
                continue;
            }
            const double t_new = last ? t_end : t + h;
            if (event) {
                const double g_new = event(t_new, y_new);
                if (g_new >= 0.0) {
                    // dense output on [t, t_new]
                    State r2, r3, r4, r5;
                    for (std::size_t i = 0; i < N; ++i) {
                        r2[i] = y_new[i] - y[i];
                        r3[i] = h * k1[i] - r2[i];
                        r4[i] = r2[i] - h * k7[i] - r3[i];
                        r5[i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] +
                                     d6 * k6[i] + d7 * k7[i]);
                    }
                    auto dense = [&](double theta) {
                        State out;
                        for (std::size_t i = 0; i < N; ++i)
                            out[i] = y[i] + theta * (r2[i] + (1 - theta) *
                                                                 (r3[i] + theta * (r4[i] + (1 - theta) * r5[i])));
                        return out;
                    };
                    double lo = 0.0, hi = 1.0;
                    for (int it = 0; it < 100 && hi - lo > 1e-16; ++it) {
                        const double mid = 0.5 * (lo + hi);
                        if (event(t + mid * h, dense(mid)) >= 0.0)
                            hi = mid;
                        else
                            lo = mid;
                    }
                    const double t_ev = t + hi * h;
                    State y_ev = dense(hi);
                    State dy_ev;
                    rhs_(t_ev, y_ev, dy_ev);
                    if (on_step) on_step(Step{t, t_ev, y, y_ev, k1, dy_ev});
                    return {Stop::Event, t_ev, y_ev};
                }
                g_prev = g_new;
            }
            if (on_step) on_step(Step{t, t_new, y, y_new, k1, k7});
            t = t_new;
            y = y_new;
            k1 = k7;
            const double fac = err_norm > 0 ? 0.9 * std::pow(err_norm, -0.2) : 5.0;
            h = std::min(opts_.h_max, h * std::clamp(fac, 0.2, 5.0));
        }
        throw std::runtime_error("ODE integration exceeded max_steps");
    }

 private:
    Rhs rhs_;
    OdeOptions opts_;

    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                            a75 = -2187.0 / 6784, a76 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
    static constexpr double d1 = -12715105075.0 / 11282082432.0,
                            d3 = 87487479700.0 / 32700410799.0,
                            d4 = -10690763975.0 / 1880347072.0,
                            d5 = 701980252875.0 / 199316789632.0,
                            d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
};

}  // namespace lobexec::numerics
