#include "lobexec/numerics.hpp"

#include <algorithm>
#include <queue>
#include <vector>

namespace lobexec::numerics {

namespace {

// QUADPACK qk21 abscissae and weights.
constexpr std::array<double, 11> kXgk = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};
constexpr std::array<double, 11> kWgk = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208980184090, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
constexpr std::array<double, 5> kWg = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Segment {
    double a, b, value, error;
    bool operator<(const Segment& o) const { return error < o.error; }
};

Segment rule21(const std::function<double(double)>& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double resk = fc * kWgk[10];
    double resg = 0.0;
    for (int j = 0; j < 10; ++j) {
        const double dx = half * kXgk[j];
        const double fsum = f(center - dx) + f(center + dx);
        resk += kWgk[j] * fsum;
        if (j % 2 == 1) resg += kWg[j / 2] * fsum;
    }
    const double value = resk * half;
    const double err = std::abs((resk - resg) * half);
    return {a, b, value, err};
}

QuadratureResult integrate_finite(const std::function<double(double)>& f, double a, double b,
                                  const QuadratureOptions& opts) {
    std::priority_queue<Segment> heap;
    Segment first = rule21(f, a, b);
    double total = first.value;
    double total_err = first.error;
    heap.push(first);
    int count = 1;
    auto done = [&] {
        return total_err <= std::max(opts.abs_tol, opts.rel_tol * std::abs(total));
    };
    while (!done() && count < opts.max_subdivisions) {
        if (!std::isfinite(total)) break;
        Segment worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {
            // interval cannot be split any further in floating point
            heap.push(worst);
            break;
        }
        Segment left = rule21(f, worst.a, mid);
        Segment right = rule21(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++count;
    }
    // resum to limit drift from the running updates
    double sum = 0.0, err = 0.0;
    while (!heap.empty()) {
        sum += heap.top().value;
        err += heap.top().error;
        heap.pop();
    }
    return {sum, err, err <= std::max(opts.abs_tol, opts.rel_tol * std::abs(sum)) * 1.0001};
}

}  // namespace

double kronrod21(const std::function<double(double)>& f, double a, double b) {
    return rule21(f, a, b).value;
}

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const QuadratureOptions& opts) {
    if (a == b) return {};
    if (a > b) {
        auto r = integrate(f, b, a, opts);
        r.value = -r.value;
        return r;
    }
    const bool a_inf = std::isinf(a);
    const bool b_inf = std::isinf(b);
    if (a_inf && b_inf) {
        auto left = integrate(f, -kInf, 0.0, opts);
        auto right = integrate(f, 0.0, kInf, opts);
        return {left.value + right.value, left.error + right.error,
                left.converged && right.converged};
    }
    if (b_inf) {
        // x = a + t / (1 - t)
        auto g = [&](double t) {
            const double u = 1.0 - t;
            const double v = f(a + t / u);
            return v == 0.0 ? 0.0 : v / (u * u);
        };
        return integrate_finite(g, 0.0, 1.0, opts);
    }
    if (a_inf) {
        // x = b - t / (1 - t)
        auto g = [&](double t) {
            const double u = 1.0 - t;
            const double v = f(b - t / u);
            return v == 0.0 ? 0.0 : v / (u * u);
        };
        return integrate_finite(g, 0.0, 1.0, opts);
    }
    return integrate_finite(f, a, b, opts);
}

double expm1_minus_linear(double x) {
    if (std::abs(x) < 1e-2) {
        // Taylor series; terms fall off by at least a factor 100 each
        double term = x * x / 2.0;
        double sum = term;
        for (int k = 3; k < 12; ++k) {
            term *= x / k;
            sum += term;
        }
        return sum;
    }
    return std::expm1(x) - x;
}

std::pair<double, double> golden_section_bracket(const std::function<double(double)>& f,
                                                 double lo, double hi, double x_tol,
                                                 int max_iter) {
    constexpr double kInvPhi = 0.6180339887498949;
    double x1 = hi - kInvPhi * (hi - lo);
    double x2 = lo + kInvPhi * (hi - lo);
    double f1 = f(x1);
    double f2 = f(x2);
    for (int it = 0; it < max_iter && hi - lo > x_tol; ++it) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + kInvPhi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - kInvPhi * (hi - lo);
            f1 = f(x1);
        }
    }
    return {lo, hi};
}

double bisect_predicate(const std::function<bool(double)>& holds_left, double lo, double hi,
                        int iterations) {
    for (int it = 0; it < iterations; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (holds_left(mid))
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double find_root(const std::function<double(double)>& f, double lo, double hi, double x_tol,
                 int max_iter) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0) == (fhi > 0)) throw std::domain_error("find_root: no sign change in bracket");
    // Illinois variant of regula falsi with bisection safeguard
    int side = 0;
    for (int it = 0; it < max_iter; ++it) {
        if (std::abs(hi - lo) <= x_tol) break;
        double x = (lo * fhi - hi * flo) / (fhi - flo);
        if (!(x > std::min(lo, hi) && x < std::max(lo, hi)) || it % 8 == 7) x = 0.5 * (lo + hi);
        if (x == lo || x == hi) break;
        const double fx = f(x);
        if (fx == 0.0) return x;
        if ((fx > 0) == (fhi > 0)) {
            hi = x;
            fhi = fx;
            if (side == -1) flo *= 0.5;
            side = -1;
        } else {
            lo = x;
            flo = fx;
            if (side == 1) fhi *= 0.5;
            side = 1;
        }
    }
    return std::abs(flo) < std::abs(fhi) ? lo : hi;
}

}  // namespace lobexec::numerics
