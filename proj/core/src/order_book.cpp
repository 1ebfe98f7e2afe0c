#include "lobexec/order_book.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "lobexec/numerics.hpp"

namespace lobexec {

namespace {

using numerics::kInf;

// index i with v[i] <= x < v[i+1] for ascending v, clamped to a valid segment
std::size_t segment_of(const std::vector<double>& v, double x) {
    auto it = std::upper_bound(v.begin(), v.end(), x);
    std::size_t i = it == v.begin() ? 0 : static_cast<std::size_t>(it - v.begin()) - 1;
    return std::min(i, v.size() - 2);
}

// log1p(b dx / h0) / b, continuous as b -> 0
double log_ratio_over_slope(double h0, double b, double dx) {
    const double r = b * dx / h0;
    if (std::abs(r) < 1e-12) return dx / h0 * (1.0 - 0.5 * r);
    return std::log1p(r) / b;
}

}  // namespace

BookShape BookShape::block(double n, double xbar) {
    if (!(n > 0.0) || !std::isfinite(n)) throw std::invalid_argument("book: n must be positive");
    if (!(xbar < 0.0) || !std::isfinite(xbar))
        throw std::invalid_argument("book: xbar must be negative");
    BookShape b;
    b.kind_ = Kind::Block;
    b.n_ = n;
    b.xbar_ = xbar;
    b.zbar_ = n * xbar;
    return b;
}

BookShape BookShape::tabulated(std::vector<double> x, std::vector<double> density) {
    if (x.size() < 2 || x.size() != density.size())
        throw std::invalid_argument("book table: need >= 2 rows of (x, density)");
    if (x.back() != 0.0) throw std::invalid_argument("book table: last node must be x = 0");
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(density[i] > 0.0) || !std::isfinite(density[i]))
            throw std::invalid_argument("book table: density must be positive");
        if (i > 0 && !(x[i] > x[i - 1]))
            throw std::invalid_argument("book table: x must be strictly increasing");
    }
    BookShape b;
    b.kind_ = Kind::Tabulated;
    b.x_ = x;
    const std::size_t k = x.size();
    b.phi_.assign(k, 0.0);
    for (std::size_t i = k - 1; i-- > 0;)
        b.phi_[i] = b.phi_[i + 1] - 0.5 * (density[i] + density[i + 1]) * (x[i + 1] - x[i]);
    // concavity of x -> m((x,0]) on the stored representation: segment slopes of phi
    // must not decrease towards 0
    for (std::size_t i = 1; i + 1 < k; ++i) {
        const double s0 = (b.phi_[i] - b.phi_[i - 1]) / (x[i] - x[i - 1]);
        const double s1 = (b.phi_[i + 1] - b.phi_[i]) / (x[i + 1] - x[i]);
        if (s1 < s0 - 1e-9 * std::max(std::abs(s0), 1.0))
            throw std::invalid_argument("book table: x -> m((x,0]) is not concave near x = " +
                                        std::to_string(x[i]));
    }
    b.xbar_ = x.front();
    b.zbar_ = b.phi_.front();
    b.psi_cum_.assign(k, 0.0);
    for (std::size_t i = k - 1; i-- > 0;) {
        // int_{phi_{i+1}}^{phi_i} psi, trapezoid is exact for linear psi
        b.psi_cum_[i] =
            b.psi_cum_[i + 1] + 0.5 * (x[i] + x[i + 1]) * (b.phi_[i] - b.phi_[i + 1]);
    }
    return b;
}

double BookShape::phi(double x) const {
    if (x > 0.0) throw std::domain_error("phi: x must be <= 0");
    if (kind_ == Kind::Block) return n_ * std::max(x, xbar_);
    if (x <= x_.front()) return phi_.front();
    const std::size_t i = segment_of(x_, x);
    const double w = (x - x_[i]) / (x_[i + 1] - x_[i]);
    return phi_[i] + w * (phi_[i + 1] - phi_[i]);
}

double BookShape::psi(double z) const {
    if (z > 0.0) throw std::domain_error("psi: z must be <= 0");
    if (z < zbar_) return -kInf;
    if (kind_ == Kind::Block) return z / n_;
    const std::size_t i = segment_of(phi_, z);
    const double w = (z - phi_[i]) / (phi_[i + 1] - phi_[i]);
    return x_[i] + w * (x_[i + 1] - x_[i]);
}

double BookShape::psi_slope(double z, Side side) const {
    if (kind_ == Kind::Block) return 1.0 / n_;
    std::size_t i = segment_of(phi_, z);
    if (side == Side::Left && i > 0 && z == phi_[i]) --i;
    return (x_[i + 1] - x_[i]) / (phi_[i + 1] - phi_[i]);
}

double BookShape::psi_integral(double a, double b) const {
    if (a < zbar_ || b < zbar_ || a > 0.0 || b > 0.0)
        throw std::domain_error("psi_integral: bounds must lie in [zbar, 0]");
    if (kind_ == Kind::Block) return (b * b - a * a) / (2.0 * n_);
    auto from_zero = [&](double z) {
        const std::size_t i = segment_of(phi_, z);
        // int_0^z psi = int_0^{phi_{i+1}} psi + int_{phi_{i+1}}^z psi
        const double pz = psi(z);
        return psi_cum_[i + 1] + 0.5 * (pz + x_[i + 1]) * (z - phi_[i + 1]);
    };
    return from_zero(b) - from_zero(a);
}

std::string BookShape::describe() const {
    std::ostringstream os;
    if (kind_ == Kind::Block)
        os << "block(n=" << n_ << ",xbar=" << xbar_ << ")";
    else
        os << "table(" << x_.size() << " nodes,xbar=" << xbar_ << ")";
    os << " zbar=" << zbar_;
    return os.str();
}

Resilience Resilience::exponential(double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("resilience: lambda must be positive");
    Resilience r;
    r.kind_ = Kind::Exponential;
    r.lambda_ = lambda;
    return r;
}

Resilience Resilience::tabulated(std::vector<double> x, std::vector<double> h) {
    if (x.size() < 2 || x.size() != h.size())
        throw std::invalid_argument("resilience table: need >= 2 rows of (x, h)");
    if (x.back() != 0.0 || h.back() != 0.0)
        throw std::invalid_argument("resilience table: last row must be (0, 0)");
    if (!(x.front() <= -1.0))
        throw std::invalid_argument("resilience table: first node must be <= -1");
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (i + 1 < x.size() && !(h[i] < 0.0))
            throw std::invalid_argument("resilience table: h must be negative for x < 0");
        if (i > 0 && !(x[i] > x[i - 1]))
            throw std::invalid_argument("resilience table: x must be strictly increasing");
        if (i > 0 && !(h[i] > h[i - 1]))
            throw std::invalid_argument("resilience table: h must be increasing");
    }
    Resilience r;
    r.kind_ = Kind::Tabulated;
    r.x_ = std::move(x);
    r.h_ = std::move(h);
    const std::size_t k = r.x_.size();
    // H at nodes, anchored so that H(-1) = 0
    r.big_h_nodes_.assign(k, 0.0);
    for (std::size_t i = 1; i < k; ++i)
        r.big_h_nodes_[i] = i + 1 == k ? -kInf : r.big_h_nodes_[i - 1] + r.segment_big_h(i - 1, r.x_[i]);
    const std::size_t j = segment_of(r.x_, -1.0);
    const double shift = r.big_h_nodes_[j] + r.segment_big_h(j, -1.0);
    for (auto& v : r.big_h_nodes_) v -= shift;

    // 1/h concave, sampled inside each segment and across nodes
    std::vector<double> xs;
    for (std::size_t i = 0; i + 1 < k; ++i) {
        const double hi = i + 2 == k ? r.x_[i] + 0.999 * (r.x_[i + 1] - r.x_[i]) : r.x_[i + 1];
        for (int s = 0; s < 16; ++s) xs.push_back(r.x_[i] + (hi - r.x_[i]) * s / 16.0);
    }
    for (std::size_t i = 1; i + 1 < xs.size(); ++i) {
        const double a = xs[i - 1], b = xs[i], c = xs[i + 1];
        const double fa = 1.0 / r.h(a), fb = 1.0 / r.h(b), fc = 1.0 / r.h(c);
        const double interp = fa + (fc - fa) * (b - a) / (c - a);
        const double scale = std::max({std::abs(fa), std::abs(fb), std::abs(fc)});
        if (fb < interp - 1e-9 * scale)
            throw std::invalid_argument("resilience table: 1/h is not concave near x = " +
                                        std::to_string(b));
    }
    return r;
}

double Resilience::segment_big_h(std::size_t i, double x) const {
    const double b = (h_[i + 1] - h_[i]) / (x_[i + 1] - x_[i]);
    return log_ratio_over_slope(h_[i], b, x - x_[i]);
}

double Resilience::h(double x) const {
    if (kind_ == Kind::Exponential) return lambda_ * x;
    if (x < x_.front()) throw std::domain_error("resilience: x below tabulated range");
    if (x >= 0.0) return 0.0;
    const std::size_t i = segment_of(x_, x);
    const double w = (x - x_[i]) / (x_[i + 1] - x_[i]);
    return h_[i] + w * (h_[i + 1] - h_[i]);
}

double Resilience::h_slope(double x, Side side) const {
    if (kind_ == Kind::Exponential) return lambda_;
    std::size_t i = segment_of(x_, x);
    if (side == Side::Left && i > 0 && x == x_[i]) --i;
    return (h_[i + 1] - h_[i]) / (x_[i + 1] - x_[i]);
}

double Resilience::big_h(double x) const {
    if (x > 0.0) throw std::domain_error("H: x must be <= 0");
    if (x == 0.0) return -kInf;
    if (kind_ == Kind::Exponential) return std::log(-x) / lambda_;
    if (x < x_.front()) throw std::domain_error("H: x below tabulated range");
    const std::size_t i = segment_of(x_, x);
    return big_h_nodes_[i] + segment_big_h(i, x);
}

double Resilience::big_h_inv(double u) const {
    if (u == -kInf) return 0.0;
    if (kind_ == Kind::Exponential) return -std::exp(lambda_ * u);
    if (u > big_h_nodes_.front()) throw std::domain_error("H^-1: argument above H(lower limit)");
    // H is decreasing: find the segment with H_{i+1} < u <= H_i
    std::size_t i = 0;
    {
        std::size_t lo = 0, hi = x_.size() - 1;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            if (big_h_nodes_[mid] >= u)
                lo = mid;
            else
                hi = mid;
        }
        i = lo;
    }
    const double b = (h_[i + 1] - h_[i]) / (x_[i + 1] - x_[i]);
    const double du = u - big_h_nodes_[i];
    double dx;
    if (std::abs(b * du) < 1e-12)
        dx = h_[i] * du * (1.0 + 0.5 * b * du);
    else
        dx = h_[i] * std::expm1(b * du) / b;
    return std::min(0.0, x_[i] + dx);
}

double Resilience::decay(double z0, double t) const {
    if (t < 0.0) throw std::domain_error("decay: t must be non-negative");
    if (z0 == 0.0) return 0.0;
    if (kind_ == Kind::Exponential) return z0 * std::exp(-lambda_ * t);
    return big_h_inv(big_h(z0) - t);
}

double Resilience::lower_limit() const {
    return kind_ == Kind::Exponential ? -kInf : x_.front();
}

std::string Resilience::describe() const {
    std::ostringstream os;
    if (kind_ == Kind::Exponential)
        os << "exp(lambda=" << lambda_ << ")";
    else
        os << "table(" << x_.size() << " nodes)";
    return os.str();
}

std::pair<std::vector<double>, std::vector<double>> read_two_column_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open table: " + path);
    std::vector<double> a, b;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        double u, v;
        if (!(ls >> u)) continue;
        if (!(ls >> v))
            throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": expected two columns");
        if (std::string rest; ls >> rest)
            throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": unexpected '" + rest + "'");
        a.push_back(u);
        b.push_back(v);
    }
    return {std::move(a), std::move(b)};
}

}  // namespace lobexec
