#include "lobexec/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "lobexec/numerics.hpp"

namespace lobexec {

namespace {

using numerics::kInf;

// relative width below which two maximisers are treated as one
constexpr double kPlateauTol = 1e-10;

BetaSolution maximise(const Market& m, double kappa, double kappa_prime) {
    if (!std::isfinite(kappa) || !std::isfinite(kappa_prime))
        throw std::domain_error("solve_beta: risk cost is infinite at this holding");
    const double zbar = m.book.zbar();
    auto value = [&](double x) { return gamma_big(m, x, kappa, kappa_prime); };
    auto left = [&](double x) { return gamma_big_slope(m, x, kappa, kappa_prime, Side::Left); };
    auto right = [&](double x) { return gamma_big_slope(m, x, kappa, kappa_prime, Side::Right); };

    // coarse bracket by golden section, away from the singularity at 0
    const double eps0 = 1e-12 * std::abs(zbar);
    const auto [glo, ghi] = numerics::golden_section_bracket(value, zbar, -eps0, 1e-3 * std::abs(zbar), 80);
    double lo = std::max(zbar, glo - (ghi - glo));
    double hi = std::min(0.0, ghi + (ghi - glo));
    if (lo > zbar && !(left(lo) >= 0.0)) lo = zbar;
    if (hi < 0.0 && right(hi) > 0.0) hi = 0.0;

    BetaSolution sol{};
    if (!(right(zbar) > 0.0)) {
        sol.beta_lower = zbar;
    } else {
        sol.beta_lower = numerics::bisect_predicate([&](double x) { return right(x) > 0.0; },
                                                    std::max(lo, zbar), hi, 200);
    }
    sol.beta_star = numerics::bisect_predicate(
        [&](double x) { return x == zbar || left(x) >= 0.0; }, std::max(lo, zbar), hi, 200);
    if (sol.beta_star < sol.beta_lower) std::swap(sol.beta_star, sol.beta_lower);
    if (sol.beta_star - sol.beta_lower <= kPlateauTol * std::abs(sol.beta_star))
        sol.beta_lower = sol.beta_star;
    return sol;
}

}  // namespace

void Market::validate() const {
    if (!(A > 0.0) || !std::isfinite(A)) throw std::invalid_argument("agent: A must be positive");
    if (resilience.lower_limit() > book.zbar())
        throw std::invalid_argument("resilience: table does not cover the book depth zbar = " +
                                    std::to_string(book.zbar()));
}

double gamma_big(const Market& m, double x, double kappa, double kappa_prime) {
    if (x == 0.0) return -kInf;
    double g = m.A * m.book.psi(x) + kappa / m.resilience.h(x);
    if (kappa_prime != 0.0) g += kappa_prime * m.resilience.big_h(x);
    return g;
}

double gamma_big(const Market& m, double x, double y) {
    return gamma_big(m, x, m.kappa_A(y), m.kappa_A_prime(y));
}

double gamma_big_slope(const Market& m, double x, double kappa, double kappa_prime, Side side) {
    const double h = m.resilience.h(x);
    return m.A * m.book.psi_slope(x, side) - kappa * m.resilience.h_slope(x, side) / (h * h) +
           kappa_prime / h;
}

BetaSolution solve_beta(const Market& m, double y) {
    const double ybar = m.ybar_A();
    if (!(y > 0.0) || !(y < ybar)) {
        std::ostringstream os;
        os << "solve_beta: y = " << y << " outside (0, ybar_A = " << ybar << ")";
        throw std::domain_error(os.str());
    }
    return maximise(m, m.kappa_A(y), m.kappa_A_prime(y));
}

BetaSolution solve_beta_zero_limit(const Market& m) {
    // psi increases and H decreases, so without negative drift the limit is the best bid
    if (m.levy.mu() >= 0.0) return {0.0, 0.0};
    return maximise(m, 0.0, -m.A * m.levy.mu());
}

BoundaryTable::BoundaryTable(std::vector<double> y, std::vector<double> beta_star,
                             std::vector<double> beta_lower, double ybar_A, double zbar)
    : y_(std::move(y)),
      beta_star_(std::move(beta_star)),
      beta_lower_(std::move(beta_lower)),
      ybar_A_(ybar_A),
      zbar_(zbar) {
    const std::size_t n = y_.size();
    if (n < 2 || beta_star_.size() != n || beta_lower_.size() != n)
        throw std::invalid_argument("boundary table: need >= 2 nodes with matching columns");
    if (y_[0] != 0.0 || beta_star_[0] != 0.0)
        throw std::invalid_argument("boundary table: first node must be (0, 0)");
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0 && !(y_[i] > y_[i - 1]))
            throw std::invalid_argument("boundary table: y grid must be strictly increasing");
        if (!(beta_lower_[i] <= beta_star_[i]) || beta_lower_[i] < zbar_ || beta_star_[i] > 0.0)
            throw std::invalid_argument("boundary table: need zbar <= beta_lower <= beta_star <= 0");
        if (i > 0 && beta_star_[i] > beta_lower_[i - 1])
            throw std::invalid_argument("boundary table: boundary must be non-increasing");
    }
    for (std::size_t i = 0; i < n; ++i) {
        vertices_.push_back({y_[i], beta_star_[i]});
        if (beta_lower_[i] < beta_star_[i]) vertices_.push_back({y_[i], beta_lower_[i]});
    }
    for (const auto& v : vertices_) vs_.push_back(v.z - v.y);
}

double BoundaryTable::beta(double y) const {
    if (y < 0.0) throw std::domain_error("beta: y must be non-negative");
    if (y > y_.back()) {
        if (y >= ybar_A_) return zbar_;
        throw std::out_of_range("beta: y beyond tabulated range");
    }
    auto it = std::lower_bound(y_.begin(), y_.end(), y);
    const std::size_t i = static_cast<std::size_t>(it - y_.begin());
    if (y_[i] == y) return beta_star_[i];
    const double w = (y - y_[i - 1]) / (y_[i] - y_[i - 1]);
    return beta_lower_[i - 1] + w * (beta_star_[i] - beta_lower_[i - 1]);
}

double BoundaryTable::beta_right(double y) const {
    if (y > y_.back()) return beta(y);
    auto it = std::lower_bound(y_.begin(), y_.end(), y);
    const std::size_t i = static_cast<std::size_t>(it - y_.begin());
    if (i < y_.size() && y_[i] == y) return beta_lower_[i];
    return beta(y);
}

BetaInverse BoundaryTable::beta_inv(double z) const {
    if (z > 0.0) throw std::domain_error("beta_inv: z must be <= 0");
    // first vertex whose z is at or below the target (z is non-increasing along the graph)
    std::size_t lo = 0, hi = vertices_.size();
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (vertices_[mid].z <= z)
            hi = mid;
        else
            lo = mid + 1;
    }
    if (lo == vertices_.size()) return {y_.back(), true};
    if (lo == 0) return {vertices_[0].y, false};
    const auto& a = vertices_[lo - 1];
    const auto& b = vertices_[lo];
    if (a.y == b.y) return {b.y, false};
    const double w = (z - a.z) / (b.z - a.z);
    return {a.y + w * (b.y - a.y), false};
}

double BoundaryTable::rho_beta(double z) const {
    const auto inv = beta_inv(z);
    if (inv.out_of_range) throw std::out_of_range("rho_beta: z below tabulated boundary");
    return z - inv.y;
}

GraphPoint BoundaryTable::intersect(double s) const {
    if (s > 0.0) throw std::domain_error("boundary graph: diagonal offset must be <= 0");
    if (s < vs_.back()) {
        std::ostringstream os;
        os << "boundary graph: z - y = " << s << " below tabulated range (min " << vs_.back()
           << ")";
        throw std::out_of_range(os.str());
    }
    auto it = std::lower_bound(vs_.begin(), vs_.end(), s, [](double a, double b) { return a > b; });
    const std::size_t k = static_cast<std::size_t>(it - vs_.begin());
    if (vs_[k] == s || k == 0) return vertices_[k];
    const auto& a = vertices_[k - 1];
    const auto& b = vertices_[k];
    const double w = (s - vs_[k - 1]) / (vs_[k] - vs_[k - 1]);
    GraphPoint p{a.y + w * (b.y - a.y), a.z + w * (b.z - a.z)};
    if (a.y == b.y) p.y = a.y;
    return p;
}

bool BoundaryTable::solvent(double y, double z) const {
    if (y < 0.0 || z > 0.0 || z < zbar_) return false;
    if (std::isinf(ybar_A_)) return true;
    return z > y - ybar_A_ + zbar_;
}

std::vector<double> boundary_grid(const TabulateOptions& opts) {
    if (!(opts.y_max > 0.0)) throw std::invalid_argument("tabulate: y_max must be positive");
    if (opts.nodes < 4) throw std::invalid_argument("tabulate: need at least 4 nodes");
    const std::size_t n = opts.nodes;
    const std::size_t n_geo = std::max<std::size_t>(
        2, static_cast<std::size_t>(opts.geometric_share * static_cast<double>(n - 1)));
    const std::size_t n_uni = n - 1 - n_geo;
    std::vector<double> y{0.0};
    const double g0 = opts.first_node * opts.y_max;
    const double g1 = opts.geometric_end * opts.y_max;
    for (std::size_t i = 0; i < n_geo; ++i)
        y.push_back(g0 * std::pow(g1 / g0, static_cast<double>(i) / static_cast<double>(n_geo)));
    const double start = y.back();
    for (std::size_t i = 1; i <= n_uni; ++i)
        y.push_back(start + (opts.y_max - start) * static_cast<double>(i) / static_cast<double>(n_uni));
    y.back() = opts.y_max;
    return y;
}

BoundaryTable tabulate(const Market& m, const TabulateOptions& opts) {
    m.validate();
    const auto y = boundary_grid(opts);
    const std::size_t n = y.size();
    const double ybar = m.ybar_A();
    const double zbar = m.book.zbar();
    std::vector<double> bs(n, zbar), bl(n, zbar);

    const auto zero = solve_beta_zero_limit(m);
    bs[0] = 0.0;
    bl[0] = zero.beta_star;

    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            if (i == 0 || y[i] >= ybar) continue;
            try {
                const auto sol = solve_beta(m, y[i]);
                bs[i] = sol.beta_star;
                bl[i] = sol.beta_lower;
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) {
                    std::ostringstream os;
                    os << "tabulate: boundary solve failed at y = " << y[i] << ": " << e.what();
                    failure = std::make_exception_ptr(std::runtime_error(os.str()));
                }
            }
        }
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(opts.threads, static_cast<unsigned>(n)));
    if (threads == 1) {
        work(0, n);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (n + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t b = t * chunk;
            const std::size_t e = std::min(n, b + chunk);
            if (b < e) pool.emplace_back(work, b, e);
        }
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    // Isotone projection along the graph order bl[0], bs[1], bl[1], bs[2], ...
    std::vector<double> seq;
    seq.reserve(2 * n);
    seq.push_back(bl[0]);
    for (std::size_t i = 1; i < n; ++i) {
        seq.push_back(bs[i]);
        seq.push_back(bl[i]);
    }
    const double tol = 1e-9 * std::max(1.0, std::abs(zbar));
    for (std::size_t k = 1; k < seq.size(); ++k) {
        if (seq[k] > seq[k - 1] + tol) {
            std::ostringstream os;
            os << "tabulate: boundary increases by " << seq[k] - seq[k - 1] << " near y = "
               << y[(k + 1) / 2] << "; model assumptions look violated";
            throw std::runtime_error(os.str());
        }
    }
    // pool adjacent violators for a non-increasing fit
    struct Block {
        double sum;
        std::size_t count;
    };
    std::vector<Block> blocks;
    for (double v : seq) {
        blocks.push_back({v, 1});
        while (blocks.size() > 1) {
            auto& b1 = blocks[blocks.size() - 1];
            auto& b0 = blocks[blocks.size() - 2];
            if (b1.sum / static_cast<double>(b1.count) <= b0.sum / static_cast<double>(b0.count))
                break;
            b0.sum += b1.sum;
            b0.count += b1.count;
            blocks.pop_back();
        }
    }
    std::size_t k = 0;
    for (const auto& b : blocks)
        for (std::size_t j = 0; j < b.count; ++j) seq[k++] = b.sum / static_cast<double>(b.count);
    bl[0] = std::min(seq[0], 0.0);
    for (std::size_t i = 1; i < n; ++i) {
        bs[i] = std::min(seq[2 * i - 1], 0.0);
        bl[i] = std::min(seq[2 * i], bs[i]);
    }
    return BoundaryTable(y, bs, bl, ybar, zbar);
}

}  // namespace lobexec
