#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "lobexec/levy_model.hpp"
#include "lobexec/order_book.hpp"

namespace lobexec {

/// Everything the optimisation needs: price model, book, resilience, risk aversion.
struct Market {
    LevyModel levy;
    BookShape book;
    Resilience resilience;
    double A;

    /// Throws std::invalid_argument when A <= 0 or the resilience table does not
    /// cover the book depth.
    void validate() const;
    double ybar_A() const { return levy.ybar_A(A); }
    double kappa_A(double y) const { return levy.kappa_A(A, y); }
    double kappa_A_prime(double y) const { return levy.kappa_A_prime(A, y); }
};

/// Gamma(x; y) = A psi(x) + kappa_A(y)/h(x) + kappa_A'(y) H(x).
double gamma_big(const Market& m, double x, double y);
/// Same with the risk terms supplied (kappa = kappa_A(y), kappa_prime = kappa_A'(y)).
double gamma_big(const Market& m, double x, double kappa, double kappa_prime);
/// One-sided derivative in x.
double gamma_big_slope(const Market& m, double x, double kappa, double kappa_prime, Side side);

struct BetaSolution {
    double beta_star;   // largest maximiser
    double beta_lower;  // smallest maximiser
};

/// Extremal maximisers of Gamma(.; y) over [zbar, 0]; y must lie in (0, ybar_A).
BetaSolution solve_beta(const Market& m, double y);
/// Maximisers for the y -> 0+ limit of Gamma (kappa = 0, kappa' = -A mu).
BetaSolution solve_beta_zero_limit(const Market& m);

/// Point on the boundary graph.
struct GraphPoint {
    double y;
    double z;
};

struct BetaInverse {
    double y;
    bool out_of_range;
};

/// Tabulated intervention boundary. The boundary graph is the polyline through
/// (y_i, beta_star_i) -> (y_i, beta_lower_i) -> (y_{i+1}, beta_star_{i+1}) -> ...
/// along which s = z - y strictly decreases, so every diagonal z = y + s meets it once.
class BoundaryTable {
 public:
    BoundaryTable() = default;
    /// y[0] must be 0 with beta_star[0] = 0; beta_lower[0] holds beta(0+).
    BoundaryTable(std::vector<double> y, std::vector<double> beta_star,
                  std::vector<double> beta_lower, double ybar_A, double zbar);

    const std::vector<double>& y_grid() const { return y_; }
    const std::vector<double>& beta_star() const { return beta_star_; }
    const std::vector<double>& beta_lower() const { return beta_lower_; }
    double ybar_A() const { return ybar_A_; }
    double zbar() const { return zbar_; }
    double y_max() const { return y_.back(); }
    double beta_zero_plus() const { return beta_lower_.front(); }

    /// Left-continuous boundary beta*(y), linear between nodes.
    double beta(double y) const;
    /// Right-continuous companion (beta_lower at nodes).
    double beta_right(double y) const;
    BetaInverse beta_inv(double z) const;
    double gamma_beta(double y) const { return beta(y) - y; }
    double rho_beta(double z) const;
    double gamma_beta_inv(double x) const { return intersect(x).y; }
    double rho_beta_inv(double x) const { return intersect(x).z; }

    /// Intersection of the diagonal z = y + s with the boundary graph (s <= 0).
    /// Throws std::out_of_range when the diagonal passes below the tabulated range.
    GraphPoint intersect(double s) const;
    /// s-levels of the polyline vertices, strictly decreasing.
    const std::vector<double>& vertex_s() const { return vs_; }
    const std::vector<GraphPoint>& vertices() const { return vertices_; }
    double min_s() const { return vs_.back(); }

    /// Whether (y, z) lies in the solvency region z > y - ybar_A + zbar.
    bool solvent(double y, double z) const;

 private:
    std::vector<double> y_, beta_star_, beta_lower_;
    double ybar_A_ = 0.0;
    double zbar_ = 0.0;
    std::vector<GraphPoint> vertices_;
    std::vector<double> vs_;
};

struct TabulateOptions {
    double y_max = 0.0;
    std::size_t nodes = 2048;
    /// Share of nodes spent on the geometric part of the grid near y = 0.
    double geometric_share = 0.25;
    /// Smallest positive node relative to y_max.
    double first_node = 1e-6;
    /// Upper end of the geometric part relative to y_max.
    double geometric_end = 0.05;
    unsigned threads = 1;
};

/// Solves for the boundary on a mixed geometric/uniform grid over [0, y_max].
/// Monotonicity defects up to solver tolerance are removed by isotone projection;
/// larger ones throw std::runtime_error naming the offending y.
BoundaryTable tabulate(const Market& m, const TabulateOptions& opts);

/// Grid used by tabulate (exposed for tests).
std::vector<double> boundary_grid(const TabulateOptions& opts);

}  // namespace lobexec
