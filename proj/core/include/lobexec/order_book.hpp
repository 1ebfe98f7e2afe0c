#pragma once

#include <string>
#include <vector>

namespace lobexec {

enum class Side { Left, Right };

/// Bid-side book shape relative to the unaffected best bid.
///
/// phi(x) = -m((x, 0]) is the (negative) volume resting between price offset x
/// and the best bid; psi is its inverse and converts a volume displacement z into
/// a price displacement. Total depth is zbar = -m(R^-) < 0 and psi(z) = -inf
/// below it.
class BookShape {
 public:
    /// n orders per unit price down to xbar < 0, so psi(z) = z / n on [n xbar, 0].
    static BookShape block(double n, double xbar);

    /// Density of m on nodes x_0 = xbar < ... < x_K = 0. The cumulative phi is
    /// stored piecewise-linearly through the trapezoid values at the nodes; the
    /// density must be positive and non-decreasing towards 0 (concave m((x,0])).
    static BookShape tabulated(std::vector<double> x, std::vector<double> density);

    double zbar() const { return zbar_; }
    double xbar() const { return xbar_; }

    double phi(double x) const;
    double psi(double z) const;
    /// One-sided derivative of psi.
    double psi_slope(double z, Side side) const;
    /// Signed integral of psi over [a, b]; both ends must lie in [zbar, 0].
    double psi_integral(double a, double b) const;

    bool is_block() const { return kind_ == Kind::Block; }
    double block_density() const { return n_; }
    std::string describe() const;

 private:
    enum class Kind { Block, Tabulated };
    Kind kind_ = Kind::Block;
    double n_ = 0.0;
    double xbar_ = 0.0;
    double zbar_ = 0.0;
    // Tabulated: ascending price nodes and the matching phi values.
    std::vector<double> x_;
    std::vector<double> phi_;
    // running integral of psi from 0 down to each node (Psi(z_i) = int_0^{z_i} psi)
    std::vector<double> psi_cum_;
};

/// Resilience h of the book: between trades dZ = -h(Z) dt.
/// H(x) = int_{-1}^x du / h(u) turns recovery into translation:
/// Z_t = H^{-1}(H(Z_0) - t).
class Resilience {
 public:
    static Resilience exponential(double lambda);
    /// Piecewise-linear h through the given nodes; the last node must be (0, 0).
    /// h must be increasing and negative on x < 0 with 1/h concave.
    static Resilience tabulated(std::vector<double> x, std::vector<double> h);

    double h(double x) const;
    double h_slope(double x, Side side) const;
    /// H(x) for x < 0; H(0) is the limit from the left (-inf when 1/h is not integrable at 0).
    /// Throws std::domain_error for x > 0 or x below the tabulated range.
    double big_h(double x) const;
    /// Inverse of H; returns 0 for u at or below lim_{x->0-} H(x).
    double big_h_inv(double u) const;
    /// Book recovery without trading: H^{-1}(H(z0) - t).
    double decay(double z0, double t) const;

    bool is_exponential() const { return kind_ == Kind::Exponential; }
    double lambda() const { return lambda_; }
    double lower_limit() const;
    std::string describe() const;

 private:
    enum class Kind { Exponential, Tabulated };
    Kind kind_ = Kind::Exponential;
    double lambda_ = 0.0;
    std::vector<double> x_;
    std::vector<double> h_;
    std::vector<double> big_h_nodes_;  // H at each node (last entry: limit at 0)

    double segment_big_h(std::size_t i, double x) const;
};

/// Reads a two-column whitespace-separated table, skipping '#' comments.
std::pair<std::vector<double>, std::vector<double>> read_two_column_table(const std::string& path);

}  // namespace lobexec
