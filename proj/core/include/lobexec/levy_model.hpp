#pragma once

#include <functional>
#include <string>
#include <variant>
#include <vector>

namespace lobexec {

/// Variance-gamma parameters (rho: volatility of the Brownian part of the
/// subordinated process, eta: variance rate of the gamma clock, theta: drift
/// of the subordinated process).
struct VarianceGammaParams {
    double rho = 0.0;
    double eta = 0.0;
    double theta = 0.0;

    double c() const;
    double d() const;
    /// Drift that makes the linear process track the exponential VG price.
    double matching_drift() const;
    void validate() const;
};

struct NoJumps {};

/// Jump measure of the linear approximation of the exponential variance-gamma
/// price: jumps are e^u - 1 for VG log-jumps u, so they live on (-1, inf).
struct LinearVarianceGamma {
    VarianceGammaParams params;
};

/// Plain variance-gamma jump measure on the real line. Its negative tail is
/// exponential, so exponential moments (and hence kappa_A) blow up at a finite
/// holding.
struct ArithmeticVarianceGamma {
    VarianceGammaParams params;
};

/// Piecewise-linear jump density on declared nodes. Nodes must be strictly
/// increasing and non-zero; the segment straddling z = 0 carries no mass.
struct TabulatedJumpDensity {
    std::vector<double> z;
    std::vector<double> density;
};

using JumpSpec =
    std::variant<NoJumps, LinearVarianceGamma, ArithmeticVarianceGamma, TabulatedJumpDensity>;

/// Unaffected-price Levy process L_t = mu t + sigma W_t + compensated jumps.
/// Immutable; all queries are thread-safe.
class LevyModel {
 public:
    /// Throws std::invalid_argument for mu > 0, sigma2 < 0 or invalid jump data.
    LevyModel(double mu, double sigma2, JumpSpec jumps = NoJumps{});

    double mu() const { return mu_; }
    double sigma2() const { return sigma2_; }
    const JumpSpec& jumps() const { return jumps_; }
    bool has_jumps() const { return !std::holds_alternative<NoJumps>(jumps_); }

    /// Cumulant generating function of L_1; +inf outside its effective domain.
    double cumulant(double theta) const;
    double cumulant_derivative(double theta) const;
    double cumulant_second_derivative(double theta) const;

    /// Running risk cost of holding y shares: kappa(-A y).
    double kappa_A(double A, double y) const;
    /// d/dy kappa(-A y), from the differentiated integrand.
    double kappa_A_prime(double A, double y) const;
    /// Supremum of holdings with finite kappa_A; +inf when unbounded (capped at 1e6).
    double ybar_A(double A) const;

    /// Whether E[e^{theta L_1}] is finite, decided from the tail shape of the jump measure.
    bool exponential_moment_finite(double theta) const;

    /// Levy density nu(z) (0 for z outside the support).
    double jump_density(double z) const;
    /// Integral of g(z) nu(dz) over {z < 0} and {z > 0}; g must vanish fast
    /// enough at 0 for the result to exist.
    double jump_integral(const std::function<double(double)>& g) const;
    /// Integral of g(z) nu(dz) restricted to lo < z < hi (either side of 0).
    double jump_integral(const std::function<double(double)>& g, double lo, double hi) const;
    double jump_second_moment() const;

    /// Estimated second-moment mass missing beyond the last node of a tabulated
    /// density (0 for analytic jump measures).
    double truncation_error_estimate() const;

    std::string describe() const;

 private:
    double mu_;
    double sigma2_;
    JumpSpec jumps_;
};

/// Reads a two-column (z, density) text table.
TabulatedJumpDensity read_jump_table(const std::string& path);

}  // namespace lobexec
