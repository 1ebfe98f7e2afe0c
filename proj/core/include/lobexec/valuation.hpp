#pragma once

#include <cstdint>
#include <vector>

#include "lobexec/boundary.hpp"
#include "lobexec/numerics.hpp"
#include "lobexec/strategy.hpp"

namespace lobexec {

struct ValueDerivatives {
    double dy_minus;  // left derivative in y
    double dz;
};

/// Closed-form value function for the strategy that follows a tabulated boundary.
/// Construction precomputes the cumulative integrals at the table nodes, so
/// value() costs one partial-segment quadrature. Keeps references to market and table.
class Valuation {
 public:
    Valuation(const Market& market, const BoundaryTable& table,
              numerics::QuadratureOptions quad = {1e-14, 1e-11, 200});

    double value(double y, double z) const;
    ValueDerivatives derivatives(double y, double z) const;

    /// Integrand of the sell-region formula at diagonal offset u.
    double sell_integrand(double u) const;
    /// Integrand of the y-integral in the wait-region formula.
    double wait_integrand(double u) const;

    const Market& market() const { return market_; }
    const BoundaryTable& table() const { return table_; }

 private:
    const Market& market_;
    const BoundaryTable& table_;
    numerics::QuadratureOptions quad_;
    std::vector<double> sell_cum_;  // int_{beta(0+)}^{vertex_s[k]} sell_integrand
    std::vector<double> wait_cum_;  // int_0^{y_i} wait_integrand
    std::size_t final_vertex_ = 0;
    double beta0_psi_ = 0.0;        // A int_0^{beta(0+)} psi
};

/// Performance of a simulated path: time integral of the running cost plus the
/// exact post-liquidation tail.
double performance(const StrategyPath& path, const Market& market);

/// Time integral of the running cost over [0, wait_time] of the initial waiting period.
double wait_prefix_cost(const StrategyPath& path, const Market& market);

struct HjbPoint {
    double y, z;
};

struct HjbResidual {
    double y, z;
    bool sell_region;
    double equality;    // v_y + v_z when selling, h v_z - kappa_A - A h psi when waiting
    double inequality;  // the other of the two expressions; should be <= 0
    double scale;
};

struct HjbReport {
    double sell_equality_max = 0.0;    // max |v_y + v_z| / scale
    double sell_inequality_max = 0.0;  // max positive part of the waiting expression
    double wait_equality_max = 0.0;    // max |h v_z - kappa_A - A h psi| / scale
    double wait_inequality_max = 0.0;  // max positive part of v_y + v_z
    std::size_t points = 0;
    std::size_t sell_points = 0;
    std::vector<HjbResidual> worst;    // worst few points per category
};

HjbReport hjb_check(const Valuation& val, const std::vector<HjbPoint>& points, unsigned threads = 1);

/// Uniform random points of the solvency region below y_max, from a fixed seed.
std::vector<HjbPoint> sample_solvency_region(const BoundaryTable& table, double y_max,
                                             std::size_t count, std::uint64_t seed);

struct UtilityForms {
    double resting;      // exponent uses A int_z^0 psi
    double walk;         // exponent uses A int_z^{z-y} psi
    double resting_log;  // log(-utility)
    double walk_log;
};

UtilityForms utility(const Market& market, double b, double c, double y, double z, double v_value);

}  // namespace lobexec
