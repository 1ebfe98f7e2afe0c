#pragma once

#include <functional>
#include <vector>

#include "lobexec/boundary.hpp"
#include "lobexec/strategy.hpp"

namespace lobexec {

/// Discretisation for the brute-force solver. Shares and book state share one
/// step q = y_max / n_y, so selling one quantum moves diagonally between nodes.
struct GridSpec {
    double y_max = 400.0;
    std::size_t n_y = 200;
    std::size_t n_z = 200;
    double dt = 0.0;  // 0: choose dt so one wait step moves the book by at most one cell
    double convergence_tol = 1e-12;
    int max_sweeps = 50;
};

/// Value grid over nodes (i, j) with y = i q and z = -j q.
class DpResult {
 public:
    DpResult(std::size_t n_y, std::size_t n_z, double q, double dt);

    std::size_t n_y() const { return n_y_; }
    std::size_t n_z() const { return n_z_; }
    double q() const { return q_; }
    double dt() const { return dt_; }
    double y(std::size_t i) const { return static_cast<double>(i) * q_; }
    double z(std::size_t j) const { return j == 0 ? 0.0 : -static_cast<double>(j) * q_; }

    double& value(std::size_t i, std::size_t j) { return v_[i * (n_z_ + 1) + j]; }
    double value(std::size_t i, std::size_t j) const { return v_[i * (n_z_ + 1) + j]; }
    bool sells(std::size_t i, std::size_t j) const { return sell_[i * (n_z_ + 1) + j] != 0; }
    void set_sells(std::size_t i, std::size_t j, bool s) { sell_[i * (n_z_ + 1) + j] = s ? 1 : 0; }

    /// Lowest book state at which row i sells (NaN when the row never sells).
    double sell_frontier(std::size_t i) const;

    int sweeps = 0;
    double residual = 0.0;

 private:
    std::size_t n_y_, n_z_;
    double q_, dt_;
    std::vector<double> v_;
    std::vector<unsigned char> sell_;
};

/// Value iteration over {sell one quantum, wait dt} for the deterministic cost
/// functional. Never looks at boundary theory.
DpResult solve_dp(const Market& market, const GridSpec& grid);

using FeedbackPolicy = std::function<bool(double y, double z)>;

/// Cost grid of a fixed feedback policy under the same discrete accounting.
DpResult evaluate_policy(const Market& market, const GridSpec& grid, const FeedbackPolicy& sell);

/// Cost of the boundary-following strategy of `path` (sell iff z > beta(y) of its
/// table) at the grid node nearest to the path's starting state.
double policy_cost(const StrategyPath& path, const Market& market, const GridSpec& grid);

}  // namespace lobexec
