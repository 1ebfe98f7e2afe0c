#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "lobexec/boundary.hpp"
#include "lobexec/strategy.hpp"

namespace lobexec {

/// Samples increments of the unaffected price on a fixed time grid.
/// Jumps larger than eps in absolute value are drawn as compound Poisson; the
/// smaller ones are replaced by extra Gaussian variance. Each path has its own
/// generator seeded from (seed, path index), so results do not depend on how
/// paths are split across threads.
class PathSampler {
 public:
    PathSampler(const LevyModel& model, std::vector<double> time_grid, double eps, std::uint64_t seed);

    const std::vector<double>& time_grid() const { return grid_; }
    std::size_t intervals() const { return grid_.empty() ? 0 : grid_.size() - 1; }
    double eps() const { return eps_; }
    std::uint64_t seed() const { return seed_; }

    double jump_intensity() const { return intensity_; }
    double small_jump_variance() const { return small_var_; }
    double diffusion_variance() const { return total_var_; }
    double large_jump_mean() const { return large_mean_; }

    /// Generator for one path.
    std::mt19937_64 path_rng(std::uint64_t path) const;
    /// Fills out[k] with the increment over interval k for the given path.
    void path_increments(std::uint64_t path, std::vector<double>& out) const;
    /// Increment matrix, one row per path.
    std::vector<std::vector<double>> sample_increments(std::size_t n_paths) const;

    /// Draws one jump size from the normalised large-jump distribution.
    double draw_jump(std::mt19937_64& rng) const;

 private:
    const LevyModel* model_;
    std::vector<double> grid_;
    double eps_;
    std::uint64_t seed_;
    double intensity_ = 0.0;
    double small_var_ = 0.0;
    double total_var_ = 0.0;
    double large_mean_ = 0.0;
    std::vector<double> jump_nodes_;  // ascending jump sizes, excluding (-eps, eps)
    std::vector<double> jump_cdf_;    // cumulative mass at each node (normalised)
};

/// Smallest power-of-two fraction of 1e-2 such that swapping small jumps for
/// Gaussian variance changes kappa_A(y_ref) by less than rel_tol.
double choose_truncation(const LevyModel& model, double A, double y_ref, double rel_tol = 1e-6);

/// Uniform grid on [0, t_end] with spacing at most dt, merged with extra event times.
std::vector<double> make_time_grid(double t_end, double dt, const std::vector<double>& extra = {});

/// Price-impact cost from int_z^0 psi + int h(Z) psi(Z) dt.
double impact_cost(const StrategyPath& path, const Market& market);
/// Price-impact cost from walking the book: block sales plus int psi(Z) dY.
double impact_cost_direct(const StrategyPath& path, const Market& market);
/// int kappa_A(Y_t) dt along the path.
double risk_cost(const StrategyPath& path, const Market& market);

/// Left-point values of Y on the grid (Y at the start of every interval).
/// Throws std::invalid_argument when the grid ends before the position is closed.
std::vector<double> holdings_on_grid(const StrategyPath& path, const std::vector<double>& grid);

/// Final cash c + b y - F + sum Y_k dL_k for each increment row.
std::vector<double> realized_cash(const StrategyPath& path, const Market& market,
                                  const std::vector<std::vector<double>>& increments,
                                  const std::vector<double>& grid, double c, double b);

struct UtilityEstimate {
    double mean = 0.0;         // mean of -exp(-A C)
    double stderr_ = 0.0;
    double log_mean = 0.0;     // log(-mean)
    double log_stderr = 0.0;   // delta-method standard error of log_mean
    double mean_gain = 0.0;    // mean of sum Y dL
    double gain_stderr = 0.0;
    double expected_gain = 0.0;  // mu * sum Y_k dt_k
    std::size_t clamped = 0;   // samples whose exponent hit the overflow guard
    std::size_t paths = 0;
};

UtilityEstimate estimate_utility(const StrategyPath& path, const Market& market, const PathSampler& sampler,
                                 double c, double b, std::size_t n_paths, unsigned threads = 1);

}  // namespace lobexec
