#pragma once

#include <string>
#include <vector>

#include "lobexec/boundary.hpp"

namespace lobexec {

enum class Region { Sell, Wait, OnBoundary };

enum class Phase { Block, Wait, Boundary, Done };

const char* phase_name(Phase p);

/// Initial move from a state off the boundary graph.
struct InitialAction {
    enum class Kind { Block, Wait } kind;
    double amount;  // shares for Block, days for Wait
};

/// One accepted integrator step of s = Z - Y while the state moves on the boundary graph.
struct GraphStep {
    double t0, t1;
    double s0, s1;
    double ds0, ds1;
    std::size_t segment;  // polyline segment (vertex segment-1 -> segment)
};

struct WaitingInterval {
    double t_start;
    double t_end;
    double y;
    double z_start;
    double z_end;
};

struct PathSample {
    double t;
    double y;
    double z;
    Phase phase;
};

struct SimulateOptions {
    double dt_max = 0.05;   // output spacing and integrator step cap (days)
    double horizon = 1e6;   // stop integrating here even if shares remain
    double path_tol = 1e-8;
    /// Infinite-tail paths stop once Y drops below this fraction of the post-block position.
    double tail_fraction = 1e-9;
    bool record_samples = true;
};

/// Deterministic liquidation trajectory for a given boundary.
class StrategyPath {
 public:
    double y0 = 0.0, z0 = 0.0;    // state before trading
    double initial_block = 0.0;   // shares sold at t = 0
    double wait_time = 0.0;       // time before the graph is reached
    double t_bar = 0.0;           // completion time (+inf when shares never reach 0)
    double z_at_t_bar = 0.0;
    bool truncated = false;       // infinite tail cut off (see tail_* below)
    bool horizon_reached = false;
    double t_end = 0.0;           // last time covered by the integrated part
    double y_end = 0.0, z_end = 0.0;
    double tail_cost = 0.0;       // performance of the truncated tail
    double tail_risk = 0.0;       // int kappa_A(Y) dt over the truncated tail
    std::vector<GraphStep> steps;
    std::vector<WaitingInterval> waiting_intervals;
    std::vector<PathSample> samples;

    /// State at time t (post-trade, i.e. right limits).
    double Y(double t) const;
    double Z(double t) const;
    /// s on the graph part via cubic Hermite interpolation of the accepted steps.
    double graph_s(double t) const;
    bool on_graph(double t) const;

    const BoundaryTable* table = nullptr;
    const Resilience* resilience = nullptr;
};

Region classify(const BoundaryTable& table, double y, double z, double tol = 1e-12);
InitialAction initial_action(const BoundaryTable& table, const Resilience& res, double y, double z);

/// Follows the boundary graph from (y, z). The returned path keeps pointers to
/// table and market.resilience, which must outlive it.
StrategyPath simulate(const BoundaryTable& table, const Market& market, double y, double z,
                      const SimulateOptions& opts = {});

struct AdmissibilityReport {
    double risk_integral = 0.0;      // int kappa_A(Y_t) dt
    bool risk_integral_finite = true;
    double final_t_times_y = 0.0;    // t Y_t at the end of the integrated part
    double final_t_times_y2 = 0.0;   // t Y_t^2
    bool vanishing_ok = true;
    bool admissible = true;
    std::string note;
};

AdmissibilityReport verify_admissibility(const StrategyPath& path, const Market& market);

}  // namespace lobexec
