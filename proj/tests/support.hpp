#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "lobexec/boundary.hpp"

namespace lobexec::testing {

// The published two-model example.
inline constexpr double kMu = -0.0018;
inline constexpr double kSigma2 = 4.011e-4;
inline constexpr double kDepth = 1000.0;
inline constexpr double kLambda = 5.0;
inline const VarianceGammaParams kVg{0.02, 0.6, -0.002};

inline Market bm_market(double A = 1e-2) {
    return {LevyModel(kMu, kSigma2), BookShape::block(kDepth, -1.0), Resilience::exponential(kLambda), A};
}

inline Market lvg_market(double A = 1e-2) {
    return {LevyModel(kMu, 0.0, LinearVarianceGamma{kVg}), BookShape::block(kDepth, -1.0),
            Resilience::exponential(kLambda), A};
}

inline Market avg_market(double A = 1e-2) {
    return {LevyModel(kMu, 0.0, ArithmeticVarianceGamma{kVg}), BookShape::block(kDepth, -1.0),
            Resilience::exponential(kLambda), A};
}

/// Boundary scaled and shifted toward or away from the best bid. Keeps the
/// structural requirements of a boundary table (beta in [zbar, 0], s decreasing).
inline BoundaryTable perturbed_table(const BoundaryTable& t, double scale, double shift) {
    std::vector<double> bs = t.beta_star(), bl = t.beta_lower();
    auto move = [&](double b) { return std::clamp(scale * b + shift, t.zbar(), 0.0); };
    for (std::size_t i = 0; i < bs.size(); ++i) {
        bs[i] = i == 0 ? 0.0 : move(bs[i]);
        bl[i] = move(bl[i]);
    }
    return BoundaryTable(t.y_grid(), bs, bl, t.ybar_A(), t.zbar());
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

}  // namespace lobexec::testing
