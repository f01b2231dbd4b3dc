#pragma once

#include "gbulab/error.hpp"
#include "gbulab/grid.hpp"
#include "gbulab/profile_math.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace gbulab {

struct BumpParams {
    double C_amp = 1.0;
    double epsilon = 0.1;
    double p = 3.0;
};

/// Radial cutoff: 1 on [0, 1/4], 0 on [1/2, inf), quintic smoothstep between.
inline double bump_cutoff(double s) {
    if (s <= 0.25) return 1.0;
    if (s >= 0.5) return 0.0;
    const double t = (s - 0.25) / 0.25;
    return 1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

inline ScalarField concentrated_bump(const BumpParams& bp, const Grid2D& g) {
    const ProfileConstants pc = profile_constants(bp.p);
    const double eps = bp.epsilon;
    if (!(eps > 0.0)) throw ConfigError("initial_data.epsilon", "must be > 0");
    if (!(bp.C_amp > 0.0)) throw ConfigError("initial_data.amplitude", "must be > 0");
    if (eps / 2.0 > g.Lx || 1.5 * eps > g.Ly)
        throw ConfigError("initial_data.epsilon", "bump support does not fit inside the domain");
    if (g.hx > eps / 8.0 || g.hy > eps / 8.0) {
        std::ostringstream msg;
        msg << "grid does not resolve epsilon=" << eps << ": need hx, hy <= " << eps / 8.0
            << " (have hx=" << g.hx << ", hy=" << g.hy << ")";
        throw ConfigError("grid", msg.str());
    }
    const double amp = bp.C_amp * std::pow(eps, pc.k_id);
    ScalarField u(g);
    for (int j = 1; j < g.ny - 1; ++j) {
        const double dy = g.y(j) - eps;
        for (int i = 1; i < g.nx - 1; ++i) {
            const double x = g.x(i);
            u(i, j) = amp * bump_cutoff(std::sqrt(x * x + dy * dy) / eps);
        }
    }
    return u;
}

inline ScalarField symmetric_cap(double amplitude, double width, const Grid2D& g) {
    if (!(width > 0.0) || width > g.Lx)
        throw ConfigError("initial_data.width", "must lie in (0, Lx]");
    ScalarField u(g);
    const double pi = std::numbers::pi;
    for (int j = 1; j < g.ny - 1; ++j) {
        const double sy = std::sin(pi * g.y(j) / g.Ly);
        for (int i = 1; i < g.nx - 1; ++i) {
            const double x = std::abs(g.x(i));
            if (x >= width) continue;
            const double c = std::cos(pi * x / (2.0 * width));
            u(i, j) = amplitude * c * c * sy;
        }
    }
    return u;
}

} // namespace gbulab
