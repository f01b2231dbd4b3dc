#pragma once

// Monitors for the maximum-principle bounds, the Bernstein estimate, the J
// function, the ξ/Θ fields and the quasi-stationary modulation h(t, x).

#include "gbulab/error.hpp"
#include "gbulab/grid.hpp"
#include "gbulab/profile_fit.hpp"
#include "gbulab/profile_math.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace gbulab {

/// u and the derivatives the monitors read. Built from snapshots by finite
/// differences, or filled in closed form by a caller that has an exact solution.
struct DerivativeFields {
    ScalarField u, ux, uy, uxx;
    std::optional<ScalarField> ut;
    double t = 0.0;
};

/// u_xx by second differences in x (boundary columns 0); u_t by backward difference.
inline DerivativeFields derivative_fields(const Snapshot& cur, const Snapshot* prev = nullptr) {
    const ScalarField& u = cur.field;
    const Grid2D& g = u.grid();
    Gradient gr = gradient(u);
    DerivativeFields d{u, std::move(gr.fx), std::move(gr.fy), ScalarField(g), std::nullopt, cur.time};
    const double ihx2 = 1.0 / (g.hx * g.hx);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx - 1; ++i) d.uxx(i, j) = ((u(i - 1, j) + u(i + 1, j)) - 2.0 * u(i, j)) * ihx2;
    if (prev) {
        if (!(prev->field.grid() == g)) throw DomainError("monitor: snapshots on different grids");
        const double dt = cur.time - prev->time;
        if (!(dt > 0.0)) throw DomainError("monitor: snapshots must be strictly increasing in time");
        ScalarField ut(g);
        for (std::size_t k = 0; k < g.size(); ++k)
            ut.values()[k] = (u.values()[k] - prev->field.values()[k]) / dt;
        d.ut = std::move(ut);
    }
    return d;
}

struct MonitorEnvelope {
    std::string name;
    double worst_value = 0.0;
    double x = 0.0, y = 0.0, t = 0.0;
    double envelope_constant = 0.0;
    bool evaluated = true; ///< false when the monitor was skipped (e.g. u_t with one snapshot)
};

struct Box {
    double x0, x1, y0, y1;
    bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
};

/// ω' = [-Lx/2, Lx/2] x [0, Ly/2].
inline Box restricted_box(const Grid2D& g) { return {-0.5 * g.Lx, 0.5 * g.Lx, 0.0, 0.5 * g.Ly}; }

/// Envelopes of |u_t| <= C, u_y >= -C, u_xx >= -C, |u_x| <= C|x| over ω'.
/// Each envelope is the smallest C >= 0 for which the bound holds on the nodes.
inline std::vector<MonitorEnvelope> monitor_bounds(const DerivativeFields& d, std::string* notice = nullptr) {
    const Grid2D& g = d.u.grid();
    const Box box = restricted_box(g);
    MonitorEnvelope ut{"ut_bound", 0.0, 0, 0, d.t, 0.0, d.ut.has_value()};
    MonitorEnvelope uy{"uy_lower", std::numeric_limits<double>::infinity(), 0, 0, d.t, 0.0, true};
    MonitorEnvelope uxx{"uxx_lower", std::numeric_limits<double>::infinity(), 0, 0, d.t, 0.0, true};
    MonitorEnvelope ux{"ux_linear", 0.0, 0, 0, d.t, 0.0, true};
    for (int j = 0; j < g.ny; ++j) {
        const double y = g.y(j);
        for (int i = 0; i < g.nx; ++i) {
            const double x = g.x(i);
            if (!box.contains(x, y)) continue;
            if (d.ut) {
                const double v = std::abs((*d.ut)(i, j));
                if (v > ut.worst_value) ut.worst_value = v, ut.x = x, ut.y = y;
            }
            if (d.uy(i, j) < uy.worst_value) uy.worst_value = d.uy(i, j), uy.x = x, uy.y = y;
            if (i > 0 && i < g.nx - 1 && d.uxx(i, j) < uxx.worst_value)
                uxx.worst_value = d.uxx(i, j), uxx.x = x, uxx.y = y;
            if (x != 0.0) {
                const double v = std::abs(d.ux(i, j)) / std::abs(x);
                if (v > ux.worst_value) ux.worst_value = v, ux.x = x, ux.y = y;
            }
        }
    }
    ut.envelope_constant = ut.worst_value;
    uy.envelope_constant = std::max(0.0, -uy.worst_value);
    uxx.envelope_constant = std::max(0.0, -uxx.worst_value);
    ux.envelope_constant = ux.worst_value;
    if (!d.ut && notice) *notice = "ut_bound skipped: needs two snapshots";
    return {ut, uy, uxx, ux};
}

/// sup over interior nodes of |∇u| dist(X, ∂Ω)^β.
inline MonitorEnvelope bernstein_monitor(const DerivativeFields& d, const ProfileConstants& pc) {
    const Grid2D& g = d.u.grid();
    MonitorEnvelope m{"bernstein", 0.0, 0, 0, d.t, 0.0, true};
    for (int j = 1; j < g.ny - 1; ++j)
        for (int i = 1; i < g.nx - 1; ++i) {
            const double x = g.x(i), y = g.y(j);
            const double dist = std::min({x + g.Lx, g.Lx - x, y, g.Ly - y});
            const double gx = d.ux(i, j), gy = d.uy(i, j);
            const double v = std::sqrt(gx * gx + gy * gy) * std::pow(dist, pc.beta);
            if (v > m.worst_value) m.worst_value = v, m.x = x, m.y = y;
        }
    m.envelope_constant = m.worst_value;
    return m;
}

inline MonitorEnvelope sup_norm_monitor(const DerivativeFields& d) {
    const Grid2D& g = d.u.grid();
    MonitorEnvelope m{"max_principle_sup", 0.0, 0, 0, d.t, 0.0, true};
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            if (std::abs(d.u(i, j)) > m.worst_value) m.worst_value = std::abs(d.u(i, j)), m.x = g.x(i), m.y = g.y(j);
    m.envelope_constant = m.worst_value;
    return m;
}

// ---------------------------------------------------------------------------
// J function

/// Default probe box (0, min(0.1, Lx/4)] x (0, min(0.1, Ly/4)].
inline Box default_probe_box(const Grid2D& g) {
    return {0.0, std::min(0.1, g.Lx / 4.0), 0.0, std::min(0.1, g.Ly / 4.0)};
}

struct JProbe {
    double max_j = -std::numeric_limits<double>::infinity();
    double x = 0.0, y = 0.0;
    int nodes = 0;
};

/// max J over box nodes with x > 0 and y > 0 (y = 0 is excluded: the weight is singular there).
inline JProbe j_monitor(const DerivativeFields& d, const JParams& jp, const ProfileConstants& pc, const Box& box) {
    const Grid2D& g = d.u.grid();
    JProbe out;
    for (int j = 1; j < g.ny; ++j) {
        const double y = g.y(j);
        if (!(y > box.y0 && y <= box.y1 * (1.0 + 1e-12))) continue;
        for (int i = g.center() + 1; i < g.nx; ++i) {
            const double x = g.x(i);
            if (!(x > box.x0 && x <= box.x1 * (1.0 + 1e-12))) continue;
            const double v = j_model(jp, pc, std::max(0.0, d.u(i, j)), d.ux(i, j), x, y);
            ++out.nodes;
            if (v > out.max_j) out.max_j = v, out.x = x, out.y = y;
        }
    }
    return out;
}

struct JLadderResult {
    std::optional<double> k;   ///< largest passing k = 2^{-m}
    int m = 0;
    double max_j_at_k = 0.0;
    double first_failing_k = 0.0; ///< 2k when k was found, else the last tried
};

/// Largest k in {1/2, 1/4, ...} with max J <= 0 over every field in `window`.
inline JLadderResult j_ladder(const std::vector<const DerivativeFields*>& window, double q,
                              const ProfileConstants& pc, const Box& box, int max_m = 60) {
    JLadderResult res;
    for (int m = 1; m <= max_m; ++m) {
        const double k = std::ldexp(1.0, -m);
        const JParams jp = make_jparams(k, q, pc);
        double worst = -std::numeric_limits<double>::infinity();
        for (const auto* d : window) worst = std::max(worst, j_monitor(*d, jp, pc, box).max_j);
        if (worst <= 0.0) {
            res.k = k;
            res.m = m;
            res.max_j_at_k = worst;
            res.first_failing_k = m > 1 ? 2.0 * k : 0.0;
            return res;
        }
        res.first_failing_k = k;
    }
    return res;
}

// ---------------------------------------------------------------------------
// ξ = y u_y / u and Θ = y u_y^{p-1}

struct MaskedField {
    ScalarField values;
    std::vector<std::uint8_t> present; ///< 1 where the value is defined
};

struct XiTheta {
    MaskedField xi, theta;
};

/// Defined on nodes with y > 0, u > threshold and u_y > 0.
inline XiTheta xi_theta_fields(const DerivativeFields& d, const ProfileConstants& pc, double threshold = 1e-12) {
    const Grid2D& g = d.u.grid();
    XiTheta out{{ScalarField(g), std::vector<std::uint8_t>(g.size(), 0)},
                {ScalarField(g), std::vector<std::uint8_t>(g.size(), 0)}};
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double u = d.u(i, j), uy = d.uy(i, j), y = g.y(j);
            if (!(u > threshold) || !(uy > 0.0)) continue;
            const std::size_t k = g.index(i, j);
            out.xi.values(i, j) = y * uy / u;
            out.theta.values(i, j) = y * std::pow(uy, pc.p - 1.0);
            out.xi.present[k] = out.theta.present[k] = 1;
        }
    return out;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    int n = 0;
    void add(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        ++n;
    }
};

inline Range masked_range(const MaskedField& f, const Box& box) {
    const Grid2D& g = f.values.grid();
    Range r;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            if (f.present[g.index(i, j)] && box.contains(g.x(i), g.y(j)) && g.x(i) > box.x0 && g.y(j) > box.y0)
                r.add(f.values(i, j));
    return r;
}

// ---------------------------------------------------------------------------
// Modulation h = (u_y(x, 0, t) / d_p)^{-1/β}

struct BoundarySlice {
    double t = 0.0;
    std::vector<Sample> uy; ///< (x, u_y(x, 0, t)) for x >= 0
};

struct HRow {
    double t, x, h;
};

struct ModulationResult {
    std::vector<HRow> table;
    int excluded = 0; ///< nonpositive u_y samples
    std::optional<PowerLawFit> spatial;  ///< log h(t_last, x) against log x
    std::optional<PowerLawFit> temporal; ///< log h(t, 0) against log(T_hat - t)
    std::string spatial_error, temporal_error;
};

inline BoundarySlice boundary_slice(const Snapshot& s) {
    const Grid2D& g = s.field.grid();
    const Gradient gr = gradient(s.field);
    BoundarySlice b{s.time, {}};
    for (int i = g.center(); i < g.nx; ++i) b.uy.push_back({g.x(i), gr.fy(i, 0)});
    return b;
}

inline ModulationResult modulation_h(const std::vector<BoundarySlice>& slices, const ProfileConstants& pc,
                                     std::optional<double> T_hat = std::nullopt, double x_lo = 0.0,
                                     double x_hi = std::numeric_limits<double>::infinity()) {
    ModulationResult out;
    for (const auto& s : slices)
        for (const auto& q : s.uy) {
            if (!(q.v > 0.0)) {
                ++out.excluded;
                continue;
            }
            out.table.push_back({s.t, q.s, std::pow(q.v / pc.d_p, -1.0 / pc.beta)});
        }
    if (slices.empty()) return out;
    const double t_last = slices.back().t;
    std::vector<Sample> sp, tm;
    for (const auto& r : out.table) {
        if (r.t == t_last && r.x > 0.0) sp.push_back({r.x, r.h});
        if (r.x == 0.0 && T_hat && *T_hat > r.t) tm.push_back({*T_hat - r.t, r.h});
    }
    try {
        out.spatial = powerlaw_fit(sp, x_lo, x_hi);
    } catch (const FitError& e) {
        out.spatial_error = e.what();
    }
    if (!T_hat)
        out.temporal_error = "no blow-up time estimate";
    else {
        try {
            out.temporal = powerlaw_fit(tm);
        } catch (const FitError& e) {
            out.temporal_error = e.what();
        }
    }
    return out;
}

} // namespace gbulab
