#pragma once

// Log-log regressions for the normal, tangential and temporal exponents and the
// two-parameter anisotropic profile.

#include "gbulab/error.hpp"
#include "gbulab/grid.hpp"
#include "gbulab/profile_math.hpp"
#include "gbulab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gbulab {

struct PowerLawFit {
    double exponent = 0.0;
    double amplitude = 0.0;
    double r_squared = 0.0;
    double lo = 0.0; ///< window actually used
    double hi = 0.0;
    int n_points = 0;
};

struct Sample {
    double s = 0.0;
    double v = 0.0;
};

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

inline LinearFit linear_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
    const std::size_t n = xs.size();
    if (n < 2 || ys.size() != n) throw FitError("linear fit needs at least 2 paired samples");
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        mx += xs[k];
        my += ys[k];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double dx = xs[k] - mx, dy = ys[k] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (!(sxx > 0.0)) throw FitError("linear fit: abscissae are all equal");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    // A constant response is fitted perfectly by a zero slope.
    f.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
    return f;
}

/// Least squares of log v against log s over samples with lo <= s <= hi.
inline PowerLawFit powerlaw_fit(const std::vector<Sample>& samples, double lo = 0.0,
                                double hi = std::numeric_limits<double>::infinity()) {
    std::vector<double> ls, lv;
    double smin = std::numeric_limits<double>::infinity(), smax = 0.0;
    for (const auto& q : samples) {
        if (!(q.s >= lo && q.s <= hi)) continue;
        if (!(q.s > 0.0) || !(q.v > 0.0) || !std::isfinite(q.s) || !std::isfinite(q.v)) continue;
        ls.push_back(std::log(q.s));
        lv.push_back(std::log(q.v));
        smin = std::min(smin, q.s);
        smax = std::max(smax, q.s);
    }
    if (ls.size() < 5)
        throw FitError("power-law fit needs >= 5 positive samples in window, have " +
                       std::to_string(ls.size()));
    const LinearFit lf = linear_fit(ls, lv);
    return {lf.slope, std::exp(lf.intercept), lf.r_squared, smin, smax, static_cast<int>(ls.size())};
}

struct FitOptions {
    double normal_hi = 0.1;
    double tangential_hi = 0.1;
    int inner_cells = 3;
    double aniso_x = 0.1;      ///< fit_aniso region [0, aniso_x] x [0, aniso_y]
    double aniso_y = 0.1;
    double level_fraction = 0.5; ///< level as a fraction of the resolved peak of u_y
};

/// Local log-log slope by centered differences (one-sided at the ends).
inline std::vector<double> local_slopes(const std::vector<Sample>& q) {
    const std::size_t n = q.size();
    std::vector<double> out(n, std::numeric_limits<double>::quiet_NaN());
    if (n < 2) return out;
    auto slope = [&](std::size_t a, std::size_t b) {
        if (!(q[a].v > 0.0 && q[b].v > 0.0 && q[a].s > 0.0 && q[b].s > 0.0))
            return std::numeric_limits<double>::quiet_NaN();
        return (std::log(q[b].v) - std::log(q[a].v)) / (std::log(q[b].s) - std::log(q[a].s));
    };
    for (std::size_t k = 0; k < n; ++k) out[k] = slope(k == 0 ? 0 : k - 1, k + 1 < n ? k + 1 : k);
    return out;
}

/// Lower window edge: the first sample at or beyond `floor` whose local slope has
/// reached half the target exponent. Below it the grid has saturated the profile.
inline double resolution_crossover(const std::vector<Sample>& q, double target, double floor) {
    const auto sl = local_slopes(q);
    for (std::size_t k = 0; k < q.size(); ++k) {
        if (q[k].s < floor * (1.0 - 1e-12)) continue;
        if (std::isfinite(sl[k]) && sl[k] <= 0.5 * target) return q[k].s;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

/// u_y(0, y) for y > 0 along the symmetry column.
inline std::vector<Sample> normal_profile(const ScalarField& u) {
    const Grid2D& g = u.grid();
    const Gradient gr = gradient(u);
    std::vector<Sample> out;
    for (int j = 1; j < g.ny; ++j) out.push_back({g.y(j), gr.fy(g.center(), j)});
    return out;
}

/// u_y(x, 0) for x > 0 (one-sided normal derivative on the bottom edge).
inline std::vector<Sample> tangential_profile(const ScalarField& u) {
    const Grid2D& g = u.grid();
    const Gradient gr = gradient(u);
    std::vector<Sample> out;
    for (int i = g.center() + 1; i < g.nx; ++i) out.push_back({g.x(i), gr.fy(i, 0)});
    return out;
}

inline PowerLawFit fit_normal(const ScalarField& u, const ProfileConstants& pc, const FitOptions& o = {}) {
    const Grid2D& g = u.grid();
    const auto prof = normal_profile(u);
    const double floor = o.inner_cells * g.hy;
    double lo = resolution_crossover(prof, -pc.beta, floor);
    if (!std::isfinite(lo) || lo > o.normal_hi)
        throw FitError("normal fit: insufficient resolution (no steep range in [" + std::to_string(floor) +
                       ", " + std::to_string(o.normal_hi) + "])");
    return powerlaw_fit(prof, lo, o.normal_hi * (1.0 + 1e-12));
}

inline PowerLawFit fit_tangential(const ScalarField& u, const ProfileConstants& pc, const FitOptions& o = {}) {
    const Grid2D& g = u.grid();
    const auto prof = tangential_profile(u);
    const double floor = o.inner_cells * g.hx;
    const double lo = resolution_crossover(prof, -pc.tangential_exp, floor);
    if (!std::isfinite(lo) || lo > o.tangential_hi)
        throw FitError("tangential fit: insufficient resolution (profile never reaches half the "
                       "target slope below x = " + std::to_string(o.tangential_hi) + ")");
    try {
        return powerlaw_fit(prof, lo, o.tangential_hi * (1.0 + 1e-12));
    } catch (const FitError& e) {
        throw FitError(std::string("tangential fit: insufficient resolution (") + e.what() + ")");
    }
}

// ---------------------------------------------------------------------------
// Time rate

struct TimeRateFit {
    PowerLawFit rate;          ///< grad_max against (T_hat - t)
    double T_hat = 0.0;
    double linear_r2 = 0.0;    ///< r^2 of grad_max^{-(p-2)} against t
    double window_t0 = 0.0;    ///< first time of the last growth decade
    bool tail_trimmed = false; ///< non-monotone samples were dropped from the tail
};

inline TimeRateFit fit_time_rate(const std::vector<SeriesRow>& series, const ProfileConstants& pc) {
    if (series.size() < 5) throw FitError("time-rate fit: series too short");
    // Monotone tail: walk back while grad_max is non-increasing backwards in time.
    std::size_t start = series.size() - 1;
    while (start > 0 && series[start - 1].grad_max <= series[start].grad_max) --start;
    TimeRateFit out;
    out.tail_trimmed = start > 0;
    const double gfin = series.back().grad_max;
    if (!(gfin > 0.0)) throw FitError("time-rate fit: final grad_max is not positive");
    std::size_t first = start;
    // If the monotone tail spans less than a decade the whole tail is used.
    while (first < series.size() && series[first].grad_max < gfin / 10.0) ++first;
    std::vector<double> ts, ws;
    for (std::size_t k = first; k < series.size(); ++k) {
        ts.push_back(series[k].t);
        ws.push_back(std::pow(series[k].grad_max, -(pc.p - 2.0)));
    }
    if (ts.size() < 5) throw FitError("time-rate fit: fewer than 5 samples in the last decade");
    const LinearFit lf = linear_fit(ts, ws);
    if (!(lf.slope < 0.0)) throw FitError("time-rate fit: grad_max^{-(p-2)} is not decreasing");
    out.T_hat = -lf.intercept / lf.slope;
    out.linear_r2 = lf.r_squared;
    out.window_t0 = ts.front();
    std::vector<Sample> q;
    for (std::size_t k = first; k < series.size(); ++k)
        q.push_back({out.T_hat - series[k].t, series[k].grad_max});
    out.rate = powerlaw_fit(q);
    return out;
}

// ---------------------------------------------------------------------------
// Anisotropic profile

struct AnisoFit {
    double C1_hat = 0.0;
    double residual_rel = 0.0;
    int n_points = 0;
    double x_lo = 0.0; ///< excluded neighbourhood of the origin: x < x_lo and y < y_lo
    double y_lo = 0.0;
};

struct AnisoNode {
    double x, y, uy;
};

inline double aniso_residual(const std::vector<AnisoNode>& nodes, const ProfileConstants& pc, double C1) {
    double worst = 0.0;
    for (const auto& n : nodes) {
        const double m = final_profile_model(pc, C1, n.x, n.y);
        worst = std::max(worst, std::abs(n.uy - m) / m);
    }
    return worst;
}

/// Minimizes the max relative deviation over log C1: coarse scan, then golden section.
inline std::pair<double, double> minimize_aniso(const std::vector<AnisoNode>& nodes,
                                                const ProfileConstants& pc) {
    auto f = [&](double lc) { return aniso_residual(nodes, pc, std::exp(lc)); };
    const double a0 = std::log(1e-6), b0 = std::log(1e10);
    const int m = 161;
    int best = 0;
    double fbest = std::numeric_limits<double>::infinity();
    for (int k = 0; k < m; ++k) {
        const double v = f(a0 + (b0 - a0) * k / (m - 1));
        if (v < fbest) {
            fbest = v;
            best = k;
        }
    }
    double a = a0 + (b0 - a0) * std::max(0, best - 1) / (m - 1);
    double b = a0 + (b0 - a0) * std::min(m - 1, best + 1) / (m - 1);
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - r * (b - a), d = a + r * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > 1e-12) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    const double lc = 0.5 * (a + b);
    return {std::exp(lc), f(lc)};
}

inline AnisoFit fit_aniso(const ScalarField& u, const ProfileConstants& pc, const FitOptions& o = {}) {
    const Grid2D& g = u.grid();
    AnisoFit out;
    out.y_lo = o.inner_cells * g.hy;
    try {
        out.x_lo = fit_tangential(u, pc, o).lo;
    } catch (const FitError&) {
        out.x_lo = o.aniso_x; // no resolved tangential range: keep only the y >= y_lo part
    }
    const Gradient gr = gradient(u);
    std::vector<AnisoNode> nodes;
    for (int j = 0; j < g.ny && g.y(j) <= o.aniso_y * (1.0 + 1e-12); ++j)
        for (int i = g.center(); i < g.nx && g.x(i) <= o.aniso_x * (1.0 + 1e-12); ++i) {
            const double x = g.x(i), y = g.y(j);
            if (x < out.x_lo * (1.0 - 1e-12) && y < out.y_lo * (1.0 - 1e-12)) continue;
            nodes.push_back({x, y, gr.fy(i, j)});
        }
    if (nodes.size() < 5) throw FitError("aniso fit: fewer than 5 nodes in the fit region");
    auto [C1, res] = minimize_aniso(nodes, pc);
    out.C1_hat = C1;
    out.residual_rel = res;
    out.n_points = static_cast<int>(nodes.size());
    return out;
}

// ---------------------------------------------------------------------------
// Level sets of u_y

struct LevelSetCurve {
    double level = 0.0;
    double Y0 = 0.0;                  ///< crossing height on x = 0
    std::vector<std::pair<double, double>> points; ///< (x, y) crossings for x >= 0
};

/// Height where u_y first drops below `level` going up each column (linear interpolation).
inline LevelSetCurve level_set_curve(const ScalarField& u, double level) {
    const Grid2D& g = u.grid();
    const Gradient gr = gradient(u);
    LevelSetCurve c;
    c.level = level;
    bool have_axis = false;
    for (int i = g.center(); i < g.nx; ++i) {
        if (!(gr.fy(i, 0) >= level)) continue;
        for (int j = 0; j + 1 < g.ny; ++j) {
            const double a = gr.fy(i, j), b = gr.fy(i, j + 1);
            if (a >= level && b < level) {
                const double y = g.y(j) + (a - level) / (a - b) * g.hy;
                c.points.emplace_back(g.x(i), y);
                if (i == g.center()) {
                    c.Y0 = y;
                    have_axis = true;
                }
                break;
            }
        }
    }
    if (!have_axis) throw FitError("level set: level not crossed on the symmetry axis");
    return c;
}

/// Fits Y0 - y(x) against x: on the model the depth deficit is exactly C1 x^{2(p-1)/(p-2)}.
/// Columns closer to the axis than `x_floor` (and inner_cells·hx) are left out.
inline PowerLawFit level_set_shape(const ScalarField& u, const ProfileConstants& pc, double level,
                                   const FitOptions& o = {}, double x_floor = 0.0) {
    (void)pc;
    const LevelSetCurve c = level_set_curve(u, level);
    std::vector<Sample> q;
    for (const auto& [x, y] : c.points)
        if (x > 0.0) q.push_back({x, c.Y0 - y});
    const double floor = std::max(x_floor, o.inner_cells * u.grid().hx) * (1.0 - 1e-12);
    std::size_t usable = 0;
    for (const auto& s : q)
        if (s.s >= floor && s.v > 0.0) ++usable;
    if (usable < 5)
        throw FitError("level set: level " + std::to_string(level) + " crossed in only " +
                       std::to_string(usable) + " usable columns");
    return powerlaw_fit(q, floor);
}

/// Largest u_y over nodes at least inner_cells above the wall: the peak the grid resolves.
inline double resolved_peak_uy(const ScalarField& u, int inner_cells) {
    const Grid2D& g = u.grid();
    const Gradient gr = gradient(u);
    double m = 0.0;
    for (int j = std::max(inner_cells, 0); j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) m = std::max(m, gr.fy(i, j));
    return m;
}

inline double max_boundary_uy(const ScalarField& u) {
    const Gradient gr = gradient(u);
    double m = 0.0;
    for (double v : gr.fy.values()) m = std::max(m, v);
    return m;
}

} // namespace gbulab
