#pragma once

// Explicit Heun integration of u_t = Δu + |∇u|^p (+ f) with Dirichlet data.

#include "gbulab/error.hpp"
#include "gbulab/grid.hpp"
#include "gbulab/parallel.hpp"
#include "gbulab/profile_math.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace gbulab {

enum class SymmetryMode { full, half };
enum class StopReason { blow_up_detected, horizon_reached, dt_underflow, step_limit };

inline const char* to_string(StopReason r) {
    switch (r) {
    case StopReason::blow_up_detected: return "blow_up_detected";
    case StopReason::horizon_reached: return "horizon_reached";
    case StopReason::dt_underflow: return "dt_underflow";
    case StopReason::step_limit: return "step_limit";
    }
    return "unknown";
}

inline StopReason stop_reason_from_string(const std::string& s) {
    if (s == "blow_up_detected") return StopReason::blow_up_detected;
    if (s == "horizon_reached") return StopReason::horizon_reached;
    if (s == "dt_underflow") return StopReason::dt_underflow;
    if (s == "step_limit") return StopReason::step_limit;
    throw DomainError("unknown stop reason '" + s + "'");
}

using SpaceTimeFn = std::function<double(double x, double y, double t)>;
/// Fills the source term on every node at time t; preferred over pointwise
/// forcing when the closed form factors by column.
using ForcingFieldFn = std::function<void(double t, ScalarField& f)>;

struct SolverConfig {
    double p = 3.0;
    double cfl_safety = 0.4;
    double dt_floor = 1e-16;
    double stop_grad_norm = 0.0; ///< <= 0 selects default_stop_grad_norm
    double t_max = 1.0;
    long snapshot_stride = 0;    ///< 0 disables stride snapshots
    bool cascade = true;         ///< snapshot each time grad_max crosses 2^n * initial
    long max_steps = 0;          ///< 0 = unlimited
    SpaceTimeFn forcing;         ///< optional source term
    ForcingFieldFn forcing_field; ///< whole-field alternative to `forcing`
    SpaceTimeFn boundary;        ///< optional Dirichlet data; zero when empty
    SymmetryMode symmetry = SymmetryMode::full;
};

/// Resolution-bound stop: 50 / min(hx, hy)^β.
inline double default_stop_grad_norm(double p, double hmin) {
    return 50.0 * std::pow(hmin, -1.0 / (p - 1.0));
}

inline double effective_stop_grad_norm(const SolverConfig& cfg, double hmin) {
    return cfg.stop_grad_norm > 0.0 ? cfg.stop_grad_norm : default_stop_grad_norm(cfg.p, hmin);
}

inline void validate(const SolverConfig& cfg) {
    profile_constants(cfg.p);
    if (!(cfg.cfl_safety > 0.0 && cfg.cfl_safety < 1.0))
        throw ConfigError("solver.cfl_safety", "must lie in (0, 1)");
    if (!(cfg.dt_floor > 0.0)) throw ConfigError("solver.dt_floor", "must be > 0");
    if (cfg.stop_grad_norm < 0.0 || !std::isfinite(cfg.stop_grad_norm))
        throw ConfigError("solver.stop_grad_norm", "must be > 0 (or 0 for the default)");
    if (!(cfg.t_max > 0.0)) throw ConfigError("solver.t_max", "must be > 0");
    if (cfg.snapshot_stride < 0) throw ConfigError("solver.snapshot_stride", "must be >= 0");
    if (cfg.max_steps < 0) throw ConfigError("solver.max_steps", "must be >= 0");
}

/// Step size: diffusive limit cfl·h²/4, shrunk by the cell Péclet number of the
/// transport term, whose speed is p·|∇u|^{p-1}.
inline double step_size(const SolverConfig& cfg, double hx, double hy, double grad_max) {
    const double hmin = std::min(hx, hy);
    return cfg.cfl_safety * hmin * hmin / 4.0 /
           (1.0 + cfg.p * std::pow(grad_max, cfg.p - 1.0) * hmin);
}

struct SimulationState {
    ScalarField field;
    double t = 0.0;
    long step = 0;
    double grad_max = 0.0;
    double uy_origin = 0.0;
    double dt_last = 0.0;
};

struct SeriesRow {
    double t = 0.0;
    double grad_max = 0.0;
    double uy_origin = 0.0;
    double dt = 0.0;
};

enum class SnapshotKind { initial, stride, cascade, final };

struct SnapshotRecord {
    int index = 0;
    long step = 0;
    double t = 0.0;
    double grad_max = 0.0;
    SnapshotKind kind = SnapshotKind::stride;
};

struct RunOutcome {
    StopReason reason = StopReason::horizon_reached;
    double t_stop = 0.0;
    long steps = 0;
    std::vector<SeriesRow> series;
    std::vector<SnapshotRecord> snapshots;
    SimulationState final_state;
};

namespace detail {

inline double pow_p(double g2, double p) {
    // |∇u|^p from |∇u|^2; p = 3 is the common case and sqrt is exact-rounded.
    if (p == 3.0) return g2 * std::sqrt(g2);
    return std::pow(g2, 0.5 * p);
}

inline void report_non_finite(const ScalarField& f, const char* who) {
    const long k = f.first_non_finite();
    if (k >= 0) {
        const int nx = f.grid().nx;
        const Grid2D& g = f.grid();
        const int i = static_cast<int>(k % nx), j = static_cast<int>(k / nx);
        throw NumericError(std::string(who) + ": non-finite value at node (i=" + std::to_string(i) +
                           ", j=" + std::to_string(j) + ", x=" + std::to_string(g.x(i)) +
                           ", y=" + std::to_string(g.y(j)) + ")");
    }
}

/// First column updated by the kernels: everything in full mode, x >= 0 in half mode.
inline int first_column(const Grid2D& g, SymmetryMode m) {
    return m == SymmetryMode::half ? g.center() : 1;
}

/// Copies the x >= 0 half onto x < 0.
inline void mirror_half(ScalarField& u) {
    const Grid2D& g = u.grid();
    const int c = g.center();
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < c; ++i) u(i, j) = u(g.nx - 1 - i, j);
}

inline void pin_boundary(ScalarField& u, const SolverConfig& cfg, double t) {
    const Grid2D& g = u.grid();
    auto value = [&](int i, int j) { return cfg.boundary ? cfg.boundary(g.x(i), g.y(j), t) : 0.0; };
    for (int i = 0; i < g.nx; ++i) {
        u(i, 0) = value(i, 0);
        u(i, g.ny - 1) = value(i, g.ny - 1);
    }
    for (int j = 1; j < g.ny - 1; ++j) {
        u(0, j) = value(0, j);
        u(g.nx - 1, j) = value(g.nx - 1, j);
    }
}

/// r = Δu + |∇u|^p + f on interior nodes of the active columns.
inline void rhs(const ScalarField& u, ScalarField& r, const SolverConfig& cfg, double t) {
    const Grid2D& g = u.grid();
    const double ihx2 = 1.0 / (g.hx * g.hx), ihy2 = 1.0 / (g.hy * g.hy);
    const double i2hx = 1.0 / (2.0 * g.hx), i2hy = 1.0 / (2.0 * g.hy);
    const int i0 = first_column(g, cfg.symmetry);
    const int c = g.center();
    const bool half = cfg.symmetry == SymmetryMode::half;
    std::optional<ScalarField> ff;
    if (cfg.forcing_field) {
        ff.emplace(g);
        cfg.forcing_field(t, *ff);
    }
    for_rows(1, g.ny - 1, [&](int j) {
        for (int i = i0; i < g.nx - 1; ++i) {
            const double uc = u(i, j);
            // In half mode the west neighbour of the symmetry column is its east mirror.
            const double uw = (half && i == c) ? u(i + 1, j) : u(i - 1, j);
            const double ue = u(i + 1, j);
            const double us = u(i, j - 1), un = u(i, j + 1);
            const double lap = ((uw + ue) - 2.0 * uc) * ihx2 + ((us + un) - 2.0 * uc) * ihy2;
            const double gx = (ue - uw) * i2hx;
            const double gy = (un - us) * i2hy;
            double v = lap + pow_p(gx * gx + gy * gy, cfg.p);
            if (ff)
                v += (*ff)(i, j);
            else if (cfg.forcing)
                v += cfg.forcing(g.x(i), g.y(j), t);
            r(i, j) = v;
        }
    });
}

struct GradCache {
    double grad_max = 0.0;
    double uy_origin = 0.0;
};

/// ‖∇u‖∞ with the stencils of `gradient` (one-sided on edges), and u_y(0, 0).
/// Same arithmetic as `gradient`, without materializing the fields.
inline GradCache grad_cache(const ScalarField& f) {
    const Grid2D& g = f.grid();
    const double i2hx = 1.0 / (2.0 * g.hx), i2hy = 1.0 / (2.0 * g.hy);
    const int nx = g.nx, ny = g.ny;
    GradCache gc;
    double g2max = 0.0;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            double dx, dy;
            if (i == 0)
                dx = (-3.0 * f(0, j) + 4.0 * f(1, j) - f(2, j)) * i2hx;
            else if (i == nx - 1)
                dx = (3.0 * f(nx - 1, j) - 4.0 * f(nx - 2, j) + f(nx - 3, j)) * i2hx;
            else
                dx = (f(i + 1, j) - f(i - 1, j)) * i2hx;
            if (j == 0)
                dy = (-3.0 * f(i, 0) + 4.0 * f(i, 1) - f(i, 2)) * i2hy;
            else if (j == ny - 1)
                dy = (3.0 * f(i, ny - 1) - 4.0 * f(i, ny - 2) + f(i, ny - 3)) * i2hy;
            else
                dy = (f(i, j + 1) - f(i, j - 1)) * i2hy;
            g2max = std::max(g2max, dx * dx + dy * dy);
            if (j == 0 && i == g.center()) gc.uy_origin = dy;
        }
    gc.grad_max = std::sqrt(g2max);
    return gc;
}

} // namespace detail

inline SimulationState make_state(ScalarField u0, double t = 0.0, long step = 0) {
    detail::report_non_finite(u0, "initial data");
    SimulationState s;
    s.field = std::move(u0);
    s.t = t;
    s.step = step;
    const auto gc = detail::grad_cache(s.field);
    s.grad_max = gc.grad_max;
    s.uy_origin = gc.uy_origin;
    return s;
}

/// Scratch fields reused across steps.
struct StepWorkspace {
    ScalarField r1, u1, r2, next;
};

/// One Heun step. Returns false (state untouched) if the step would fall below dt_floor.
inline bool try_step(SimulationState& s, const SolverConfig& cfg, double dt_cap = 0.0,
                     StepWorkspace* ws = nullptr) {
    const Grid2D& g = s.field.grid();
    double dt = step_size(cfg, g.hx, g.hy, s.grad_max);
    if (dt_cap > 0.0) dt = std::min(dt, dt_cap);
    if (!(dt >= cfg.dt_floor)) return false;

    StepWorkspace local;
    StepWorkspace& w = ws ? *ws : local;
    if (!(w.r1.grid() == g) || w.r1.values().size() != g.size()) w = {ScalarField(g), s.field, ScalarField(g), s.field};
    ScalarField &r1 = w.r1, &u1 = w.u1, &r2 = w.r2, &next = w.next;

    detail::rhs(s.field, r1, cfg, s.t);
    const int i0 = detail::first_column(g, cfg.symmetry);
    for (int j = 1; j < g.ny - 1; ++j)
        for (int i = i0; i < g.nx - 1; ++i) u1(i, j) = s.field(i, j) + dt * r1(i, j);
    detail::pin_boundary(u1, cfg, s.t + dt);
    detail::rhs(u1, r2, cfg, s.t + dt);
    for (int j = 1; j < g.ny - 1; ++j)
        for (int i = i0; i < g.nx - 1; ++i) next(i, j) = s.field(i, j) + 0.5 * dt * (r1(i, j) + r2(i, j));
    detail::pin_boundary(next, cfg, s.t + dt);
    if (cfg.symmetry == SymmetryMode::half) detail::mirror_half(next);
    detail::report_non_finite(next, "step");

    std::swap(s.field, next);
    s.t += dt;
    ++s.step;
    s.dt_last = dt;
    const auto gc = detail::grad_cache(s.field);
    s.grad_max = gc.grad_max;
    s.uy_origin = gc.uy_origin;
    return true;
}

inline SimulationState step(SimulationState s, const SolverConfig& cfg) {
    if (!try_step(s, cfg)) throw NumericError("step: dt below dt_floor");
    return s;
}

/// Called for every persisted snapshot; the record's index is sequential.
using SnapshotSink = std::function<void(const SimulationState&, const SnapshotRecord&)>;

struct RunHooks {
    SnapshotSink on_snapshot;
    std::function<void(const SeriesRow&)> on_series; ///< streaming alternative to RunOutcome::series
    bool keep_series = true;
    double cascade_base = 0.0; ///< initial grad_max for the 2^n cascade; <= 0 uses the start state
    int first_snapshot_index = 0;
    bool snapshot_initial = true;
    /// Called with the last good state before a NumericError propagates.
    std::function<void(const SimulationState&, const std::string&)> on_failure;
};

inline RunOutcome run(SimulationState s, const SolverConfig& cfg, const RunHooks& hooks = {}) {
    validate(cfg);
    const Grid2D& g = s.field.grid();
    if (cfg.symmetry == SymmetryMode::half) detail::mirror_half(s.field);
    const double stop = effective_stop_grad_norm(cfg, std::min(g.hx, g.hy));

    RunOutcome out;
    int next_index = hooks.first_snapshot_index;
    auto emit = [&](SnapshotKind kind) {
        SnapshotRecord rec{next_index++, s.step, s.t, s.grad_max, kind};
        out.snapshots.push_back(rec);
        if (hooks.on_snapshot) hooks.on_snapshot(s, rec);
    };
    auto record = [&] {
        SeriesRow row{s.t, s.grad_max, s.uy_origin, s.dt_last};
        if (hooks.keep_series) out.series.push_back(row);
        if (hooks.on_series) hooks.on_series(row);
    };

    const double base = hooks.cascade_base > 0.0 ? hooks.cascade_base : s.grad_max;
    double next_level = base > 0.0 ? 2.0 * base : std::numeric_limits<double>::infinity();
    while (next_level <= s.grad_max) next_level *= 2.0;

    if (hooks.snapshot_initial) {
        record();
        emit(SnapshotKind::initial);
    }
    const long start_step = s.step;
    StepWorkspace ws;
    while (true) {
        if (s.grad_max >= stop) {
            out.reason = StopReason::blow_up_detected;
            break;
        }
        if (s.t >= cfg.t_max) {
            out.reason = StopReason::horizon_reached;
            break;
        }
        if (cfg.max_steps > 0 && s.step - start_step >= cfg.max_steps) {
            out.reason = StopReason::step_limit;
            break;
        }
        // The last step is clipped to land on t_max.
        bool advanced;
        try {
            advanced = try_step(s, cfg, cfg.t_max - s.t, &ws);
        } catch (const NumericError& e) {
            if (hooks.on_failure) hooks.on_failure(s, e.what());
            throw;
        }
        if (!advanced) {
            out.reason = StopReason::dt_underflow;
            break;
        }
        record();
        bool crossed = false;
        while (cfg.cascade && s.grad_max >= next_level) {
            crossed = true;
            next_level *= 2.0;
        }
        if (crossed)
            emit(SnapshotKind::cascade);
        else if (cfg.snapshot_stride > 0 && s.step % cfg.snapshot_stride == 0)
            emit(SnapshotKind::stride);
    }
    if (out.snapshots.empty() || out.snapshots.back().step != s.step) emit(SnapshotKind::final);
    out.t_stop = s.t;
    out.steps = s.step;
    out.final_state = std::move(s);
    return out;
}

inline RunOutcome run(const ScalarField& u0, const SolverConfig& cfg, const RunHooks& hooks = {}) {
    return run(make_state(u0), cfg, hooks);
}

// ---------------------------------------------------------------------------
// 1D reduction: u_t = u_yy + |u_y|^p (+ f) on (0, Ly).

struct Profile1D {
    double Ly = 1.0;
    std::vector<double> values; ///< nodes y_j = j·Ly/(n-1)
    int n() const { return static_cast<int>(values.size()); }
    double h() const { return Ly / (n() - 1); }
    double y(int j) const { return Ly * static_cast<double>(j) / (n() - 1); }
};

struct RunOutcome1D {
    StopReason reason = StopReason::horizon_reached;
    double t_stop = 0.0;
    long steps = 0;
    std::vector<SeriesRow> series; ///< uy_origin = u_y(0)
    Profile1D final_profile;
};

namespace detail {

inline GradCache grad_cache_1d(const std::vector<double>& u, double h) {
    const int n = static_cast<int>(u.size());
    GradCache gc;
    const double i2h = 1.0 / (2.0 * h);
    for (int j = 0; j < n; ++j) {
        double d;
        if (j == 0)
            d = (-3.0 * u[0] + 4.0 * u[1] - u[2]) * i2h;
        else if (j == n - 1)
            d = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) * i2h;
        else
            d = (u[j + 1] - u[j - 1]) * i2h;
        gc.grad_max = std::max(gc.grad_max, std::abs(d));
        if (j == 0) gc.uy_origin = d;
    }
    return gc;
}

} // namespace detail

/// The end values are Dirichlet data: taken from cfg.boundary(0, y, t) when set,
/// otherwise held at their initial values.
inline RunOutcome1D run_1d(const Profile1D& u0, const SolverConfig& cfg,
                           const std::function<void(const SeriesRow&)>& on_series = {}) {
    validate(cfg);
    const int n = u0.n();
    if (n < 5) throw DomainError("run_1d: need at least 5 nodes");
    if (!(u0.Ly > 0.0)) throw DomainError("run_1d: Ly must be > 0");
    for (int j = 0; j < n; ++j) {
        if (!std::isfinite(u0.values[j]))
            throw NumericError("run_1d: non-finite initial value at node j=" + std::to_string(j));
        if (u0.values[j] < 0.0) throw DomainError("run_1d: initial data must be nonnegative");
    }
    const double h = u0.h();
    const double ih2 = 1.0 / (h * h), i2h = 1.0 / (2.0 * h);
    const double stop = effective_stop_grad_norm(cfg, h);
    const double lo0 = u0.values.front(), hi0 = u0.values.back();
    auto pin = [&](std::vector<double>& v, double t) {
        v.front() = cfg.boundary ? cfg.boundary(0.0, 0.0, t) : lo0;
        v.back() = cfg.boundary ? cfg.boundary(0.0, u0.Ly, t) : hi0;
    };
    auto rhs = [&](const std::vector<double>& v, std::vector<double>& r, double t) {
        for (int j = 1; j < n - 1; ++j) {
            const double d = (v[j + 1] - v[j - 1]) * i2h;
            double val = ((v[j - 1] + v[j + 1]) - 2.0 * v[j]) * ih2 + detail::pow_p(d * d, cfg.p);
            if (cfg.forcing) val += cfg.forcing(0.0, u0.y(j), t);
            r[j] = val;
        }
    };

    RunOutcome1D out;
    std::vector<double> u = u0.values, r1(n), r2(n), u1(n);
    double t = 0.0;
    long steps = 0;
    auto gc = detail::grad_cache_1d(u, h);
    double dt_last = 0.0;
    auto record = [&] {
        SeriesRow row{t, gc.grad_max, gc.uy_origin, dt_last};
        out.series.push_back(row);
        if (on_series) on_series(row);
    };
    record();
    while (true) {
        if (gc.grad_max >= stop) {
            out.reason = StopReason::blow_up_detected;
            break;
        }
        if (t >= cfg.t_max) {
            out.reason = StopReason::horizon_reached;
            break;
        }
        if (cfg.max_steps > 0 && steps >= cfg.max_steps) {
            out.reason = StopReason::step_limit;
            break;
        }
        const double dt = std::min(step_size(cfg, h, h, gc.grad_max), cfg.t_max - t);
        if (!(dt >= cfg.dt_floor)) {
            out.reason = StopReason::dt_underflow;
            break;
        }
        rhs(u, r1, t);
        u1 = u;
        for (int j = 1; j < n - 1; ++j) u1[j] = u[j] + dt * r1[j];
        pin(u1, t + dt);
        rhs(u1, r2, t + dt);
        for (int j = 1; j < n - 1; ++j) {
            u[j] += 0.5 * dt * (r1[j] + r2[j]);
            if (!std::isfinite(u[j]))
                throw NumericError("run_1d: non-finite value at node j=" + std::to_string(j));
        }
        pin(u, t + dt);
        t += dt;
        ++steps;
        dt_last = dt;
        gc = detail::grad_cache_1d(u, h);
        record();
    }
    out.t_stop = t;
    out.steps = steps;
    out.final_profile = Profile1D{u0.Ly, std::move(u)};
    return out;
}

} // namespace gbulab
