#pragma once

// Manufactured-solution convergence study for the 2d and 1d integrators.

#include "gbulab/grid.hpp"
#include "gbulab/profile_math.hpp"
#include "gbulab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace gbulab {

/// Manufactured forcing on every node of u's grid at time t < T. The x,t part
/// (H and its derivatives) is computed once per column.
inline void manufactured_forcing_field(const ManufacturedParams& mp, const ProfileConstants& pc, double t,
                                       ScalarField& out) {
    const Grid2D& g = out.grid();
    const double a = mp.alpha, beta = pc.beta, dp = pc.d_p;
    const double tau = mp.T - t;
    const bool sqrt_case = pc.p == 3.0;
    for (int i = 0; i < g.nx; ++i) {
        const double x = g.x(i), ax = std::abs(x);
        const double H = std::pow(ax, 2.0 * a) + std::pow(tau, a);
        if (H == 0.0) {
            for (int j = 0; j < g.ny; ++j) out(i, j) = manufactured_solution(mp, pc, x, g.y(j), t).forcing;
            continue;
        }
        const double sgn = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
        const double H_x = 2.0 * a * sgn * std::pow(ax, 2.0 * a - 1.0);
        const double H_xx = 2.0 * a * (2.0 * a - 1.0) * std::pow(ax, 2.0 * a - 2.0);
        const double H_t = -a * std::pow(tau, a - 1.0);
        const double Hb = std::pow(H, -beta);
        for (int j = 0; j < g.ny; ++j) {
            const double S = H + g.y(j);
            const double Sb = sqrt_case ? 1.0 / std::sqrt(S) : std::pow(S, -beta);
            const double dU = dp * (Sb - Hb);
            const double ddU = -beta * dp * (Sb / S - Hb / H);
            const double u_y = dp * Sb;
            const double u_yy = -beta * dp * Sb / S;
            const double u_x = dU * H_x;
            const double u_t = dU * H_t;
            const double u_xx = ddU * H_x * H_x + dU * H_xx;
            const double g2 = u_x * u_x + u_y * u_y;
            const double gp = sqrt_case ? g2 * std::sqrt(g2) : std::pow(g2, 0.5 * pc.p);
            out(i, j) = u_t - (u_xx + u_yy) - gp;
        }
    }
}

struct MmsLevel {
    int n = 0;
    double h = 0.0;
    double max_error = 0.0;
    long steps = 0;
    std::optional<double> order; ///< log2(e_prev / e) against the previous level
};

struct MmsStudy {
    std::vector<MmsLevel> levels;
    std::optional<double> finest_order() const {
        return levels.empty() ? std::nullopt : levels.back().order;
    }
};

/// Forced 2d problem with exact initial and boundary data on n x n grids, all
/// compared at t_end by the max nodal error.
inline MmsStudy mms_study(double p, double alpha, double T, double t_end, double Lx, double Ly,
                          const std::vector<int>& grids, double cfl_safety = 0.4,
                          SymmetryMode mode = SymmetryMode::full) {
    const ProfileConstants pc = profile_constants(p);
    const ManufacturedParams mp = make_manufactured_params(alpha, T, pc);
    if (!(t_end > 0.0 && t_end < T)) throw DomainError("mms: t_end must lie in (0, T)");
    auto exact = [&](double x, double y, double t) { return manufactured_solution(mp, pc, x, y, t).u; };

    MmsStudy study;
    for (int n : grids) {
        const Grid2D g = make_grid(Lx, Ly, n, n);
        SolverConfig cfg;
        cfg.p = p;
        cfg.cfl_safety = cfl_safety;
        cfg.t_max = t_end;
        cfg.stop_grad_norm = std::numeric_limits<double>::max();
        cfg.cascade = false;
        cfg.symmetry = mode;
        cfg.forcing_field = [&](double t, ScalarField& f) { manufactured_forcing_field(mp, pc, t, f); };
        cfg.boundary = exact;
        const ScalarField u0 = ScalarField::from_function(g, [&](double x, double y) { return exact(x, y, 0.0); });
        RunHooks hooks;
        hooks.keep_series = false;
        hooks.snapshot_initial = false;
        const RunOutcome out = run(u0, cfg, hooks);
        MmsLevel lv{n, std::min(g.hx, g.hy), 0.0, out.steps, std::nullopt};
        const ScalarField& u = out.final_state.field;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                lv.max_error = std::max(lv.max_error, std::abs(u(i, j) - exact(g.x(i), g.y(j), out.t_stop)));
        if (!study.levels.empty()) {
            const auto& prev = study.levels.back();
            if (prev.max_error > 0.0 && lv.max_error > 0.0)
                lv.order = std::log(prev.max_error / lv.max_error) / std::log(prev.h / lv.h);
        }
        study.levels.push_back(lv);
    }
    return study;
}

/// Same study for the 1d integrator along x = 0 of the manufactured family.
inline MmsStudy mms_study_1d(double p, double alpha, double T, double t_end, double Ly,
                             const std::vector<int>& grids, double cfl_safety = 0.4) {
    const ProfileConstants pc = profile_constants(p);
    const ManufacturedParams mp = make_manufactured_params(alpha, T, pc);
    auto exact = [&](double y, double t) { return manufactured_solution(mp, pc, 0.0, y, t).u; };
    MmsStudy study;
    for (int n : grids) {
        Profile1D u0{Ly, std::vector<double>(n)};
        for (int j = 0; j < n; ++j) u0.values[j] = exact(u0.y(j), 0.0);
        SolverConfig cfg;
        cfg.p = p;
        cfg.cfl_safety = cfl_safety;
        cfg.t_max = t_end;
        cfg.stop_grad_norm = std::numeric_limits<double>::max();
        // Along x = 0 the x-derivatives of the family vanish, so the 1d forcing is
        // u_t - u_yy - |u_y|^p.
        cfg.forcing = [&](double, double y, double t) {
            const auto s = manufactured_solution(mp, pc, 0.0, y, t);
            return s.u_t - s.u_yy - std::pow(std::abs(s.u_y), p);
        };
        cfg.boundary = [&](double, double y, double t) { return exact(y, t); };
        const RunOutcome1D out = run_1d(u0, cfg);
        MmsLevel lv{n, u0.h(), 0.0, out.steps, std::nullopt};
        for (int j = 0; j < n; ++j)
            lv.max_error = std::max(lv.max_error, std::abs(out.final_profile.values[j] - exact(u0.y(j), out.t_stop)));
        if (!study.levels.empty()) {
            const auto& prev = study.levels.back();
            if (prev.max_error > 0.0 && lv.max_error > 0.0)
                lv.order = std::log(prev.max_error / lv.max_error) / std::log(prev.h / lv.h);
        }
        study.levels.push_back(lv);
    }
    return study;
}

} // namespace gbulab
