#include "gbulab/initial_data.hpp"
#include "gbulab/mms.hpp"
#include "gbulab/solver.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace gbulab;

namespace {

SolverConfig base_config(double t_max = 1.0) {
    SolverConfig c;
    c.p = 3.0;
    c.t_max = t_max;
    return c;
}

double max_asymmetry(const ScalarField& u) {
    const Grid2D& g = u.grid();
    double m = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) m = std::max(m, std::abs(u(i, j) - u(g.nx - 1 - i, j)));
    return m;
}

} // namespace

TEST(StepSize, Formula) {
    SolverConfig c = base_config();
    c.cfl_safety = 0.4;
    EXPECT_DOUBLE_EQ(step_size(c, 0.02, 0.01, 0.0), 0.4 * 1e-4 / 4.0);
    EXPECT_DOUBLE_EQ(step_size(c, 0.01, 0.01, 10.0), 0.4 * 1e-4 / 4.0 / (1.0 + 3.0 * 100.0 * 0.01));
    EXPECT_DOUBLE_EQ(default_stop_grad_norm(3.0, 0.01), 500.0);
}

TEST(Solver, ZeroIsFixedPoint) {
    const auto g = make_grid(0.5, 1.0, 17, 17);
    for (auto mode : {SymmetryMode::full, SymmetryMode::half}) {
        SolverConfig c = base_config(0.01);
        c.symmetry = mode;
        const auto out = run(ScalarField(g), c);
        EXPECT_EQ(out.reason, StopReason::horizon_reached);
        EXPECT_EQ(out.final_state.field.max_abs(), 0.0);
        EXPECT_EQ(out.t_stop, 0.01);
    }
    const auto o1 = run_1d(Profile1D{1.0, std::vector<double>(33, 0.0)}, base_config(0.01));
    for (double v : o1.final_profile.values) EXPECT_EQ(v, 0.0);
}

TEST(Solver, SmallDataDecays) {
    const auto g = make_grid(0.5, 1.0, 33, 33);
    SolverConfig c = base_config(0.2);
    const auto out = run(symmetric_cap(0.05, 0.5, g), c);
    EXPECT_EQ(out.reason, StopReason::horizon_reached);
    ASSERT_GE(out.series.size(), 2u);
    EXPECT_LT(out.series.back().grad_max, 0.5 * out.series.front().grad_max);
}

TEST(Solver, StopReasons) {
    const auto g = make_grid(0.5, 1.0, 17, 17);
    const auto u0 = symmetric_cap(0.5, 0.5, g);
    SolverConfig c = base_config(1.0);
    c.max_steps = 7;
    auto out = run(u0, c);
    EXPECT_EQ(out.reason, StopReason::step_limit);
    EXPECT_EQ(out.steps, 7);
    c.max_steps = 0;
    c.dt_floor = 1.0;
    out = run(u0, c);
    EXPECT_EQ(out.reason, StopReason::dt_underflow);
    EXPECT_EQ(out.steps, 0);
    c = base_config(1.0);
    c.stop_grad_norm = 1e-3;
    EXPECT_EQ(run(u0, c).reason, StopReason::blow_up_detected);
}

TEST(Solver, NonFiniteInputRejected) {
    const auto g = make_grid(0.5, 1.0, 9, 9);
    ScalarField u(g);
    u(4, 4) = INFINITY;
    EXPECT_THROW(run(u, base_config()), NumericError);
    SolverConfig c = base_config();
    c.cfl_safety = 1.5;
    EXPECT_THROW(run(ScalarField(g), c), ConfigError);
}

TEST(Solver, FullModePreservesSymmetry) {
    const auto g = make_grid(0.5, 1.0, 33, 33);
    SolverConfig c = base_config(0.05);
    c.snapshot_stride = 25;
    double worst = 0.0;
    RunHooks hooks;
    hooks.on_snapshot = [&](const SimulationState& s, const SnapshotRecord&) {
        worst = std::max(worst, max_asymmetry(s.field));
    };
    run(symmetric_cap(1.0, 0.3, g), c, hooks);
    EXPECT_LE(worst, 1e-12);
}

TEST(Solver, HalfModeMatchesFullMode) {
    const auto g = make_grid(0.5, 1.0, 33, 33);
    SolverConfig c = base_config(0.02);
    const auto u0 = symmetric_cap(1.0, 0.3, g);
    const auto full = run(u0, c);
    c.symmetry = SymmetryMode::half;
    const auto half = run(u0, c);
    ASSERT_EQ(full.steps, half.steps);
    double diff = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k)
        diff = std::max(diff, std::abs(full.final_state.field.values()[k] - half.final_state.field.values()[k]));
    EXPECT_LE(diff, 1e-12 * full.final_state.field.max_abs());
    EXPECT_EQ(full.final_state.grad_max, half.final_state.grad_max);
}

TEST(Solver, SupNormDoesNotGrow) {
    const auto g = make_grid(0.5, 1.0, 33, 33);
    const auto u0 = symmetric_cap(2.0, 0.3, g);
    // Holds while the layer is resolved (grad_max * h ~ 1); past that the
    // centered gradient overshoots at the discrete maximum.
    SolverConfig c = base_config(0.05);
    c.stop_grad_norm = 40.0;
    c.snapshot_stride = 10;
    double worst = 0.0;
    RunHooks hooks;
    hooks.on_snapshot = [&](const SimulationState& s, const SnapshotRecord&) { worst = std::max(worst, s.field.max_abs()); };
    run(u0, c, hooks);
    EXPECT_LE(worst, u0.max_abs() + 1e-8);
    EXPECT_EQ(run(u0, c).reason, StopReason::blow_up_detected);
}

TEST(Solver, BumpBlowsUpAtOrigin) {
    const auto g = make_grid(0.25, 0.25, 65, 65);
    const auto u0 = concentrated_bump({2.0, 0.1, 3.0}, g);
    SolverConfig c = base_config(0.05);
    c.symmetry = SymmetryMode::half;
    const auto out = run(u0, c);
    ASSERT_EQ(out.reason, StopReason::blow_up_detected);
    const Gradient gr = gradient(out.final_state.field);
    double best = -1.0;
    int arg = -1;
    for (int i = 0; i < g.nx; ++i)
        if (gr.fy(i, 0) > best) best = gr.fy(i, 0), arg = i;
    EXPECT_EQ(arg, g.center());
    EXPECT_EQ(out.final_state.uy_origin, best);
}

TEST(Solver, CascadeSnapshotsDoubleGradient) {
    const auto g = make_grid(0.25, 0.25, 65, 65);
    const auto u0 = concentrated_bump({2.0, 0.1, 3.0}, g);
    SolverConfig c = base_config(0.05);
    c.symmetry = SymmetryMode::half;
    const auto out = run(u0, c);
    ASSERT_GE(out.snapshots.size(), 3u);
    EXPECT_EQ(out.snapshots.front().kind, SnapshotKind::initial);
    // The n-th cascade snapshot is the first step at or above 2^n times the initial grad_max.
    const double base = out.snapshots.front().grad_max;
    double level = base;
    for (const auto& s : out.snapshots) {
        if (s.kind != SnapshotKind::cascade) continue;
        level *= 2.0;
        EXPECT_GE(s.grad_max, level);
        EXPECT_LT(s.grad_max, 2.0 * level);
    }
    EXPECT_GT(level, base);
    EXPECT_EQ(out.snapshots.back().step, out.steps);
}

TEST(Solver1D, SteadyProfileIsNearlyStationary) {
    const auto pc = profile_constants(3.0);
    double prev = 0.0;
    for (int n : {129, 257, 513}) {
        Profile1D u0{1.0, std::vector<double>(n)};
        for (int j = 0; j < n; ++j) u0.values[j] = steady_value(0.3, u0.y(j), pc);
        SolverConfig c = base_config(1.0);
        c.max_steps = 1;
        const auto out = run_1d(u0, c);
        double change = 0.0;
        for (int j = 0; j < n; ++j) change = std::max(change, std::abs(out.final_profile.values[j] - u0.values[j]));
        const double rate = change / out.t_stop; // discrete residual of the steady state
        if (prev > 0.0) { EXPECT_NEAR(prev / rate, 4.0, 0.3); }
        prev = rate;
    }
}

TEST(Solver1D, LargeSineBlowsUpAtWall) {
    const int n = 129;
    Profile1D u0{1.0, std::vector<double>(n)};
    for (int j = 0; j < n; ++j) u0.values[j] = 3.0 * std::sin(std::numbers::pi * u0.y(j));
    SolverConfig c = base_config(1.0);
    c.stop_grad_norm = 200.0;
    const auto out = run_1d(u0, c);
    ASSERT_EQ(out.reason, StopReason::blow_up_detected);
    const auto& v = out.final_profile.values;
    const double h = u0.h();
    const double wall = std::max(std::abs(-3 * v[0] + 4 * v[1] - v[2]), std::abs(3 * v[n - 1] - 4 * v[n - 2] + v[n - 3])) / (2 * h);
    EXPECT_NEAR(wall, out.series.back().grad_max, 1e-9 * wall);
}

TEST(Mms, OneDimensionalSecondOrder) {
    const auto s = mms_study_1d(3.0, 3.0, 1.0, 0.5, 1.0, {33, 65, 129});
    ASSERT_TRUE(s.finest_order().has_value());
    EXPECT_GE(*s.finest_order(), 1.7);
    EXPECT_LE(*s.finest_order(), 2.3);
}

TEST(Mms, ForcingFieldMatchesPointwise) {
    const auto pc = profile_constants(3.0);
    const auto mp = make_manufactured_params(3.0, 1.0, pc);
    const auto g = make_grid(0.5, 1.0, 17, 17);
    ScalarField f(g);
    manufactured_forcing_field(mp, pc, 0.3, f);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double ref = manufactured_solution(mp, pc, g.x(i), g.y(j), 0.3).forcing;
            EXPECT_NEAR(f(i, j), ref, 1e-12 * std::max(1.0, std::abs(ref)));
        }
}

TEST(Mms, TwoDimensionalErrorRatio) {
    const auto s = mms_study(3.0, 3.0, 1.0, 0.5, 0.5, 1.0, {33, 65});
    ASSERT_EQ(s.levels.size(), 2u);
    EXPECT_NEAR(s.levels[0].max_error / s.levels[1].max_error, 4.0, 0.6);
}
