#include "gbulab/initial_data.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace gbulab;

namespace {

void expect_admissible(const ScalarField& u) {
    const Grid2D& g = u.grid();
    const Gradient gr = gradient(u);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            EXPECT_EQ(u(i, j), u(g.nx - 1 - i, j)) << i << ',' << j;
            EXPECT_GE(u(i, j), 0.0);
            if (g.on_boundary(i, j)) { EXPECT_EQ(u(i, j), 0.0); }
            EXPECT_LE(g.x(i) * gr.fx(i, j), 1e-12) << i << ',' << j;
        }
}

} // namespace

TEST(Bump, Cutoff) {
    EXPECT_EQ(bump_cutoff(0.0), 1.0);
    EXPECT_EQ(bump_cutoff(0.25), 1.0);
    EXPECT_EQ(bump_cutoff(0.5), 0.0);
    EXPECT_EQ(bump_cutoff(2.0), 0.0);
    double prev = 1.0;
    for (double s = 0.25; s <= 0.5; s += 0.01) {
        EXPECT_LE(bump_cutoff(s), prev);
        prev = bump_cutoff(s);
    }
}

TEST(Bump, CenterValueAndSupport) {
    // y = eps is a node of this grid.
    const auto g = make_grid(0.1, 0.16, 81, 81); // hy = 0.002, hx = 0.0025
    const double eps = 0.04;
    const auto u = concentrated_bump({1.0, eps, 3.0}, g);
    const int jc = static_cast<int>(std::lround(eps / g.hy));
    EXPECT_NEAR(u(g.center(), jc), 0.2, 1e-14);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double r = std::hypot(g.x(i), g.y(j) - eps);
            if (r >= eps / 2) { EXPECT_EQ(u(i, j), 0.0); }
        }
    expect_admissible(u);
}

TEST(Bump, ResolutionRequirement) {
    const auto g = make_grid(0.5, 1.0, 33, 33);
    try {
        concentrated_bump({1.0, 0.1, 3.0}, g);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.path(), "grid");
        EXPECT_NE(std::string(e.what()).find("0.0125"), std::string::npos) << e.what();
    }
}

TEST(Cap, ZeroAmplitudeIsZero) {
    const auto g = make_grid(0.5, 1.0, 33, 33);
    EXPECT_EQ(symmetric_cap(0.0, 0.25, g).max_abs(), 0.0);
}

TEST(Cap, PeakAndAdmissibility) {
    const auto g = make_grid(0.5, 1.0, 65, 65);
    const auto u = symmetric_cap(1.7, 0.3, g);
    EXPECT_NEAR(u(g.center(), 32), 1.7, 1e-15);
    EXPECT_NEAR(u.max_abs(), 1.7, 1e-15);
    expect_admissible(u);
    EXPECT_THROW(symmetric_cap(1.0, 0.6, g), ConfigError);
}
