#pragma once

// Closed-form layer for u_t - Δu = |∇u|^p, p > 2.
//
// Every function here is pure. Derivatives are hand-derived; residual checks
// built on them carry no discretization error.

#include "gbulab/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace gbulab {

/// Constants attached to the exponent p.
struct ProfileConstants {
    double p = 0.0;
    double beta = 0.0;           ///< 1/(p-1)
    double d_p = 0.0;            ///< beta^beta
    double c_p = 0.0;            ///< d_p / (1-beta)
    double k_id = 0.0;           ///< (p-2)/(p-1), concentration power of the bump datum
    double tangential_exp = 0.0; ///< 2/(p-2)
    double anisotropy_exp = 0.0; ///< 2(p-1)/(p-2)
    double time_rate_exp = 0.0;  ///< 1/(p-2)
};

inline ProfileConstants profile_constants(double p) {
    if (!(p > 2.0) || !std::isfinite(p))
        throw DomainError("supercritical exponent required (p > 2), got p = " + std::to_string(p));
    ProfileConstants pc;
    pc.p = p;
    pc.beta = 1.0 / (p - 1.0);
    pc.d_p = std::pow(pc.beta, pc.beta);
    pc.c_p = pc.d_p / (1.0 - pc.beta);
    pc.k_id = (p - 2.0) / (p - 1.0);
    pc.tangential_exp = 2.0 / (p - 2.0);
    pc.anisotropy_exp = 2.0 * (p - 1.0) / (p - 2.0);
    pc.time_rate_exp = 1.0 / (p - 2.0);
    return pc;
}

// ---------------------------------------------------------------------------
// Steady states V_a(y) = V(y+a) - V(a), V(y) = c_p y^{1-beta}.

struct SteadySample {
    double value = 0.0;
    double first = 0.0;  ///< V_a'
    double second = 0.0; ///< V_a''
};

inline double steady_value(double a, double y, const ProfileConstants& pc) {
    if (a < 0.0 || y < 0.0) throw DomainError("steady_state: a and y must be >= 0");
    return pc.c_p * (std::pow(y + a, 1.0 - pc.beta) - std::pow(a, 1.0 - pc.beta));
}

/// Satisfies -V_a'' = (V_a')^p identically.
inline SteadySample steady_state(double a, double y, const ProfileConstants& pc) {
    if (a < 0.0 || y < 0.0) throw DomainError("steady_state: a and y must be >= 0");
    if (a + y == 0.0) throw SingularityError("steady_state: derivatives singular at a = y = 0");
    const double s = y + a;
    const double ds = pc.d_p * std::pow(s, -pc.beta);
    return {steady_value(a, y, pc), ds, -pc.beta * ds / s};
}

// ---------------------------------------------------------------------------
// Anisotropic final-profile model d_p [y + C1 |x|^{2(p-1)/(p-2)}]^{-beta}.

inline double final_profile_model(const ProfileConstants& pc, double C1, double x, double y) {
    if (!(C1 > 0.0)) throw DomainError("final_profile_model: C1 must be > 0");
    if (y < 0.0) throw DomainError("final_profile_model: y must be >= 0");
    if (x == 0.0 && y == 0.0) throw SingularityError("final_profile_model: singular at the origin");
    return pc.d_p * std::pow(y + C1 * std::pow(std::abs(x), pc.anisotropy_exp), -pc.beta);
}

// ---------------------------------------------------------------------------
// Regularizing barrier
//   z = c_p[(y+phi)^{1-beta} - phi^{1-beta}] - kappa y^2/2,
//   phi = eta (t-t0)^{1/(1-beta)} ((r^2-(x-x0)^2)/r)^{2/(1-beta)}.
// phi^{1-beta} = eta^{1-beta} (t-t0) w^2 with w = (r^2-(x-x0)^2)/r is used
// throughout so that phi^{-beta} phi_x stays finite where phi vanishes.

struct BarrierParams {
    double x0 = 0.0;
    double r = 0.0;
    double d = 0.0;
    double t0 = 0.0;
    double T = 0.0;
    double eta = 0.0;
    double C0 = 0.0;    ///< calibrated multiplier in kappa
    double kappa = 0.0; ///< C0 eta^{1-beta} (r^2 + T - t0)
};

inline double barrier_kappa(double C0, double eta, double r, double T, double t0,
                            const ProfileConstants& pc) {
    return C0 * std::pow(eta, 1.0 - pc.beta) * (r * r + T - t0);
}

inline BarrierParams make_barrier_params(double x0, double r, double d, double t0, double T,
                                         double eta, double C0, const ProfileConstants& pc) {
    if (!(r > 0.0 && r < 1.0)) throw DomainError("barrier: r must lie in (0,1)");
    if (!(d > 0.0 && d < 1.0)) throw DomainError("barrier: d must lie in (0,1)");
    if (!(eta > 0.0 && eta < 1.0)) throw DomainError("barrier: eta must lie in (0,1)");
    if (!(t0 < T)) throw DomainError("barrier: t0 must be < T");
    if (!(C0 > 0.0)) throw DomainError("barrier: C0 must be > 0");
    BarrierParams bp{x0, r, d, t0, T, eta, C0, 0.0};
    bp.kappa = barrier_kappa(C0, eta, r, T, t0, pc);
    return bp;
}

struct BarrierSample {
    double z = 0.0;
    double z_x = 0.0;
    double z_y = 0.0;
    double z_t = 0.0;
    double laplacian = 0.0;
    double residual = 0.0; ///< z_t - Δz - |∇z|^p
};

namespace detail {

inline void check_barrier_box(const BarrierParams& bp, double x, double y, double t) {
    if (std::abs(x - bp.x0) > bp.r * (1.0 + 1e-12) || y < 0.0 || y > bp.d || t < bp.t0 || t >= bp.T)
        throw DomainError("barrier: point outside (x0-r,x0+r) x [0,d] x [t0,T)");
}

} // namespace detail

inline double barrier_value(const BarrierParams& bp, const ProfileConstants& pc, double x,
                            double y, double t) {
    detail::check_barrier_box(bp, x, y, t);
    const double xi = x - bp.x0;
    const double w = (bp.r * bp.r - xi * xi) / bp.r;
    const double G = std::pow(bp.eta, 1.0 - pc.beta) * (t - bp.t0) * w * w;
    const double phi = std::pow(G, 1.0 / (1.0 - pc.beta));
    return pc.c_p * (std::pow(y + phi, 1.0 - pc.beta) - G) - 0.5 * bp.kappa * y * y;
}

inline BarrierSample barrier_eval(const BarrierParams& bp, const ProfileConstants& pc, double x,
                                  double y, double t) {
    detail::check_barrier_box(bp, x, y, t);
    const double beta = pc.beta;
    const double m = 1.0 / (1.0 - beta);
    const double eb = std::pow(bp.eta, 1.0 - beta);
    const double s = t - bp.t0;
    const double xi = x - bp.x0;
    const double w = (bp.r * bp.r - xi * xi) / bp.r;
    const double w_x = -2.0 * xi / bp.r;
    const double w_xx = -2.0 / bp.r;

    const double G = eb * s * w * w;
    const double G_t = eb * w * w;
    const double G_x = 2.0 * eb * s * w * w_x;
    const double G_xx = 2.0 * eb * s * (w_x * w_x + w * w_xx);

    const double phi = std::pow(G, m);
    const double Gm1 = std::pow(G, m - 1.0);
    const double phi_t = m * Gm1 * G_t;
    const double phi_x = m * Gm1 * G_x;
    const double phi_xx =
        m * Gm1 * G_xx + (G > 0.0 ? m * (m - 1.0) * std::pow(G, m - 2.0) * G_x * G_x : 0.0);

    const double A = y + phi;
    if (!(A > 0.0)) throw SingularityError("barrier: derivatives singular where y + phi = 0");
    const double Ab = std::pow(A, -beta);

    BarrierSample out;
    out.z = pc.c_p * (std::pow(A, 1.0 - beta) - G) - 0.5 * bp.kappa * y * y;
    out.z_t = pc.d_p * Ab * phi_t - pc.c_p * G_t;
    out.z_x = pc.d_p * Ab * phi_x - pc.c_p * G_x;
    out.z_y = pc.d_p * Ab - bp.kappa * y;
    const double z_xx = pc.d_p * (Ab * phi_xx - beta * Ab / A * phi_x * phi_x) - pc.c_p * G_xx;
    const double z_yy = -beta * pc.d_p * Ab / A - bp.kappa;
    out.laplacian = z_xx + z_yy;
    out.residual =
        out.z_t - out.laplacian - std::pow(out.z_x * out.z_x + out.z_y * out.z_y, 0.5 * pc.p);
    return out;
}

/// Sampling lattice for the barrier residual: x over [x0-r, x0+r], y over (0, d]
/// (the y = 0 plane is excluded, z vanishes there), t over [t0, T).
struct BarrierLattice {
    int nx = 50;
    int ny = 50;
    int nt = 20;
};

struct ResidualScan {
    double min_residual = std::numeric_limits<double>::infinity();
    double x = 0.0, y = 0.0, t = 0.0; ///< location of the minimum
    double max_abs_z_on_floor = 0.0;  ///< max |z| on the y = 0 plane
    long samples = 0;
};

inline ResidualScan scan_barrier_residual(const BarrierParams& bp, const ProfileConstants& pc,
                                          const BarrierLattice& lat = {}) {
    ResidualScan scan;
    for (int k = 0; k < lat.nt; ++k) {
        const double t = bp.t0 + (bp.T - bp.t0) * k / lat.nt;
        for (int i = 0; i < lat.nx; ++i) {
            const double x =
                lat.nx == 1 ? bp.x0 : bp.x0 - bp.r + 2.0 * bp.r * i / (lat.nx - 1);
            scan.max_abs_z_on_floor =
                std::max(scan.max_abs_z_on_floor, std::abs(barrier_value(bp, pc, x, 0.0, t)));
            for (int j = 1; j <= lat.ny; ++j) {
                const double y = bp.d * j / lat.ny;
                const double res = barrier_eval(bp, pc, x, y, t).residual;
                ++scan.samples;
                if (res < scan.min_residual) {
                    scan.min_residual = res;
                    scan.x = x;
                    scan.y = y;
                    scan.t = t;
                }
            }
        }
    }
    return scan;
}

struct BarrierCalibration {
    double C0 = 0.0;
    int ladder_exponent = 0; ///< C0 = 2^ladder_exponent
    BarrierParams params;
    ResidualScan scan;
};

/// Smallest power-of-two C0 for which the sampled residual is nonnegative.
/// Returns nullopt if no rung in [2^lo, 2^hi] works.
inline std::optional<BarrierCalibration>
calibrate_barrier(double x0, double r, double d, double t0, double T, double eta,
                  const ProfileConstants& pc, const BarrierLattice& lat = {}, int lo = -30,
                  int hi = 30) {
    for (int e = lo; e <= hi; ++e) {
        const double C0 = std::ldexp(1.0, e);
        const BarrierParams bp = make_barrier_params(x0, r, d, t0, T, eta, C0, pc);
        const ResidualScan scan = scan_barrier_residual(bp, pc, lat);
        if (scan.min_residual >= 0.0) return BarrierCalibration{C0, e, bp, scan};
    }
    return std::nullopt;
}

struct EtaLadderResult {
    std::vector<double> passed;
    std::optional<double> first_failing;
    std::optional<ResidualScan> failing_scan;
};

/// With C0 held fixed, doubles eta from eta_start until the residual check
/// fails or eta reaches 1.
inline EtaLadderResult eta_ladder(double x0, double r, double d, double t0, double T,
                                  double eta_start, double C0, const ProfileConstants& pc,
                                  const BarrierLattice& lat = {}) {
    EtaLadderResult out;
    for (double eta = eta_start; eta < 1.0; eta *= 2.0) {
        const BarrierParams bp = make_barrier_params(x0, r, d, t0, T, eta, C0, pc);
        ResidualScan scan = scan_barrier_residual(bp, pc, lat);
        if (scan.min_residual >= 0.0) {
            out.passed.push_back(eta);
        } else {
            out.first_failing = eta;
            out.failing_scan = scan;
            break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Manufactured family
//   u = c_p[(H + y)^{1-beta} - H^{1-beta}],  H = |x|^{2 alpha} + (T-t)^alpha,
// an exact solution of u_t - Δu = |∇u|^p + f with bounded f.

struct ManufacturedParams {
    double alpha = 0.0;
    double T = 0.0;
    double c_p = 0.0;
};

inline ManufacturedParams make_manufactured_params(double alpha, double T,
                                                   const ProfileConstants& pc) {
    const double alpha_min = (pc.p - 1.0) / (pc.p - 2.0);
    if (alpha < alpha_min * (1.0 - 1e-14))
        throw DomainError("manufactured: alpha must be >= (p-1)/(p-2) = " +
                          std::to_string(alpha_min));
    if (!(T > 0.0)) throw DomainError("manufactured: T must be > 0");
    return {alpha, T, pc.c_p};
}

struct ManufacturedSample {
    double u = 0.0;
    double u_x = 0.0;
    double u_y = 0.0;
    double u_t = 0.0;
    double u_xx = 0.0;
    double u_yy = 0.0;
    double laplacian = 0.0;
    double forcing = 0.0; ///< u_t - Δu - |∇u|^p
};

inline ManufacturedSample manufactured_solution(const ManufacturedParams& mp,
                                                const ProfileConstants& pc, double x, double y,
                                                double t) {
    if (y < 0.0) throw DomainError("manufactured: y must be >= 0");
    if (t > mp.T) throw DomainError("manufactured: t must be <= T");
    const double beta = pc.beta;
    const double a = mp.alpha;
    const double ax = std::abs(x);
    const double tau = mp.T - t;
    const double H = std::pow(ax, 2.0 * a) + std::pow(tau, a);

    ManufacturedSample s;
    if (H == 0.0) {
        // x = 0, t = T: one-sided limits along x = 0 (u_t) and t = T (u_xx).
        if (y == 0.0) throw SingularityError("manufactured: singular point (0,0,T)");
        s.u = pc.c_p * std::pow(y, 1.0 - beta);
        s.u_y = pc.d_p * std::pow(y, -beta);
        s.u_yy = -beta * s.u_y / y;
        const bool critical = std::abs(a * (1.0 - beta) - 1.0) < 1e-12;
        s.u_t = critical ? pc.d_p * a : 0.0;
        s.u_xx = critical ? -2.0 * a * pc.d_p : 0.0;
    } else {
        const double sgn = x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
        const double H_x = 2.0 * a * sgn * std::pow(ax, 2.0 * a - 1.0);
        const double H_xx = 2.0 * a * (2.0 * a - 1.0) * std::pow(ax, 2.0 * a - 2.0);
        const double H_t = -a * std::pow(tau, a - 1.0);
        const double S = H + y;
        const double Sb = std::pow(S, -beta);
        const double Hb = std::pow(H, -beta);
        const double dU = pc.d_p * (Sb - Hb);                           // du/dH
        const double ddU = -beta * pc.d_p * (Sb / S - Hb / H);           // d2u/dH2
        s.u = pc.c_p * (std::pow(S, 1.0 - beta) - std::pow(H, 1.0 - beta));
        s.u_y = pc.d_p * Sb;
        s.u_yy = -beta * pc.d_p * Sb / S;
        s.u_x = dU * H_x;
        s.u_t = dU * H_t;
        s.u_xx = ddU * H_x * H_x + dU * H_xx;
    }
    s.laplacian = s.u_xx + s.u_yy;
    s.forcing = s.u_t - s.laplacian - std::pow(s.u_x * s.u_x + s.u_y * s.u_y, 0.5 * pc.p);
    return s;
}

// ---------------------------------------------------------------------------
// J = u_x + k x y^{-q(1-beta)} (1+y) u^q, whose nonpositivity near the
// singularity encodes the tangential decay.

struct JParams {
    double k = 0.0;
    double q = 0.0;
    double gamma = 0.0; ///< q (1-beta)
};

inline JParams make_jparams(double k, double q, const ProfileConstants& pc) {
    if (!(k > 0.0 && k < 1.0)) throw DomainError("J: k must lie in (0,1)");
    if (!(q > pc.p - 1.0)) throw DomainError("J: q must exceed p-1");
    return {k, q, q * (1.0 - pc.beta)};
}

inline double j_model(const JParams& jp, const ProfileConstants& /*pc*/, double u, double u_x,
                      double x, double y) {
    if (x < 0.0) throw DomainError("J: x must be >= 0");
    if (u < 0.0) throw DomainError("J: u must be >= 0");
    if (!(y > 0.0)) throw SingularityError("J: weight y^{-gamma} diverges at y = 0");
    return u_x + jp.k * x * std::pow(y, -jp.gamma) * (1.0 + y) * std::pow(u, jp.q);
}

} // namespace gbulab
