#pragma once

// Offline diagnostics and fits over a run directory. Everything here is a pure
// function of the persisted files, so replays are byte-reproducible.

#include "gbulab/config.hpp"
#include "gbulab/diagnostics.hpp"
#include "gbulab/profile_fit.hpp"
#include "gbulab/run_directory.hpp"

#include <json.hpp>

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gbulab {

using ojson = nlohmann::ordered_json;

inline ojson to_json(const PowerLawFit& f) {
    return {{"exponent", f.exponent}, {"amplitude", f.amplitude}, {"r_squared", f.r_squared},
            {"lo", f.lo}, {"hi", f.hi}, {"n_points", f.n_points}};
}

inline ojson to_json(const MonitorEnvelope& m) {
    return {{"name", m.name}, {"evaluated", m.evaluated}, {"worst_value", m.worst_value},
            {"x", m.x}, {"y", m.y}, {"t", m.t}, {"envelope_constant", m.envelope_constant}};
}

inline ojson range_json(const Range& r) {
    if (r.n == 0) return nullptr;
    return ojson::array({r.lo, r.hi});
}

struct GateResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// Envelope history of one monitor over the snapshot sequence.
struct EnvelopeTrack {
    MonitorEnvelope worst;        ///< running extremum over the run
    double at_decade_start = 0.0; ///< running envelope at the first snapshot of the last decade
    bool evaluated = false;

    double growth() const {
        if (at_decade_start > 0.0) return worst.envelope_constant / at_decade_start - 1.0;
        return worst.envelope_constant > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
};

struct Analysis {
    ojson fits;
    ojson report;
    std::string h_table_csv;
    std::vector<std::pair<std::string, std::string>> csv_files; ///< name, content
    std::vector<GateResult> gates;
};

inline std::string samples_csv(const char* header, const std::vector<Sample>& q) {
    std::string out = std::string(header) + "\n";
    for (const auto& s : q) out += fmt_num(s.s) + ',' + fmt_num(s.v) + '\n';
    return out;
}

template <class F>
ojson try_fit(F&& f) {
    try {
        return f();
    } catch (const FitError& e) {
        return {{"error", e.what()}};
    }
}

inline bool within(double v, double target, double tol) { return std::isfinite(v) && std::abs(v - target) <= tol; }

inline std::optional<double> json_number(const ojson& j, const char* key) {
    if (!j.is_object() || !j.contains(key) || !j.at(key).is_number()) return std::nullopt;
    return j.at(key).get<double>();
}

inline Analysis analyze_1d(const RunConfig& cfg, const std::vector<SeriesRow>& series) {
    const ProfileConstants pc = profile_constants(cfg.p);
    Analysis a;
    a.fits["p"] = cfg.p;
    a.fits["mode"] = "1d";
    a.fits["time_rate"] = try_fit([&] {
        const TimeRateFit tr = fit_time_rate(series, pc);
        ojson j = to_json(tr.rate);
        j["T_hat"] = tr.T_hat;
        j["linear_r_squared"] = tr.linear_r2;
        j["window_t0"] = tr.window_t0;
        j["tail_trimmed"] = tr.tail_trimmed;
        return j;
    });
    a.report["mode"] = "1d";
    a.report["grad_max_initial"] = series.empty() ? 0.0 : series.front().grad_max;
    a.report["grad_max_final"] = series.empty() ? 0.0 : series.back().grad_max;
    if (cfg.gate_time_rate) {
        const auto e = json_number(a.fits["time_rate"], "exponent");
        const auto r2 = json_number(a.fits["time_rate"], "linear_r_squared");
        const double target = -pc.time_rate_exp;
        const bool ok = e && r2 && within(*e, target, 0.15) && *r2 >= 0.99;
        a.gates.push_back({"time_rate", ok,
                           e ? "exponent " + fmt_num(*e) + " (target " + fmt_num(target) + " +- 0.15), r2 " +
                                   fmt_num(r2.value_or(0.0))
                             : a.fits["time_rate"].value("error", std::string("fit failed"))});
    }
    return a;
}

inline Analysis analyze_2d(const RunConfig& cfg, const RunMeta& meta, const std::vector<Snapshot>& snaps,
                           const std::vector<SeriesRow>& series) {
    const ProfileConstants pc = profile_constants(cfg.p);
    if (snaps.empty()) throw IoError("meta.json", "run has no snapshots");
    const Snapshot& fin = snaps.back();
    const Grid2D& g = fin.field.grid();
    FitOptions fo;
    fo.normal_hi = cfg.normal_hi;
    fo.tangential_hi = cfg.tangential_hi;
    fo.inner_cells = cfg.inner_cells;
    fo.level_fraction = cfg.level_fraction;
    Box probe = default_probe_box(g);
    if (cfg.probe_x > 0.0) probe.x1 = cfg.probe_x;
    if (cfg.probe_y > 0.0) probe.y1 = cfg.probe_y;
    fo.aniso_x = cfg.aniso_box > 0.0 ? cfg.aniso_box : probe.x1;
    fo.aniso_y = cfg.aniso_box > 0.0 ? cfg.aniso_box : probe.y1;

    Analysis a;
    // ---- fits
    ojson& F = a.fits;
    F["p"] = cfg.p;
    F["mode"] = "2d";
    F["beta"] = pc.beta;
    F["d_p"] = pc.d_p;
    F["final_snapshot"] = meta.snapshots.back().index;
    F["t"] = fin.time;
    std::optional<PowerLawFit> tang;
    F["normal"] = try_fit([&] { return to_json(fit_normal(fin.field, pc, fo)); });
    F["tangential"] = try_fit([&] {
        tang = fit_tangential(fin.field, pc, fo);
        return to_json(*tang);
    });
    F["aniso"] = try_fit([&] {
        const AnisoFit af = fit_aniso(fin.field, pc, fo);
        return ojson{{"C1_hat", af.C1_hat}, {"residual_rel", af.residual_rel}, {"n_points", af.n_points},
                     {"x_lo", af.x_lo}, {"y_lo", af.y_lo}};
    });
    const double level = cfg.level_fraction * resolved_peak_uy(fin.field, cfg.inner_cells);
    F["level_set"] = try_fit([&] {
        ojson j = to_json(level_set_shape(fin.field, pc, level, fo, tang ? tang->lo : 0.0));
        j["level"] = level;
        return j;
    });
    std::optional<double> T_hat;
    F["time_rate"] = try_fit([&] {
        const TimeRateFit tr = fit_time_rate(series, pc);
        T_hat = tr.T_hat;
        ojson j = to_json(tr.rate);
        j["T_hat"] = tr.T_hat;
        j["linear_r_squared"] = tr.linear_r2;
        j["window_t0"] = tr.window_t0;
        j["tail_trimmed"] = tr.tail_trimmed;
        j["gated"] = false;
        return j;
    });

    a.csv_files.emplace_back("profile_normal.csv", samples_csv("y,u_y", normal_profile(fin.field)));
    a.csv_files.emplace_back("profile_tangential.csv", samples_csv("x,u_y", tangential_profile(fin.field)));
    {
        std::string ls = "x,y\n";
        try {
            for (const auto& [x, y] : level_set_curve(fin.field, level).points) ls += fmt_num(x) + ',' + fmt_num(y) + '\n';
        } catch (const FitError&) {
        }
        a.csv_files.emplace_back("profile_level_set.csv", ls);
    }

    // ---- monitors
    ojson& R = a.report;
    R["mode"] = "2d";
    ojson notices = ojson::array();
    const double g_init = meta.initial_grad_max;
    const double g_fin = meta.snapshots.back().grad_max;
    std::size_t decade_start = 0;
    while (decade_start + 1 < meta.snapshots.size() && meta.snapshots[decade_start].grad_max < g_fin / 10.0)
        ++decade_start;

    std::vector<EnvelopeTrack> tracks(6);
    double max_sup = 0.0;
    std::vector<DerivativeFields> fields;
    fields.reserve(snaps.size());
    for (std::size_t k = 0; k < snaps.size(); ++k) {
        fields.push_back(derivative_fields(snaps[k], k > 0 ? &snaps[k - 1] : nullptr));
        std::string notice;
        auto env = monitor_bounds(fields.back(), &notice);
        if (k == 0 && !notice.empty()) notices.push_back("snapshot 0: " + notice);
        env.push_back(bernstein_monitor(fields.back(), pc));
        env.push_back(sup_norm_monitor(fields.back()));
        max_sup = std::max(max_sup, env.back().envelope_constant);
        for (std::size_t m = 0; m < env.size(); ++m) {
            EnvelopeTrack& tr = tracks[m];
            if (tr.worst.name.empty()) tr.worst = env[m], tr.worst.envelope_constant = 0.0, tr.worst.evaluated = false;
            if (env[m].evaluated) {
                if (!tr.evaluated || env[m].envelope_constant > tr.worst.envelope_constant) tr.worst = env[m];
                tr.evaluated = true;
            }
            if (k == decade_start) tr.at_decade_start = tr.worst.envelope_constant;
        }
    }
    ojson envs = ojson::array();
    for (const auto& tr : tracks) {
        ojson j = to_json(tr.worst);
        j["evaluated"] = tr.evaluated;
        j["envelope_at_decade_start"] = tr.at_decade_start;
        const double gr = tr.growth();
        j["growth_last_decade"] = std::isfinite(gr) ? ojson(gr) : ojson(nullptr);
        envs.push_back(j);
    }
    R["envelopes"] = envs;
    R["grad_max_initial"] = g_init;
    R["grad_max_final"] = g_fin;
    R["grad_growth"] = g_init > 0.0 ? g_fin / g_init : 0.0;
    R["last_decade_t0"] = meta.snapshots[decade_start].t;
    R["sup_bound"] = {{"u0_sup", meta.initial_sup}, {"max_sup", max_sup},
                      {"holds", max_sup <= meta.initial_sup + 1e-8}};

    // ---- J, ξ, Θ over the late window
    const double q = cfg.j_q > 0.0 ? cfg.j_q : cfg.p;
    const double t_late = cfg.late_fraction * fin.time;
    std::vector<const DerivativeFields*> late;
    for (const auto& d : fields)
        if (d.t >= t_late) late.push_back(&d);
    const JLadderResult jl = j_ladder(late, q, pc, probe);
    R["j_ladder"] = {{"q", q},
                     {"k", jl.k ? ojson(*jl.k) : ojson(nullptr)},
                     {"m", jl.m},
                     {"max_j_at_k", jl.k ? ojson(jl.max_j_at_k) : ojson(nullptr)},
                     {"first_failing_k", jl.first_failing_k},
                     {"window_t0", t_late},
                     {"snapshots", late.size()},
                     {"probe_box", {probe.x1, probe.y1}}};
    // ξ/Θ are read above the unresolved wall layer, like the fits.
    Box xt_box = probe;
    xt_box.y0 = cfg.inner_cells * g.hy;
    Range xi_r, th_r;
    for (const auto* d : late) {
        const XiTheta xt = xi_theta_fields(*d, pc);
        const Range a1 = masked_range(xt.xi, xt_box), a2 = masked_range(xt.theta, xt_box);
        if (a1.n) xi_r.add(a1.lo), xi_r.add(a1.hi);
        if (a2.n) th_r.add(a2.lo), th_r.add(a2.hi);
    }
    R["xi_range"] = range_json(xi_r);
    R["theta_range"] = range_json(th_r);
    // The gate reads Θ on the final snapshot; the late-window range above also
    // covers the formation transient.
    const Range th_fin = masked_range(xi_theta_fields(fields.back(), pc).theta, xt_box);
    R["theta_final"] = range_json(th_fin);
    R["theta_bound"] = pc.beta + 0.2;
    R["xi_theta_y_min"] = xt_box.y0;

    // ---- modulation h
    std::vector<BoundarySlice> slices;
    for (const auto& s : snaps) slices.push_back(boundary_slice(s));
    const double hx_lo = tang ? tang->lo : cfg.inner_cells * g.hx;
    const double hx_hi = tang ? tang->hi : cfg.tangential_hi;
    const ModulationResult mod = modulation_h(slices, pc, T_hat, hx_lo, hx_hi);
    ojson mj{{"excluded_nonpositive", mod.excluded},
             {"expected_spatial_exponent", 2.0 / (1.0 - pc.beta)},
             {"expected_temporal_exponent", 1.0 / (1.0 - pc.beta)}};
    mj["spatial"] = mod.spatial ? to_json(*mod.spatial) : ojson{{"error", mod.spatial_error}};
    mj["temporal"] = mod.temporal ? to_json(*mod.temporal) : ojson{{"error", mod.temporal_error}};
    R["modulation"] = mj;
    R["notices"] = notices;
    a.h_table_csv = "t,x,h\n";
    for (const auto& r : mod.table) a.h_table_csv += fmt_num(r.t) + ',' + fmt_num(r.x) + ',' + fmt_num(r.h) + '\n';

    // ---- gates
    auto fit_err = [](const ojson& j) { return j.value("error", std::string("fit failed")); };
    if (cfg.gate_normal) {
        const auto e = json_number(F["normal"], "exponent"), A = json_number(F["normal"], "amplitude");
        const bool ok = e && A && within(*e, -pc.beta, 0.05) && within(*A / pc.d_p, 1.0, 0.15);
        a.gates.push_back({"normal", ok,
                           e ? "exponent " + fmt_num(*e) + " (target " + fmt_num(-pc.beta) + " +- 0.05), amplitude/d_p " +
                                   fmt_num(*A / pc.d_p) + " (1 +- 0.15)"
                             : fit_err(F["normal"])});
    }
    if (cfg.gate_tangential) {
        const auto e = json_number(F["tangential"], "exponent");
        const double target = -pc.tangential_exp, tol = 0.2 * pc.tangential_exp;
        a.gates.push_back({"tangential", e && within(*e, target, tol),
                           e ? "exponent " + fmt_num(*e) + " (target " + fmt_num(target) + " +- " + fmt_num(tol) + ")"
                             : fit_err(F["tangential"])});
    }
    if (cfg.gate_aniso) {
        const auto e = json_number(F["level_set"], "exponent");
        const auto r = json_number(F["aniso"], "residual_rel");
        const double target = pc.anisotropy_exp, tol = 0.25 * pc.anisotropy_exp;
        a.gates.push_back({"level_set", e && within(*e, target, tol),
                           e ? "exponent " + fmt_num(*e) + " (target " + fmt_num(target) + " +- " + fmt_num(tol) + ")"
                             : fit_err(F["level_set"])});
        a.gates.push_back({"aniso", r && *r <= 0.35,
                           r ? "residual_rel " + fmt_num(*r) + " (<= 0.35)" : fit_err(F["aniso"])});
    }
    if (cfg.gate_monitors) {
        bool ok = true;
        std::string detail;
        for (const auto& tr : tracks) {
            const double gr = tr.growth();
            const bool pass = tr.evaluated && gr < 0.10;
            ok = ok && pass;
            detail += tr.worst.name + " growth " + (std::isfinite(gr) ? fmt_num(gr) : std::string("inf")) + "; ";
        }
        const double growth = g_init > 0.0 ? g_fin / g_init : 0.0;
        ok = ok && growth >= 1e3 && max_sup <= meta.initial_sup + 1e-8;
        detail += "grad_max growth " + fmt_num(growth) + " (>= 1000); sup " + fmt_num(max_sup) + " vs u0 " +
                  fmt_num(meta.initial_sup);
        a.gates.push_back({"monitors", ok, detail});
    }
    if (cfg.gate_j) {
        const bool ok = jl.k.has_value() && th_fin.n > 0 && th_fin.hi <= pc.beta + 0.2;
        a.gates.push_back({"j_sign", ok,
                           std::string("k ") + (jl.k ? fmt_num(*jl.k) : std::string("none")) +
                               ", final-snapshot max Theta " + (th_fin.n ? fmt_num(th_fin.hi) : std::string("n/a")) +
                               " (<= " + fmt_num(pc.beta + 0.2) + ")"});
    }
    return a;
}

inline void add_reason_gate(Analysis& a, const RunConfig& cfg, const RunMeta& meta) {
    if (!cfg.gate_reason || cfg.expect_reason.empty()) return;
    const std::string got = meta.reason ? to_string(*meta.reason) : std::string("none");
    a.gates.push_back({"reason", got == cfg.expect_reason, got + " (expected " + cfg.expect_reason + ")"});
}

/// Reads config, meta, series and snapshots from `dir` and recomputes everything.
inline Analysis analyze_run(const fs::path& dir) {
    const RunMeta meta = read_meta(dir);
    if (meta.status != "complete") throw IoError((dir / "meta.json").string(), "run is not complete");
    RunConfig cfg;
    try {
        cfg = parse_config(meta.config_text);
    } catch (const ConfigError& e) {
        throw IoError((dir / "meta.json").string(), std::string("embedded config invalid: ") + e.what());
    }
    const auto series = read_series(dir / "series.csv");
    Analysis a;
    if (cfg.mode == "1d") {
        a = analyze_1d(cfg, series);
    } else {
        const auto snaps = load_snapshots(dir, meta);
        a = analyze_2d(cfg, meta, snaps, series);
    }
    add_reason_gate(a, cfg, meta);
    return a;
}

inline std::string fits_text(const Analysis& a) { return a.fits.dump(2) + "\n"; }
inline std::string report_text(const Analysis& a) { return a.report.dump(2) + "\n"; }

inline void write_analysis(const fs::path& dir, const Analysis& a) {
    write_file(dir / "fits.json", fits_text(a));
    write_file(dir / "report.json", report_text(a));
    if (!a.h_table_csv.empty()) write_file(dir / "h_table.csv", a.h_table_csv);
    for (const auto& [name, content] : a.csv_files) write_file(dir / name, content);
}

} // namespace gbulab
