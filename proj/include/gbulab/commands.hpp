#pragma once

// Subcommand implementations. Each returns a process exit code:
//   0 ok, 1 gate failure / replay mismatch, 2 bad config, 3 numeric failure,
//   4 MMS order below threshold, 5 corrupt run directory.

#include "gbulab/analysis.hpp"
#include "gbulab/config.hpp"
#include "gbulab/initial_data.hpp"
#include "gbulab/mms.hpp"
#include "gbulab/profile_math.hpp"
#include "gbulab/run_directory.hpp"
#include "gbulab/solver.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace gbulab {

enum ExitCode : int { exit_ok = 0, exit_gate = 1, exit_config = 2, exit_numeric = 3, exit_order = 4, exit_corrupt = 5 };

inline ScalarField initial_field(const RunConfig& c) {
    const Grid2D g = make_grid(c.Lx, c.Ly, c.nx, c.ny);
    if (c.family == "bump") return concentrated_bump({c.amplitude, c.epsilon, c.p}, g);
    return symmetric_cap(c.amplitude, c.width, g);
}

inline Profile1D initial_profile(const RunConfig& c) {
    Profile1D u{c.Ly, std::vector<double>(c.ny)};
    for (int j = 0; j < c.ny; ++j) {
        const double y = u.y(j);
        u.values[j] = c.family == "ramp" ? c.amplitude * y / c.Ly : c.amplitude * std::sin(std::numbers::pi * y / c.Ly);
    }
    u.values.back() = c.family == "ramp" ? c.amplitude : 0.0;
    return u;
}

inline void print_gates(std::ostream& out, const std::vector<GateResult>& gates) {
    for (const auto& g : gates) out << (g.pass ? "PASS " : "FAIL ") << g.name << ": " << g.detail << '\n';
}

inline bool all_pass(const std::vector<GateResult>& gates) {
    return std::all_of(gates.begin(), gates.end(), [](const GateResult& g) { return g.pass; });
}

inline void run_1d_to_directory(const fs::path& dir, const RunConfig& cfg, const Profile1D& u0) {
    fs::create_directories(dir);
    RunMeta meta;
    meta.config_text = serialize_config(cfg);
    meta.initial_sup = *std::max_element(u0.values.begin(), u0.values.end());
    write_file(dir / "config.txt", meta.config_text);
    const SolverConfig sc = solver_config(cfg);
    meta.stop_grad_norm = effective_stop_grad_norm(sc, u0.h());
    std::ofstream series(dir / "series.csv", std::ios::trunc | std::ios::binary);
    if (!series) throw IoError((dir / "series.csv").string(), "cannot open for writing");
    series << series_header();
    bool first = true;
    RunOutcome1D out;
    try {
        out = run_1d(u0, sc, [&](const SeriesRow& r) {
            if (first) meta.initial_grad_max = r.grad_max, first = false;
            series << series_line(r);
        });
    } catch (const NumericError& e) {
        series.close();
        meta.status = "failed";
        meta.failure = e.what();
        write_meta(dir, meta);
        throw;
    }
    series.close();
    std::string prof = "y,u\n";
    for (int j = 0; j < out.final_profile.n(); ++j)
        prof += fmt_num(out.final_profile.y(j)) + ',' + fmt_num(out.final_profile.values[j]) + '\n';
    write_file(dir / "profile_final.csv", prof);
    meta.status = "complete";
    meta.reason = out.reason;
    meta.t_stop = out.t_stop;
    meta.steps = out.steps;
    write_meta(dir, meta);
}

/// `run`: simulate, then analyze. Config problems are reported before the
/// directory is created.
inline int cmd_run(const std::string& config_path, const fs::path& dir, std::ostream& out, std::ostream& err,
                   bool resume = false) {
    RunConfig cfg;
    std::optional<ScalarField> u0;
    std::optional<Profile1D> v0;
    try {
        cfg = load_config(config_path);
        if (cfg.mode == "2d")
            u0 = initial_field(cfg);
        else
            v0 = initial_profile(cfg);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const Error& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config;
    }
    if (resume && cfg.mode == "1d") {
        err << "resume is only supported for 2d runs\n";
        return exit_config;
    }
    try {
        if (u0) {
            const RunOutcome o = run_to_directory(dir, cfg, *u0, resume);
            out << "reason " << to_string(o.reason) << ", t_stop " << fmt_num(o.t_stop) << ", steps " << o.steps
                << '\n';
        } else {
            run_1d_to_directory(dir, cfg, *v0);
            const RunMeta m = read_meta(dir);
            out << "reason " << to_string(*m.reason) << ", t_stop " << fmt_num(m.t_stop) << ", steps " << m.steps
                << '\n';
        }
    } catch (const NumericError& e) {
        const fs::path dump = cfg.mode == "2d" ? dir / "failure_state.bin" : dir / "meta.json";
        err << "numeric failure: " << e.what() << "\nstate dump: " << dump.string() << '\n';
        return exit_numeric;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << '\n';
        return exit_corrupt;
    }
    try {
        const Analysis a = analyze_run(dir);
        write_analysis(dir, a);
        print_gates(out, a.gates);
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << '\n';
        return exit_corrupt;
    }
    out << "run directory: " << dir.string() << '\n';
    return exit_ok;
}

/// `fit`: recompute every analysis file of an existing run.
inline int cmd_fit(const fs::path& dir, std::ostream& out, std::ostream& err) {
    try {
        const Analysis a = analyze_run(dir);
        write_analysis(dir, a);
        out << a.fits.dump(2) << '\n';
        return exit_ok;
    } catch (const IoError& e) {
        err << "corrupt run: " << e.what() << '\n';
        return exit_corrupt;
    }
}

/// `check`: deterministic replay. A missing fits.json is regenerated; an
/// existing one must match byte for byte. Exit 0 iff replay matches and every
/// enabled gate passes.
inline int cmd_check(const fs::path& dir, std::ostream& out, std::ostream& err) {
    Analysis a;
    try {
        a = analyze_run(dir);
    } catch (const IoError& e) {
        err << "corrupt run: " << e.what() << '\n';
        return exit_corrupt;
    }
    const std::string fresh = fits_text(a);
    const fs::path fits_path = dir / "fits.json";
    bool replay_ok = true;
    if (!fs::exists(fits_path)) {
        write_file(fits_path, fresh);
        out << "fits.json regenerated\n";
    } else {
        try {
            replay_ok = read_file(fits_path) == fresh;
        } catch (const IoError& e) {
            err << "corrupt run: " << e.what() << '\n';
            return exit_corrupt;
        }
        out << (replay_ok ? "PASS replay: fits.json byte-identical\n" : "FAIL replay: fits.json differs\n");
    }
    print_gates(out, a.gates);
    return replay_ok && all_pass(a.gates) ? exit_ok : exit_gate;
}

inline bool mms_order_gated(const RunConfig& c) {
    // At alpha = (p-1)/(p-2) the exact solution loses u_xx continuity, so the
    // study is reported without an order gate.
    return c.mms_alpha > (c.p - 1.0) / (c.p - 2.0) * (1.0 + 1e-12);
}

/// `mms`: convergence table for the manufactured family.
inline int cmd_mms(const std::string& config_path, std::ostream& out, std::ostream& err) {
    RunConfig c;
    try {
        c = load_config(config_path);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config;
    }
    MmsStudy s;
    try {
        if (c.mode == "2d")
            s = mms_study(c.p, c.mms_alpha, c.mms_T, c.mms_t_end, c.Lx, c.Ly, c.mms_grids, c.cfl_safety,
                          c.symmetry_mode == "half" ? SymmetryMode::half : SymmetryMode::full);
        else
            s = mms_study_1d(c.p, c.mms_alpha, c.mms_T, c.mms_t_end, c.Ly, c.mms_grids, c.cfl_safety);
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << '\n';
        return exit_numeric;
    }
    out << "n,h,steps,max_error,order\n";
    for (const auto& lv : s.levels)
        out << lv.n << ',' << fmt_num(lv.h) << ',' << lv.steps << ',' << fmt_num(lv.max_error) << ','
            << (lv.order ? fmt_num(*lv.order) : std::string("")) << '\n';
    if (!mms_order_gated(c)) {
        out << "alpha at the regularity threshold: order not gated\n";
        return exit_ok;
    }
    const auto ord = s.finest_order();
    if (!ord || *ord < c.mms_min_order) {
        err << "convergence failure: finest order " << (ord ? fmt_num(*ord) : std::string("n/a")) << " < "
            << fmt_num(c.mms_min_order) << '\n';
        return exit_order;
    }
    return exit_ok;
}

struct BarrierArgs {
    double p = 3.0;
    double x0 = 0.0, r = 0.5, d = 0.5, t0 = 0.0, T = 1.0, eta = 0.1;
    BarrierLattice lattice;
    bool ladder = false;
};

/// `barrier`: calibrate C0 for the supersolution and report the sampled residual.
inline int cmd_barrier(const BarrierArgs& a, std::ostream& out, std::ostream& err) {
    const ProfileConstants pc = profile_constants(a.p);
    std::optional<BarrierCalibration> cal;
    try {
        cal = calibrate_barrier(a.x0, a.r, a.d, a.t0, a.T, a.eta, pc, a.lattice);
    } catch (const DomainError& e) {
        err << "invalid barrier parameters: " << e.what() << '\n';
        return exit_config;
    }
    if (!cal) {
        out << "no C0 in [2^-30, 2^30] gives a nonnegative residual\n";
        return exit_gate;
    }
    const ResidualScan& s = cal->scan;
    out << "p " << fmt_num(a.p) << "\nC0 " << fmt_num(cal->C0) << " (2^" << cal->ladder_exponent << ")\nkappa "
        << fmt_num(cal->params.kappa) << "\nmin_residual " << fmt_num(s.min_residual) << " at (x, y, t) = ("
        << fmt_num(s.x) << ", " << fmt_num(s.y) << ", " << fmt_num(s.t) << ")\nsamples " << s.samples
        << "\nmax |z| on y = 0: " << fmt_num(s.max_abs_z_on_floor) << '\n';
    if (a.ladder) {
        const EtaLadderResult lr = eta_ladder(a.x0, a.r, a.d, a.t0, a.T, a.eta, cal->C0, pc, a.lattice);
        out << "eta ladder passed:";
        for (double e : lr.passed) out << ' ' << fmt_num(e);
        out << '\n';
        if (lr.first_failing)
            out << "first failing eta " << fmt_num(*lr.first_failing) << " (min residual "
                << fmt_num(lr.failing_scan->min_residual) << ")\n";
        else
            out << "no failing eta below 1\n";
    }
    return s.min_residual >= 0.0 && s.max_abs_z_on_floor <= 1e-12 ? exit_ok : exit_gate;
}

/// Replaces (or adds) one key in a serialized config.
inline std::string override_key(const std::string& text, const std::string& key, const std::string& value) {
    std::istringstream is(text);
    std::string line, outtext;
    while (std::getline(is, line)) {
        const auto eq = line.find('=');
        if (eq != std::string::npos && detail::trim(line.substr(0, eq)) == key) continue;
        outtext += line + '\n';
    }
    return outtext + key + " = " + value + '\n';
}

/// `sweep`: one run per value of `key`, fanned out over `jobs` worker threads.
inline int cmd_sweep(const std::string& config_path, const std::string& key, const std::vector<std::string>& values,
                     const fs::path& root, int jobs, std::ostream& out, std::ostream& err) {
    RunConfig base;
    std::vector<std::string> texts;
    try {
        base = load_config(config_path);
        for (const auto& v : values) {
            std::string t = override_key(serialize_config(base), key, v);
            parse_config(t);
            texts.push_back(std::move(t));
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return exit_config;
    }
    fs::create_directories(root);
    const std::size_t n = values.size();
    std::vector<int> codes(n, 0);
    std::vector<std::string> logs(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k; (k = next++) < n;) {
            const fs::path dir = root / (base.name + "-" + key + "=" + values[k]);
            const fs::path cfg_path = root / (base.name + "-" + key + "=" + values[k] + ".txt");
            write_file(cfg_path, texts[k]);
            std::ostringstream o, e;
            codes[k] = cmd_run(cfg_path.string(), dir, o, e);
            logs[k] = o.str() + e.str();
        }
    };
    {
        std::vector<std::jthread> pool;
        for (int w = 0; w < std::max(1, jobs); ++w) pool.emplace_back(worker);
    }
    int worst = exit_ok;
    out << key << ",exit,normal_exponent,tangential_exponent,time_rate_exponent\n";
    for (std::size_t k = 0; k < n; ++k) {
        const fs::path dir = root / (base.name + "-" + key + "=" + values[k]);
        std::string ne, te, tr;
        try {
            const auto f = nlohmann::json::parse(read_file(dir / "fits.json"));
            auto get = [&](const char* name) {
                return f.contains(name) && f[name].contains("exponent") ? fmt_num(f[name]["exponent"].get<double>())
                                                                        : std::string("");
            };
            ne = get("normal"), te = get("tangential"), tr = get("time_rate");
        } catch (const std::exception&) {
        }
        out << values[k] << ',' << codes[k] << ',' << ne << ',' << te << ',' << tr << '\n';
        if (codes[k] != exit_ok) err << values[k] << ": " << logs[k];
        worst = std::max(worst, codes[k]);
    }
    return worst;
}

} // namespace gbulab
