#pragma once

// Run configuration: flat "key.path = value" lines, '#' starts a comment.

#include "gbulab/error.hpp"
#include "gbulab/grid.hpp"
#include "gbulab/solver.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace gbulab {

struct RunConfig {
    std::string name = "run";
    std::string mode = "2d"; ///< 2d | 1d
    double p = 3.0;

    double Lx = 0.5; ///< half-width
    double Ly = 1.0;
    int nx = 129;
    int ny = 129;

    // initial_data: bump | cap (2d), ramp | sine (1d)
    std::string family = "cap";
    double amplitude = 1.0;
    double epsilon = 0.1; ///< bump concentration scale
    double width = 0.5;   ///< cap half-width

    double cfl_safety = 0.4;
    double dt_floor = 1e-16;
    double stop_grad_norm = 0.0; ///< 0 = resolution default 50 / h^β
    double t_max = 1.0;
    long snapshot_stride = 0;
    long max_steps = 0;
    bool cascade = true;
    std::string symmetry_mode = "full";

    double probe_x = 0.0; ///< 0 = min(0.1, Lx/4)
    double probe_y = 0.0; ///< 0 = min(0.1, Ly/4)
    double j_q = 0.0;     ///< 0 = p
    double late_fraction = 0.75; ///< J/ξ/Θ window starts at this fraction of t_stop

    double normal_hi = 0.1;
    double tangential_hi = 0.1;
    int inner_cells = 3;
    double aniso_box = 0.0; ///< 0 = the probe box
    double level_fraction = 0.5;

    // gates checked by `check`
    bool gate_normal = false;
    bool gate_tangential = false;
    bool gate_aniso = false;
    bool gate_time_rate = false;
    bool gate_monitors = false;
    bool gate_j = false;
    bool gate_reason = true;
    std::string expect_reason = "";

    // mms
    double mms_alpha = 3.0;
    double mms_T = 1.0;
    double mms_t_end = 0.5;
    std::vector<int> mms_grids{33, 65, 129};
    double mms_min_order = 1.5;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(out))
        throw ConfigError(key, "expected a finite number, got '" + v + "'");
    return out;
}

template <class I>
I parse_int(const std::string& key, const std::string& v) {
    I out = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size())
        throw ConfigError(key, "expected an integer, got '" + v + "'");
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw ConfigError(key, "expected true or false, got '" + v + "'");
}

inline std::string fmt_double(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

struct Field {
    std::string key;
    std::string comment;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define GBULAB_DBL(k, m, c)                                                                        \
    Field{k, c, [](RunConfig& r, const std::string& v) { r.m = parse_double(k, v); },              \
          [](const RunConfig& r) { return fmt_double(r.m); }}
#define GBULAB_INT(k, m, T, c)                                                                     \
    Field{k, c, [](RunConfig& r, const std::string& v) { r.m = parse_int<T>(k, v); },              \
          [](const RunConfig& r) { return std::to_string(r.m); }}
#define GBULAB_BOOL(k, m, c)                                                                       \
    Field{k, c, [](RunConfig& r, const std::string& v) { r.m = parse_bool(k, v); },                \
          [](const RunConfig& r) { return std::string(r.m ? "true" : "false"); }}
#define GBULAB_STR(k, m, c)                                                                        \
    Field{k, c, [](RunConfig& r, const std::string& v) { r.m = v; },                               \
          [](const RunConfig& r) { return r.m; }}

inline const std::vector<Field>& fields() {
    static const std::vector<Field> f{
        GBULAB_STR("name", name, "run label"),
        GBULAB_STR("mode", mode, "2d | 1d"),
        GBULAB_DBL("p", p, "gradient exponent, > 2"),
        GBULAB_DBL("domain.Lx", Lx, "half-width, x in [-Lx, Lx] (length)"),
        GBULAB_DBL("domain.Ly", Ly, "height, y in [0, Ly] (length)"),
        GBULAB_INT("grid.nx", nx, int, "nodes in x, odd (unused in 1d)"),
        GBULAB_INT("grid.ny", ny, int, "nodes in y"),
        GBULAB_STR("initial_data.family", family, "bump | cap (2d); ramp | sine (1d)"),
        GBULAB_DBL("initial_data.amplitude", amplitude, "C for bump, peak for cap/sine, top value for ramp"),
        GBULAB_DBL("initial_data.epsilon", epsilon, "bump concentration scale (length)"),
        GBULAB_DBL("initial_data.width", width, "cap half-width (length)"),
        GBULAB_DBL("solver.cfl_safety", cfl_safety, "in (0, 1)"),
        GBULAB_DBL("solver.dt_floor", dt_floor, "smallest admissible step (time)"),
        GBULAB_DBL("solver.stop_grad_norm", stop_grad_norm, "blow-up stop threshold; 0 = 50/h^beta"),
        GBULAB_DBL("solver.t_max", t_max, "horizon (time)"),
        GBULAB_INT("solver.snapshot_stride", snapshot_stride, long, "steps between snapshots; 0 = off"),
        GBULAB_INT("solver.max_steps", max_steps, long, "0 = unlimited"),
        GBULAB_BOOL("solver.cascade", cascade, "snapshot when grad_max crosses 2^n * initial"),
        GBULAB_STR("solver.symmetry_mode", symmetry_mode, "full | half"),
        GBULAB_DBL("diagnostics.probe_x", probe_x, "probe box width; 0 = min(0.1, Lx/4)"),
        GBULAB_DBL("diagnostics.probe_y", probe_y, "probe box height; 0 = min(0.1, Ly/4)"),
        GBULAB_DBL("diagnostics.j_q", j_q, "J exponent q; 0 = p"),
        GBULAB_DBL("diagnostics.late_fraction", late_fraction, "late window starts at this fraction of t_stop"),
        GBULAB_DBL("fits.normal_hi", normal_hi, "upper edge of the normal window (length)"),
        GBULAB_DBL("fits.tangential_hi", tangential_hi, "upper edge of the tangential window (length)"),
        GBULAB_INT("fits.inner_cells", inner_cells, int, "cells excluded next to the singular point"),
        GBULAB_DBL("fits.aniso_box", aniso_box, "anisotropic fit region [0, box]^2 (length); 0 = probe box"),
        GBULAB_DBL("fits.level_fraction", level_fraction, "level set at this fraction of the resolved peak of u_y"),
        GBULAB_BOOL("gates.normal", gate_normal, "exponent -beta +- 0.05, amplitude d_p +- 15%"),
        GBULAB_BOOL("gates.tangential", gate_tangential, "exponent -2/(p-2) +- 20%"),
        GBULAB_BOOL("gates.aniso", gate_aniso, "level-set exponent +- 25%, aniso residual <= 0.35"),
        GBULAB_BOOL("gates.time_rate", gate_time_rate, "exponent -1/(p-2) +- 0.15, r^2 >= 0.99"),
        GBULAB_BOOL("gates.monitors", gate_monitors, "envelope growth < 10% over the last decade"),
        GBULAB_BOOL("gates.j", gate_j, "k ladder passes and Theta <= beta + 0.2"),
        GBULAB_BOOL("gates.reason", gate_reason, "stop reason equals gates.expect_reason"),
        GBULAB_STR("gates.expect_reason", expect_reason, "blow_up_detected | horizon_reached | empty"),
        GBULAB_DBL("mms.alpha", mms_alpha, "manufactured family exponent, >= (p-1)/(p-2)"),
        GBULAB_DBL("mms.T", mms_T, "manufactured singular time"),
        GBULAB_DBL("mms.t_end", mms_t_end, "comparison time, < T"),
        Field{"mms.grids", "comma-separated node counts (square grids)",
              [](RunConfig& r, const std::string& v) {
                  r.mms_grids.clear();
                  std::stringstream ss(v);
                  std::string item;
                  while (std::getline(ss, item, ','))
                      r.mms_grids.push_back(parse_int<int>("mms.grids", trim(item)));
                  if (r.mms_grids.empty()) throw ConfigError("mms.grids", "empty list");
              },
              [](const RunConfig& r) {
                  std::string s;
                  for (std::size_t k = 0; k < r.mms_grids.size(); ++k)
                      s += (k ? "," : "") + std::to_string(r.mms_grids[k]);
                  return s;
              }},
        GBULAB_DBL("mms.min_order", mms_min_order, "observed order below this fails"),
    };
    return f;
}

#undef GBULAB_DBL
#undef GBULAB_INT
#undef GBULAB_BOOL
#undef GBULAB_STR

} // namespace detail

/// Semantic checks; throws ConfigError naming the offending key.
inline void validate(const RunConfig& c) {
    if (c.mode != "2d" && c.mode != "1d") throw ConfigError("mode", "must be 2d or 1d");
    if (!(c.p > 2.0)) throw ConfigError("p", "must be > 2");
    if (!(c.Lx > 0.0)) throw ConfigError("domain.Lx", "must be > 0");
    if (!(c.Ly > 0.0)) throw ConfigError("domain.Ly", "must be > 0");
    if (c.ny < 5) throw ConfigError("grid.ny", "must be >= 5");
    if (c.mode == "2d") {
        if (c.nx < 5) throw ConfigError("grid.nx", "must be >= 5");
        if (c.nx % 2 == 0) throw ConfigError("grid.nx", "must be odd");
        if (c.nx > 65535 || c.ny > 65535) throw ConfigError("grid", "node counts must fit in 16 bits");
        if (c.family != "bump" && c.family != "cap")
            throw ConfigError("initial_data.family", "2d families are bump and cap");
    } else if (c.family != "ramp" && c.family != "sine") {
        throw ConfigError("initial_data.family", "1d families are ramp and sine");
    }
    if (c.amplitude < 0.0) throw ConfigError("initial_data.amplitude", "must be >= 0");
    if (c.family == "bump" && !(c.epsilon > 0.0)) throw ConfigError("initial_data.epsilon", "must be > 0");
    if (c.family == "cap" && !(c.width > 0.0 && c.width <= c.Lx))
        throw ConfigError("initial_data.width", "must lie in (0, Lx]");
    if (!(c.cfl_safety > 0.0 && c.cfl_safety < 1.0)) throw ConfigError("solver.cfl_safety", "must lie in (0, 1)");
    if (!(c.dt_floor > 0.0)) throw ConfigError("solver.dt_floor", "must be > 0");
    if (c.stop_grad_norm < 0.0) throw ConfigError("solver.stop_grad_norm", "must be >= 0");
    if (!(c.t_max > 0.0)) throw ConfigError("solver.t_max", "must be > 0");
    if (c.snapshot_stride < 0) throw ConfigError("solver.snapshot_stride", "must be >= 0");
    if (c.max_steps < 0) throw ConfigError("solver.max_steps", "must be >= 0");
    if (c.symmetry_mode != "full" && c.symmetry_mode != "half")
        throw ConfigError("solver.symmetry_mode", "must be full or half");
    if (c.probe_x < 0.0) throw ConfigError("diagnostics.probe_x", "must be >= 0");
    if (c.probe_y < 0.0) throw ConfigError("diagnostics.probe_y", "must be >= 0");
    if (c.j_q != 0.0 && !(c.j_q > c.p - 1.0)) throw ConfigError("diagnostics.j_q", "must exceed p-1");
    if (!(c.late_fraction >= 0.0 && c.late_fraction < 1.0))
        throw ConfigError("diagnostics.late_fraction", "must lie in [0, 1)");
    if (!(c.normal_hi > 0.0)) throw ConfigError("fits.normal_hi", "must be > 0");
    if (!(c.tangential_hi > 0.0)) throw ConfigError("fits.tangential_hi", "must be > 0");
    if (c.inner_cells < 0) throw ConfigError("fits.inner_cells", "must be >= 0");
    if (c.aniso_box < 0.0) throw ConfigError("fits.aniso_box", "must be >= 0");
    if (!(c.level_fraction > 0.0 && c.level_fraction < 1.0))
        throw ConfigError("fits.level_fraction", "must lie in (0, 1)");
    if (!c.expect_reason.empty()) {
        try {
            stop_reason_from_string(c.expect_reason);
        } catch (const DomainError&) {
            throw ConfigError("gates.expect_reason", "unknown stop reason '" + c.expect_reason + "'");
        }
    }
    if (!(c.mms_T > 0.0)) throw ConfigError("mms.T", "must be > 0");
    if (!(c.mms_t_end > 0.0 && c.mms_t_end < c.mms_T)) throw ConfigError("mms.t_end", "must lie in (0, T)");
    if (!(c.mms_alpha >= (c.p - 1.0) / (c.p - 2.0) * (1.0 - 1e-14)))
        throw ConfigError("mms.alpha", "must be >= (p-1)/(p-2)");
    for (int n : c.mms_grids)
        if (n < 5 || n % 2 == 0) throw ConfigError("mms.grids", "entries must be odd and >= 5");
}

inline RunConfig parse_config(const std::string& text) {
    RunConfig c;
    std::map<std::string, const detail::Field*> by_key;
    for (const auto& f : detail::fields()) by_key[f.key] = &f;
    std::set<std::string> seen;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno), "expected 'key = value'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        const auto it = by_key.find(key);
        if (it == by_key.end()) throw ConfigError(key, "unknown key");
        if (!seen.insert(key).second) throw ConfigError(key, "duplicate key");
        it->second->set(c, value);
    }
    validate(c);
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError(path, "cannot open config file");
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

inline std::string serialize_config(const RunConfig& c) {
    std::string out;
    for (const auto& f : detail::fields()) {
        std::string line = f.key + " = " + f.get(c);
        if (line.size() < 40) line.resize(40, ' ');
        out += line + " # " + f.comment + "\n";
    }
    return out;
}

/// Solver settings derived from a run config.
inline SolverConfig solver_config(const RunConfig& c) {
    SolverConfig s;
    s.p = c.p;
    s.cfl_safety = c.cfl_safety;
    s.dt_floor = c.dt_floor;
    s.stop_grad_norm = c.stop_grad_norm;
    s.t_max = c.t_max;
    s.snapshot_stride = c.snapshot_stride;
    s.max_steps = c.max_steps;
    s.cascade = c.cascade;
    s.symmetry = c.symmetry_mode == "half" ? SymmetryMode::half : SymmetryMode::full;
    return s;
}

} // namespace gbulab
