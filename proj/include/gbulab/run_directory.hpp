#pragma once

// Run directory layout:
//   config.txt          echo of the run configuration
//   meta.json           config echo, snapshot index, outcome
//   series.csv          t,grad_max,uy_origin,dt   (row k = state after step k)
//   snapshots/NNNN.bin  binary snapshots

#include "gbulab/config.hpp"
#include "gbulab/error.hpp"
#include "gbulab/grid.hpp"
#include "gbulab/solver.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace gbulab {

namespace fs = std::filesystem;

inline const char* to_string(SnapshotKind k) {
    switch (k) {
    case SnapshotKind::initial: return "initial";
    case SnapshotKind::stride: return "stride";
    case SnapshotKind::cascade: return "cascade";
    case SnapshotKind::final: return "final";
    }
    return "unknown";
}

inline SnapshotKind snapshot_kind_from_string(const std::string& s) {
    if (s == "initial") return SnapshotKind::initial;
    if (s == "stride") return SnapshotKind::stride;
    if (s == "cascade") return SnapshotKind::cascade;
    if (s == "final") return SnapshotKind::final;
    throw DomainError("unknown snapshot kind '" + s + "'");
}

inline std::string snapshot_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d.bin", index);
    return buf;
}

inline std::string fmt_num(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline std::string read_file(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    if (!is) throw IoError(p.string(), "cannot open");
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

inline void write_file(const fs::path& p, const std::string& content) {
    const fs::path tmp = p.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) throw IoError(tmp.string(), "cannot open for writing");
        os << content;
        if (!os) throw IoError(tmp.string(), "write failed");
    }
    fs::rename(tmp, p);
}

inline std::string series_header() { return "t,grad_max,uy_origin,dt\n"; }

inline std::string series_line(const SeriesRow& r) {
    return fmt_num(r.t) + ',' + fmt_num(r.grad_max) + ',' + fmt_num(r.uy_origin) + ',' + fmt_num(r.dt) + '\n';
}

inline std::vector<SeriesRow> read_series(const fs::path& p) {
    std::istringstream is(read_file(p));
    std::string line;
    if (!std::getline(is, line) || line + "\n" != series_header())
        throw IoError(p.string(), "missing series header");
    std::vector<SeriesRow> out;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        double v[4];
        const char* b = line.data();
        const char* e = b + line.size();
        for (int k = 0; k < 4; ++k) {
            const auto r = std::from_chars(b, e, v[k]);
            if (r.ec != std::errc() || (k < 3 && (r.ptr == e || *r.ptr != ',')) || (k == 3 && r.ptr != e))
                throw IoError(p.string(), "malformed row at line " + std::to_string(lineno));
            b = r.ptr + 1;
        }
        out.push_back({v[0], v[1], v[2], v[3]});
    }
    return out;
}

struct RunMeta {
    std::string status = "running"; ///< running | complete | failed
    std::string config_text;
    double initial_grad_max = 0.0;
    double initial_sup = 0.0;
    std::vector<SnapshotRecord> snapshots;
    std::optional<StopReason> reason;
    double t_stop = 0.0;
    long steps = 0;
    double stop_grad_norm = 0.0;
    std::string failure;
};

inline nlohmann::ordered_json to_json(const RunMeta& m) {
    nlohmann::ordered_json j;
    j["status"] = m.status;
    j["config"] = m.config_text;
    j["initial_grad_max"] = m.initial_grad_max;
    j["initial_sup"] = m.initial_sup;
    j["stop_grad_norm"] = m.stop_grad_norm;
    auto& snaps = j["snapshots"] = nlohmann::ordered_json::array();
    for (const auto& s : m.snapshots)
        snaps.push_back({{"index", s.index}, {"file", "snapshots/" + snapshot_name(s.index)},
                         {"step", s.step}, {"t", s.t}, {"grad_max", s.grad_max}, {"kind", to_string(s.kind)}});
    if (m.reason) {
        j["outcome"] = {{"reason", to_string(*m.reason)}, {"t_stop", m.t_stop}, {"steps", m.steps}};
    }
    if (!m.failure.empty()) j["failure"] = m.failure;
    return j;
}

inline RunMeta read_meta(const fs::path& dir) {
    const fs::path p = dir / "meta.json";
    RunMeta m;
    try {
        const auto j = nlohmann::json::parse(read_file(p));
        m.status = j.at("status").get<std::string>();
        m.config_text = j.at("config").get<std::string>();
        m.initial_grad_max = j.at("initial_grad_max").get<double>();
        m.initial_sup = j.at("initial_sup").get<double>();
        m.stop_grad_norm = j.at("stop_grad_norm").get<double>();
        for (const auto& s : j.at("snapshots"))
            m.snapshots.push_back({s.at("index").get<int>(), s.at("step").get<long>(), s.at("t").get<double>(),
                                   s.at("grad_max").get<double>(),
                                   snapshot_kind_from_string(s.at("kind").get<std::string>())});
        if (j.contains("outcome")) {
            const auto& o = j.at("outcome");
            m.reason = stop_reason_from_string(o.at("reason").get<std::string>());
            m.t_stop = o.at("t_stop").get<double>();
            m.steps = o.at("steps").get<long>();
        }
        if (j.contains("failure")) m.failure = j.at("failure").get<std::string>();
    } catch (const IoError&) {
        throw;
    } catch (const std::exception& e) {
        throw IoError(p.string(), std::string("malformed meta.json: ") + e.what());
    }
    return m;
}

inline void write_meta(const fs::path& dir, const RunMeta& m) { write_file(dir / "meta.json", to_json(m).dump(2) + "\n"); }

/// Loads every snapshot listed in meta.json, validating each file.
inline std::vector<Snapshot> load_snapshots(const fs::path& dir, const RunMeta& m) {
    std::vector<Snapshot> out;
    for (const auto& rec : m.snapshots) {
        const fs::path p = dir / "snapshots" / snapshot_name(rec.index);
        Snapshot s = read_snapshot(p.string());
        if (s.time != rec.t) throw IoError(p.string(), "snapshot time does not match meta.json");
        out.push_back(std::move(s));
    }
    return out;
}

/// Streams a 2d run into `dir`. If `resume` is set and the directory holds an
/// unfinished run, it restarts from the last snapshot; the continuation is
/// bitwise identical to an uninterrupted run.
inline RunOutcome run_to_directory(const fs::path& dir, const RunConfig& cfg, const ScalarField& u0, bool resume = false) {
    const SolverConfig sc = solver_config(cfg);
    fs::create_directories(dir / "snapshots");
    const fs::path series_path = dir / "series.csv";

    RunMeta meta;
    SimulationState start;
    RunHooks hooks;
    hooks.keep_series = false;
    std::ofstream series;

    const bool can_resume = resume && fs::exists(dir / "meta.json");
    if (can_resume) {
        meta = read_meta(dir);
        if (meta.status == "complete") throw IoError((dir / "meta.json").string(), "run already complete");
        if (meta.snapshots.empty()) throw IoError((dir / "meta.json").string(), "no snapshot to resume from");
        const SnapshotRecord last = meta.snapshots.back();
        Snapshot snap = read_snapshot((dir / "snapshots" / snapshot_name(last.index)).string());
        start = make_state(std::move(snap.field), snap.time, last.step);
        // Keep series rows 0..step, drop anything written after the snapshot.
        auto rows = read_series(series_path);
        if (static_cast<long>(rows.size()) < last.step + 1)
            throw IoError(series_path.string(), "series shorter than the last snapshot step");
        rows.resize(last.step + 1);
        start.dt_last = rows.back().dt;
        std::string text = series_header();
        for (const auto& r : rows) text += series_line(r);
        write_file(series_path, text);
        series.open(series_path, std::ios::app | std::ios::binary);
        hooks.cascade_base = meta.initial_grad_max;
        hooks.first_snapshot_index = last.index + 1;
        hooks.snapshot_initial = false;
        meta.status = "running";
    } else {
        start = make_state(u0);
        meta.config_text = serialize_config(cfg);
        meta.initial_grad_max = start.grad_max;
        meta.initial_sup = start.field.max_abs();
        write_file(dir / "config.txt", meta.config_text);
        series.open(series_path, std::ios::trunc | std::ios::binary);
        series << series_header();
    }
    meta.stop_grad_norm = effective_stop_grad_norm(sc, std::min(start.field.grid().hx, start.field.grid().hy));
    if (!series) throw IoError(series_path.string(), "cannot open for writing");

    hooks.on_series = [&](const SeriesRow& r) { series << series_line(r); };
    hooks.on_snapshot = [&](const SimulationState& s, const SnapshotRecord& rec) {
        write_snapshot(s.field, s.t, (dir / "snapshots" / snapshot_name(rec.index)).string());
        meta.snapshots.push_back(rec);
        series.flush();
        write_meta(dir, meta);
    };
    hooks.on_failure = [&](const SimulationState& s, const std::string& what) {
        write_snapshot(s.field, s.t, (dir / "failure_state.bin").string());
        series.flush();
        meta.status = "failed";
        meta.failure = what;
        write_meta(dir, meta);
    };
    RunOutcome out = run(std::move(start), sc, hooks);
    series.close();
    meta.status = "complete";
    meta.reason = out.reason;
    meta.t_stop = out.t_stop;
    meta.steps = out.steps;
    write_meta(dir, meta);
    return out;
}

} // namespace gbulab
