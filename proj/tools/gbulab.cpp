// gbulab command-line front end.

#include "gbulab/commands.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;

#ifndef GBULAB_PRESET_DIR
#define GBULAB_PRESET_DIR "presets"
#endif

// A config argument is either a path or the name of a shipped preset.
static std::string resolve_config(const std::string& arg) {
    if (fs::exists(arg)) return arg;
    const fs::path preset = fs::path(GBULAB_PRESET_DIR) / (arg + ".cfg");
    return fs::exists(preset) ? preset.string() : arg;
}

int main(int argc, char** argv) {
    CLI::App app{"Gradient blow-up lab: simulate, fit and check u_t - Δu = |∇u|^p"};
    app.require_subcommand(1);
    int code = 0;

    std::string run_cfg, run_out;
    bool resume = false;
    auto* run = app.add_subcommand("run", "simulate a config (or preset name) into a run directory");
    run->add_option("config", run_cfg, "config file or preset name")->required();
    run->add_option("-o,--out", run_out, "run directory (default runs/<name>)");
    run->add_flag("--resume", resume, "continue an interrupted 2d run from its last snapshot");
    run->callback([&] {
        const std::string path = resolve_config(run_cfg);
        std::string dir = run_out;
        if (dir.empty()) {
            try {
                dir = "runs/" + gbulab::load_config(path).name;
            } catch (const gbulab::ConfigError& e) {
                std::cerr << "config error: " << e.what() << '\n';
                code = gbulab::exit_config;
                return;
            }
        }
        code = gbulab::cmd_run(path, dir, std::cout, std::cerr, resume);
    });

    std::string mms_cfg;
    auto* mms = app.add_subcommand("mms", "manufactured-solution convergence study");
    mms->add_option("config", mms_cfg, "config file or preset name")->required();
    mms->callback([&] { code = gbulab::cmd_mms(resolve_config(mms_cfg), std::cout, std::cerr); });

    std::string check_dir;
    auto* check = app.add_subcommand("check", "replay diagnostics and fits, evaluate gates");
    check->add_option("run_dir", check_dir)->required();
    check->callback([&] { code = gbulab::cmd_check(check_dir, std::cout, std::cerr); });

    std::string fit_dir;
    auto* fit = app.add_subcommand("fit", "recompute fits and reports for a run directory");
    fit->add_option("run_dir", fit_dir)->required();
    fit->callback([&] { code = gbulab::cmd_fit(fit_dir, std::cout, std::cerr); });

    gbulab::BarrierArgs ba;
    auto* barrier = app.add_subcommand("barrier", "calibrate the barrier and sample its residual");
    barrier->add_option("-p", ba.p, "exponent p > 2")->capture_default_str();
    barrier->add_option("--x0", ba.x0)->capture_default_str();
    barrier->add_option("--r", ba.r)->capture_default_str();
    barrier->add_option("--d", ba.d)->capture_default_str();
    barrier->add_option("--t0", ba.t0)->capture_default_str();
    barrier->add_option("--T", ba.T)->capture_default_str();
    barrier->add_option("--eta", ba.eta)->capture_default_str();
    barrier->add_option("--nx", ba.lattice.nx)->capture_default_str();
    barrier->add_option("--ny", ba.lattice.ny)->capture_default_str();
    barrier->add_option("--nt", ba.lattice.nt)->capture_default_str();
    barrier->add_flag("--ladder", ba.ladder, "double eta until the residual check fails");
    barrier->callback([&] { code = gbulab::cmd_barrier(ba, std::cout, std::cerr); });

    std::string sweep_cfg, sweep_key, sweep_root = "runs/sweep";
    std::vector<std::string> sweep_values;
    int jobs = 1;
    auto* sweep = app.add_subcommand("sweep", "run one config per value of a key");
    sweep->add_option("config", sweep_cfg, "config file or preset name")->required();
    sweep->add_option("--key", sweep_key, "config key, e.g. p or grid.nx")->required();
    sweep->add_option("--values", sweep_values, "values, space or comma separated")->required()->delimiter(',');
    sweep->add_option("-o,--out", sweep_root)->capture_default_str();
    sweep->add_option("-j,--jobs", jobs)->capture_default_str();
    sweep->callback([&] {
        code = gbulab::cmd_sweep(resolve_config(sweep_cfg), sweep_key, sweep_values, sweep_root, jobs, std::cout,
                                 std::cerr);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : gbulab::exit_config;
    }
    return code;
}
