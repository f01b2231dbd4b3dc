#include "gbulab/commands.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace gbulab;
namespace fs = std::filesystem;

namespace {

class Workdir : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        root = fs::temp_directory_path() / (std::string("gbulab_cli_") + info->name());
        fs::remove_all(root);
        fs::create_directories(root);
    }
    void TearDown() override { fs::remove_all(root); }

    std::string config(const std::string& name, const std::string& text) {
        const fs::path p = root / name;
        std::ofstream(p) << text;
        return p.string();
    }

    fs::path root;
};

const char* kSmall = R"(name = small
domain.Lx = 0.5
domain.Ly = 1.0
grid.nx = 33
grid.ny = 33
initial_data.family = cap
initial_data.amplitude = 0.05
initial_data.width = 0.25
solver.t_max = 0.02
solver.snapshot_stride = 40
solver.symmetry_mode = half
gates.expect_reason = horizon_reached
)";

std::string slurp(const fs::path& p) { return read_file(p); }

} // namespace

TEST(Config, RoundTrip) {
    RunConfig c;
    c.name = "x";
    c.p = 2.5;
    c.nx = 65;
    c.amplitude = 0.123456789012345;
    c.mms_grids = {17, 33};
    c.gate_j = true;
    const RunConfig back = parse_config(serialize_config(c));
    EXPECT_TRUE(back == c);
}

TEST(Config, ErrorsNameTheKey) {
    const auto path_of = [](const std::string& text) {
        try {
            parse_config(text);
        } catch (const ConfigError& e) {
            return e.path();
        }
        return std::string("<no error>");
    };
    EXPECT_EQ(path_of("grid.nz = 5\n"), "grid.nz");
    EXPECT_EQ(path_of("p = 3\np = 3\n"), "p");
    EXPECT_EQ(path_of("p = 2\n"), "p");
    EXPECT_EQ(path_of("grid.nx = 64\n"), "grid.nx");
    EXPECT_EQ(path_of("p = three\n"), "p");
    EXPECT_EQ(path_of("solver.cfl_safety = 1.2\n"), "solver.cfl_safety");
    EXPECT_EQ(path_of("# comment only\n\np = 3 # trailing\n"), "<no error>");
}

TEST_F(Workdir, MalformedConfigCreatesNothing) {
    const auto cfg = config("bad.cfg", "grid.nz = 5\n");
    std::ostringstream out, err;
    EXPECT_EQ(cmd_run(cfg, root / "run", out, err), exit_config);
    EXPECT_FALSE(fs::exists(root / "run"));
    EXPECT_NE(err.str().find("grid.nz"), std::string::npos);
    EXPECT_EQ(cmd_run((root / "missing.cfg").string(), root / "run", out, err), exit_config);
}

TEST_F(Workdir, SmallDataRunAndCheck) {
    const auto cfg = config("small.cfg", kSmall);
    std::ostringstream out, err;
    ASSERT_EQ(cmd_run(cfg, root / "run", out, err), exit_ok) << err.str();
    EXPECT_NE(out.str().find("horizon_reached"), std::string::npos);
    for (const char* f : {"config.txt", "series.csv", "meta.json", "fits.json", "report.json"})
        EXPECT_TRUE(fs::exists(root / "run" / f)) << f;
    EXPECT_EQ(read_meta(root / "run").status, "complete");

    const std::string fits = slurp(root / "run" / "fits.json");
    fs::remove(root / "run" / "fits.json");
    std::ostringstream o2;
    EXPECT_EQ(cmd_check(root / "run", o2, err), exit_ok) << o2.str();
    EXPECT_NE(o2.str().find("regenerated"), std::string::npos);
    EXPECT_EQ(slurp(root / "run" / "fits.json"), fits);

    std::ostringstream o3;
    EXPECT_EQ(cmd_check(root / "run", o3, err), exit_ok) << o3.str();
    EXPECT_NE(o3.str().find("byte-identical"), std::string::npos);

    write_file(root / "run" / "fits.json", fits + " ");
    std::ostringstream o4;
    EXPECT_EQ(cmd_check(root / "run", o4, err), exit_gate);
}

TEST_F(Workdir, ReasonGateFails) {
    std::string text = kSmall;
    text.replace(text.find("horizon_reached"), 15, "blow_up_detected");
    const auto cfg = config("small.cfg", text);
    std::ostringstream out, err;
    ASSERT_EQ(cmd_run(cfg, root / "run", out, err), exit_ok);
    EXPECT_EQ(cmd_check(root / "run", out, err), exit_gate);
}

TEST_F(Workdir, TruncatedSnapshotIsCorrupt) {
    const auto cfg = config("small.cfg", kSmall);
    std::ostringstream out, err;
    ASSERT_EQ(cmd_run(cfg, root / "run", out, err), exit_ok);
    const fs::path snap = root / "run" / "snapshots" / snapshot_name(0);
    ASSERT_TRUE(fs::exists(snap));
    fs::resize_file(snap, fs::file_size(snap) - 8);
    std::ostringstream e2;
    EXPECT_EQ(cmd_check(root / "run", out, e2), exit_corrupt);
    EXPECT_NE(e2.str().find(snapshot_name(0)), std::string::npos);
    EXPECT_EQ(cmd_fit(root / "run", out, e2), exit_corrupt);
}

TEST_F(Workdir, ResumeIsBitwiseDeterministic) {
    const auto cfg = config("small.cfg", kSmall);
    std::ostringstream out, err;
    ASSERT_EQ(cmd_run(cfg, root / "a", out, err), exit_ok);
    const RunMeta full = read_meta(root / "a");
    ASSERT_GE(full.snapshots.size(), 3u);

    // Fake an interruption after the second snapshot, with junk rows past it.
    fs::copy(root / "a", root / "b", fs::copy_options::recursive);
    RunMeta cut = full;
    cut.status = "running";
    cut.reason.reset();
    cut.snapshots.resize(2);
    write_meta(root / "b", cut);
    for (std::size_t k = 2; k < full.snapshots.size(); ++k)
        fs::remove(root / "b" / "snapshots" / snapshot_name(full.snapshots[k].index));
    fs::remove(root / "b" / "fits.json");
    {
        std::ofstream s(root / "b" / "series.csv", std::ios::app);
        s << "9,9,9,9\n";
    }
    ASSERT_EQ(cmd_run(cfg, root / "b", out, err, true), exit_ok) << err.str();
    EXPECT_EQ(slurp(root / "a" / "series.csv"), slurp(root / "b" / "series.csv"));
    EXPECT_EQ(slurp(root / "a" / "fits.json"), slurp(root / "b" / "fits.json"));
    for (const auto& rec : full.snapshots) {
        const auto name = fs::path("snapshots") / snapshot_name(rec.index);
        EXPECT_EQ(slurp(root / "a" / name), slurp(root / "b" / name)) << name;
    }
}

TEST_F(Workdir, NumericFailureReportsDump) {
    const auto cfg = config("bad.cfg", std::string(kSmall) + "solver.dt_floor = 1\n");
    std::ostringstream out, err;
    const int rc = cmd_run(cfg, root / "run", out, err);
    // dt underflow is a stop reason, not a failure: the run completes.
    EXPECT_EQ(rc, exit_ok) << err.str();
    EXPECT_NE(out.str().find("dt_underflow"), std::string::npos);
}

TEST_F(Workdir, OneDimensionalRun) {
    const auto cfg = config("ramp.cfg", R"(mode = 1d
grid.ny = 129
initial_data.family = sine
initial_data.amplitude = 0.1
solver.t_max = 0.01
)");
    std::ostringstream out, err;
    ASSERT_EQ(cmd_run(cfg, root / "run", out, err), exit_ok) << err.str();
    EXPECT_TRUE(fs::exists(root / "run" / "profile_final.csv"));
    EXPECT_EQ(cmd_run(cfg, root / "run2", out, err, true), exit_config);
}

TEST(Mms, OrderGateSkippedAtThreshold) {
    RunConfig c;
    c.p = 3.0;
    c.mms_alpha = 2.0;
    EXPECT_FALSE(mms_order_gated(c));
    c.mms_alpha = 3.0;
    EXPECT_TRUE(mms_order_gated(c));
}

TEST_F(Workdir, MmsTable) {
    const auto cfg = config("mms.cfg", "mms.grids = 17,33\nmms.min_order = 1.5\n");
    std::ostringstream out, err;
    EXPECT_EQ(cmd_mms(cfg, out, err), exit_ok) << err.str() << out.str();
    EXPECT_EQ(out.str().rfind("n,h,steps,max_error,order\n", 0), 0u) << out.str();
    const auto cfg2 = config("mms2.cfg", "mms.grids = 17,33\nmms.min_order = 9\n");
    EXPECT_EQ(cmd_mms(cfg2, out, err), exit_order);
}

TEST(Barrier, DefaultsPass) {
    std::ostringstream out, err;
    EXPECT_EQ(cmd_barrier(BarrierArgs{}, out, err), exit_ok) << out.str() << err.str();
}

TEST(Sweep, OverrideKey) {
    const std::string text = "p = 3\ninitial_data.amplitude = 1 # peak\n";
    EXPECT_EQ(override_key(text, "initial_data.amplitude", "2"), "p = 3\ninitial_data.amplitude = 2\n");
    EXPECT_EQ(override_key(text, "grid.nx", "65"), text + "grid.nx = 65\n");
}
