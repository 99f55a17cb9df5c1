#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "commands.hpp"
#include "run_config.hpp"

using namespace mfrelax;
using namespace mfrelax::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "mfrelax_test_cli" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

int run_exe(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(MFRELAX_EXE) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

RunConfig short_run(const std::string& preset_name, const fs::path& out) {
  RunConfig c = preset(preset_name);
  c.out_dir = out;
  return c;
}

}  // namespace

TEST(Cli, EveryPresetParses) {
  const auto names = preset_names();
  for (const char* want : {"hopf-trivial", "hopf-periodic", "hopf-noH", "hopf-hcurl", "hopf-h1",
                           "isohelix-periodic", "cube-2", "periodic-2"}) {
    EXPECT_NE(std::find(names.begin(), names.end(), want), names.end()) << want;
  }
  for (const auto& n : names) {
    const RunConfig c = preset(n);
    EXPECT_EQ(c.name, n);
    EXPECT_EQ(c.tau, 100.0);
    EXPECT_GE(c.steps(), 1);
  }
  EXPECT_THROW(preset("nope"), ConfigError);
  const RunConfig trivial = preset("hopf-trivial");
  EXPECT_EQ(trivial.dt, 10.0);
  EXPECT_EQ(trivial.steps(), 1000);
  EXPECT_EQ(preset("hopf-noH").steps(), 1000);
  EXPECT_EQ(preset("hopf-noH").dt, 1.0);
}

TEST(Cli, MalformedConfigNamesTheField) {
  EXPECT_NE(config_error(R"({"physics": {"tau": 100, "dt": 10}})").find("physics.t_final"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"physics": {"tau": "x", "dt": 10, "t_final": 100}})").find("physics.tau"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"mesh": {"resolution": [4, 0, 2]}, "physics": {"tau": 1, "dt": 1, "t_final": 1}})")
                .find("mesh.resolution[1]"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"colour": 1, "physics": {"tau": 1, "dt": 1, "t_final": 1}})").find("colour"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"scheme": "rk4", "physics": {"tau": 1, "dt": 1, "t_final": 1}})").find("scheme"),
            std::string::npos);
  EXPECT_NE(config_error("{\n  \"physics\": \n}").find("syntax"), std::string::npos);
  EXPECT_NE(config_error(R"({"physics": {"tau": 100, "dt": 10, "t_final": 15}})").find("positive integer"),
            std::string::npos);
}

TEST(Cli, ConfigRoundTripsFields) {
  const RunConfig c = parse_config(R"({
    "name": "x",
    "mesh": {"extents": [[0, 1], [0, 2], [0, 3]], "resolution": [2, 3, 4], "periodic_z": true},
    "scheme": "hcurl",
    "ic": {"kind": "isohelix"},
    "physics": {"tau": 5, "dt": 0.5, "t_final": 2},
    "newton": {"abs_tol": 1e-9, "max_iter": 7, "halve_on_failure": true},
    "output": {"dir": "somewhere", "helicity_cadence": 3},
    "trace": {"seeds": [[0.5, 0.5, 0.5]], "max_len": 9}
  })");
  EXPECT_EQ(c.scheme, SchemeKind::hcurl);
  EXPECT_TRUE(std::holds_alternative<IsoHelix>(c.ic));
  EXPECT_EQ(c.steps(), 4);
  EXPECT_EQ(c.newton_max_iter, 7);
  EXPECT_TRUE(c.halve_on_failure);
  EXPECT_EQ(c.out_dir, fs::path("somewhere"));
  EXPECT_EQ(c.helicity_cadence, 3);
  ASSERT_EQ(c.seeds.size(), 1u);
  EXPECT_EQ(c.trace_max_len, 9.0);
  EXPECT_TRUE(c.mesh().periodic_z());
}

TEST(Cli, VerifyPresets) {
  std::ostringstream out;
  ComplexReport r;
  EXPECT_EQ(cmd_verify(preset("cube-2"), out, &r), 0);
  EXPECT_NE(out.str().find("verify: pass"), std::string::npos);
  EXPECT_EQ(r.face_defect, 0);
  std::ostringstream out2;
  EXPECT_EQ(cmd_verify(preset("periodic-2"), out2, &r), 0);
  EXPECT_NE(out2.str().find("harmonic_dim 1"), std::string::npos);
  EXPECT_EQ(r.face_defect, 1);
}

TEST(Cli, PoincareReportsConstant) {
  std::ostringstream out;
  PoincareEstimate est;
  EXPECT_EQ(cmd_poincare(preset("cube-2"), out, &est), 0);
  EXPECT_NEAR(est.lambda_min, 6.0, 1e-9);
  EXPECT_NE(out.str().find("lambda_min 6"), std::string::npos);
  EXPECT_NE(out.str().find("C 2.449489742783"), std::string::npos);
}

TEST(Cli, RunIsDeterministic) {
  RunOptions opt;
  opt.steps = 3;
  opt.quiet = true;
  std::ostringstream out, err;
  const fs::path a = scratch_dir("det_a");
  const fs::path b = scratch_dir("det_b");
  RunSummary sa;
  ASSERT_EQ(cmd_run(short_run("hopf-trivial", a), opt, out, err, &sa), 0) << err.str();
  ASSERT_EQ(cmd_run(short_run("hopf-trivial", b), opt, out, err), 0) << err.str();
  const std::string csv = slurp(a / "diagnostics.csv");
  EXPECT_EQ(csv, slurp(b / "diagnostics.csv"));
  EXPECT_EQ(sa.rows.size(), 4u);
  EXPECT_EQ(read_csv(a / "diagnostics.csv").size(), 4u);
  EXPECT_TRUE(fs::exists(a / "checkpoint.prlx"));
  EXPECT_TRUE(fs::exists(a / "snapshots" / "B_000000.vtk"));
  EXPECT_TRUE(fs::exists(a / "snapshots" / "B_000003.vtk"));
}

TEST(Cli, RestartMatchesUninterruptedRun) {
  RunOptions opt;
  opt.quiet = true;
  std::ostringstream out, err;
  const fs::path whole = scratch_dir("whole");
  const fs::path split = scratch_dir("split");
  RunSummary full, second;
  opt.steps = 4;
  ASSERT_EQ(cmd_run(short_run("hopf-periodic", whole), opt, out, err, &full), 0) << err.str();
  opt.steps = 2;
  ASSERT_EQ(cmd_run(short_run("hopf-periodic", split), opt, out, err), 0) << err.str();
  opt.steps = 4;
  opt.restart = split / "checkpoint.prlx";
  ASSERT_EQ(cmd_run(short_run("hopf-periodic", split), opt, out, err, &second), 0) << err.str();
  EXPECT_EQ(second.first_step, 2);
  EXPECT_EQ(second.last_step, 4);
  const Eigen::VectorXd& x = full.final_state.B.coeffs;
  EXPECT_LE((second.final_state.B.coeffs - x).norm(), 1e-12 * x.norm());
  EXPECT_NEAR(second.rows.back().helicity, full.rows.back().helicity, 1e-12);
}

TEST(Cli, RestartRejectsSchemeMismatch) {
  RunOptions opt;
  opt.quiet = true;
  opt.steps = 1;
  std::ostringstream out, err;
  const fs::path d = scratch_dir("mismatch");
  ASSERT_EQ(cmd_run(short_run("hopf-trivial", d), opt, out, err), 0);
  RunConfig noh = short_run("hopf-noH", scratch_dir("mismatch_b"));
  opt.restart = d / "checkpoint.prlx";
  EXPECT_EQ(cmd_run(noh, opt, out, err), 2);
}

TEST(Cli, TraceWritesPolylines) {
  const fs::path d = scratch_dir("trace");
  const fs::path seeds = d / "seeds.txt";
  std::ofstream(seeds) << "# seeds\n0.5 0.5 0.5\n1, -1, 2\n9 9 9\n";
  RunConfig c = short_run("hopf-periodic", d);
  c.trace_max_len = 5.0;
  TraceOptions opt;
  opt.seed_file = seeds;
  std::ostringstream out, err;
  TraceResult tr;
  ASSERT_EQ(cmd_trace(c, opt, out, err, &tr), 0) << err.str();
  EXPECT_EQ(tr.lines.size(), 2u);
  EXPECT_EQ(tr.skipped_seeds.size(), 1u);
  EXPECT_NE(err.str().find("outside"), std::string::npos);
  EXPECT_TRUE(fs::exists(d / "fieldlines.vtk"));
  TraceOptions none;
  EXPECT_EQ(cmd_trace(short_run("hopf-h1", d), none, out, err), 2);
}

TEST(Cli, ExecutableExitCodes) {
  const fs::path d = scratch_dir("exe");
  EXPECT_EQ(run_exe("verify --preset cube-2", d / "verify.log"), 0);
  EXPECT_NE(slurp(d / "verify.log").find("verify: pass"), std::string::npos);
  const fs::path bad = d / "bad.json";
  std::ofstream(bad) << R"({"physics": {"tau": 100, "dt": 10}})";
  EXPECT_EQ(run_exe("run --config " + bad.string(), d / "bad.log"), 2);
  EXPECT_NE(slurp(d / "bad.log").find("physics.t_final"), std::string::npos);
  EXPECT_NE(run_exe("run", d / "none.log"), 0);
  EXPECT_NE(run_exe("run --preset no-such-preset", d / "unknown.log"), 0);
  EXPECT_EQ(run_exe("run --preset cube-2 --steps 1 --out " + (d / "o").string(), d / "run.log"), 0);
  EXPECT_TRUE(fs::exists(d / "o" / "diagnostics.csv"));
}
