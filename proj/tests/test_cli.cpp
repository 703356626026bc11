#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "degenflow/cli.hpp"

namespace fs = std::filesystem;
using namespace degenflow;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("degenflow_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  std::string config(const std::string& name, const std::string& text) {
    const auto p = root_ / (name + ".ini");
    std::ofstream(p) << text;
    return p.string();
  }
  std::string out(const std::string& name) { return (root_ / name).string(); }

  static int run(std::vector<std::string> args) {
    args.insert(args.begin(), "degenflow");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli::run(static_cast<int>(argv.size()), argv.data());
  }

  static std::string slurp(const std::string& path) { return io::read_file(path); }

  fs::path root_;
};

const char* kSmallLemmas = "[lemmas]\np_values = 2, 3\ndelta_values = 0.5\nn_values = 2\nsamples = 2000\n";

const char* kManufactured = R"([params]
p = 3
delta = 0.5
eps = 0.1
[grid]
points = 17
dt = 0.02
levels = 6
[data]
initial = manufactured
source = manufactured
)";

}  // namespace

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run({"--help"}), 0);
  EXPECT_EQ(run({}), 2);
  EXPECT_EQ(run({"solve"}), 2);  // --config missing
  EXPECT_EQ(run({"frobnicate", "--config", "x.ini"}), 2);
  EXPECT_EQ(run({"solve", "--config", out("missing.ini")}), 2);
  EXPECT_EQ(run({"solve", "--config", config("bad", "[params]\nwat = 1\n"), "--out", out("o")}), 2);
  EXPECT_EQ(run({"solve", "--config", config("geom", "[grid]\npoints = 2\n"), "--out", out("o")}), 2);
  EXPECT_EQ(run({"solve", "--config", config("zero_eps", "[params]\neps = 0\n"), "--out", out("o")}), 2);
}

TEST_F(Cli, VerifyLemmasPassesAndNegativeControlFails) {
  const std::string o = out("lem");
  EXPECT_EQ(run({"verify-lemmas", "--config", config("lem", kSmallLemmas), "--out", o, "--threads", "2"}), 0);
  const std::string csv = slurp(o + "/lemmas.csv");
  EXPECT_EQ(csv.rfind("# degenflow verify-lemmas\n# seed=20240601\n# config_hash=", 0), 0u);
  EXPECT_NE(csv.find("lemma_id,p,delta,n,samples,min_gap"), std::string::npos);
  EXPECT_TRUE(fs::exists(o + "/manifest.txt"));

  const std::string neg = std::string(kSmallLemmas) + "negate = young_type\n";
  EXPECT_EQ(run({"verify-lemmas", "--config", config("neg", neg), "--out", out("neg")}), 1);
  EXPECT_EQ(run({"verify-lemmas", "--config", config("empty", "[lemmas]\np_values =\n"), "--out", out("e")}), 2);
}

TEST_F(Cli, SeedFlagIsRecorded) {
  const std::string o = out("seed");
  EXPECT_EQ(run({"verify-lemmas", "--config", config("lem", kSmallLemmas), "--out", o, "--seed", "7"}), 0);
  EXPECT_NE(slurp(o + "/lemmas.csv").find("# seed=7\n"), std::string::npos);
  EXPECT_NE(slurp(o + "/manifest.txt").find("seed=7\n"), std::string::npos);
}

TEST_F(Cli, RerunsAreByteIdentical) {
  const std::string cfg = config("lem", kSmallLemmas);
  ASSERT_EQ(run({"verify-lemmas", "--config", cfg, "--out", out("a"), "--threads", "1"}), 0);
  ASSERT_EQ(run({"verify-lemmas", "--config", cfg, "--out", out("b"), "--threads", "3"}), 0);
  EXPECT_EQ(slurp(out("a") + "/lemmas.csv"), slurp(out("b") + "/lemmas.csv"));
  const std::string m = config("m", kManufactured);
  ASSERT_EQ(run({"solve", "--config", m, "--out", out("s1")}), 0);
  ASSERT_EQ(run({"solve", "--config", m, "--out", out("s2")}), 0);
  for (const char* f : {"/convergence.csv", "/errors.csv", "/u_final.csv", "/u.dgfl"})
    EXPECT_EQ(slurp(out("s1") + f), slurp(out("s2") + f)) << f;
}

TEST_F(Cli, SolveConstantData) {
  const std::string o = out("c");
  const std::string cfg = config("c", "[grid]\npoints = 9\nlevels = 4\n[data]\nvalue = 2.5\n[params]\neps = 0.5\n");
  ASSERT_EQ(run({"solve", "--config", cfg, "--out", o}), 0);
  const auto c = config::load(cfg);
  const ScalarField u = io::read_snapshot(o + "/u.dgfl", c.grid);
  for (double v : u.values) EXPECT_NEAR(v, 2.5, 1e-12);
  std::istringstream log(slurp(o + "/convergence.csv"));
  std::string line;
  int rows = 0;
  while (std::getline(log, line))
    if (!line.empty() && line[0] != '#' && line.rfind("step", 0) != 0) ++rows;
  EXPECT_EQ(rows, 3);
  EXPECT_FALSE(fs::exists(o + "/errors.csv"));
}

TEST_F(Cli, SolveManufacturedWritesErrorTable) {
  const std::string o = out("m");
  ASSERT_EQ(run({"solve", "--config", config("m", kManufactured), "--out", o}), 0);
  const std::string err = slurp(o + "/errors.csv");
  EXPECT_NE(err.find("level,t,l2_error,linf_error\n"), std::string::npos);
  EXPECT_NE(err.find("\n5,0.1,"), std::string::npos);
}

TEST_F(Cli, SolverFailureExitsOne) {
  const std::string cfg = std::string(kManufactured) + "[solver]\nmax_iter = 1\nfallback = false\n";
  EXPECT_EQ(run({"solve", "--config", config("f", cfg), "--out", out("f")}), 1);
}

TEST_F(Cli, EstimatesOnDegenerateProfileHaveZeroGatedLhs) {
  const std::string o = out("est");
  const std::string cfg = config("d", R"([params]
p = 3
eps = 0.1
[grid]
points = 41
dt = 0.015625
levels = 17
[data]
initial = plateau
amplitude = 0.8
[estimates]
radius = 0.5
h_multiples = 2, 1
)");
  ASSERT_EQ(run({"estimates", "--config", cfg, "--out", o}), 0);
  std::istringstream is(slurp(o + "/estimates.csv"));
  std::string line;
  int rows = 0;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("estimate_id", 0) == 0) continue;
    ++rows;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
    ASSERT_EQ(cols.size(), 11u) << line;
    // The gate (|Du| > 1 + delta) is never open, and |Du| <= 1 kills the excess.
    if (cols[0] != "uniform_estimate" && cols[0] != "comparison") {
      EXPECT_EQ(cols[7], "0") << line;
    }
  }
  EXPECT_EQ(rows, 6);
  EXPECT_TRUE(fs::exists(o + "/estimates.txt"));
}

TEST_F(Cli, EstimatesFromSnapshot) {
  std::string base = kManufactured;
  base.replace(base.find("points = 17"), 11, "points = 33");
  ASSERT_EQ(run({"solve", "--config", config("m", base), "--out", out("s")}), 0);
  const std::string est = base + "[estimates]\nradius = 0.3\nh_multiples = 1\nsnapshot = " + out("s") + "/u.dgfl\n";
  EXPECT_EQ(run({"estimates", "--config", config("e", est), "--out", out("e")}), 0);
  const std::string missing = base + "[estimates]\nsnapshot = " + out("nope") + "/u.dgfl\n";
  EXPECT_EQ(run({"estimates", "--config", config("x", missing), "--out", out("x")}), 2);
  const std::string big_h = base + "[estimates]\nradius = 0.3\nh_multiples = 2\n";
  EXPECT_EQ(run({"estimates", "--config", config("h", big_h), "--out", out("h")}), 2);
}

TEST_F(Cli, EpsSweepModes) {
  const std::string base = R"([params]
p = 3
eps = 0.1
[grid]
points = 17
dt = 0.03125
levels = 9
[data]
initial = manufactured
source = smooth
mollify = true
[sweep]
)";
  const std::string o = out("sw");
  EXPECT_EQ(run({"eps-sweep", "--config", config("a", base + "eps_values = 0.1, 0.05, 0.025, 0.0125\n"), "--out", o,
                 "--threads", "4"}),
            0);
  std::istringstream is(slurp(o + "/distances.csv"));
  std::string line;
  int rows = 0;
  while (std::getline(is, line))
    if (!line.empty() && line[0] != '#' && line.rfind("eps1", 0) != 0) ++rows;
  EXPECT_EQ(rows, 3);
  EXPECT_EQ(run({"eps-sweep", "--config", config("b", base + "eps_values = 0.1\n"), "--out", out("b")}), 0);
  EXPECT_EQ(run({"eps-sweep", "--config", config("c", base + "eps_values = 0.1, 0.07, 0.02\n"), "--out", out("c")}), 0);
  // An impossible slack turns the monotonicity check into a failure.
  EXPECT_EQ(run({"eps-sweep", "--config", config("d", base + "eps_values = 0.1, 0.05, 0.025\nslack = -0.9\n"), "--out",
                 out("d")}),
            1);
}
