#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lpvbound/example_model.hpp"
#include "lpvbound/harness.hpp"

namespace lpv {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class HarnessTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("lpvbound_harness_" + std::string(::testing::UnitTest::GetInstance()
                                                   ->current_test_info()
                                                   ->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write_json(const std::string& name, const json& j) const {
    io::write_json_file(path(name), j);
    return path(name);
  }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  static int run_cli(const std::string& args) {
    const std::string cmd = std::string(LPVBOUND_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  json switching_config(const std::string& out) const {
    return {{"model", "paper-example"},
            {"model_hat", "identify"},
            {"identification", {{"node_spacing", 0.05}}},
            {"schedule",
             {{"type", "piecewise-constant"},
              {"delta", 10},
              {"values", {0.1, 0.25, 0.4, 0.2, 0.35, 0.15, 0.3, 0.4}}}},
            {"input", {{"type", "constant"}, {"value", 1.0}}},
            {"horizon", 79},
            {"out", out}};
  }

  fs::path dir_;
};

TEST_F(HarnessTest, CertifyExampleSucceeds) {
  const std::string cfg = write_json("cfg.json", switching_config(path("out")));
  EXPECT_EQ(run_cli("certify --config " + cfg), 0);
  const json report = io::read_json_file(path("out/certify.json"));
  EXPECT_EQ(report["status"], "certified");
  EXPECT_TRUE(report["equivalence"]["equivalent"].get<bool>());
}

TEST_F(HarnessTest, DoubledInputMatrixExitsWithEquivalenceFailure) {
  const LpvModel s = example::two_state_model();
  const LpvModel doubled(s.A(), MatrixFamily::constant(2.0 * Matrix::Ones(2, 1), 1), s.C(),
                         s.box());
  json cfg = switching_config(path("out"));
  cfg["model_hat"] = write_json("hat.json", io::to_json(doubled));
  EXPECT_EQ(run_cli("certify --config " + write_json("cfg.json", cfg)), harness::kEquivalence);
  EXPECT_EQ(run_cli("bound --config " + path("cfg.json")), harness::kEquivalence);
}

TEST_F(HarnessTest, UnstableModelExitsWithStabilityFailure) {
  Matrix a(2, 2);
  a << 1.05, 0.3, 0.0, 0.2;
  const LpvModel s = LpvModel::constant({a, Matrix::Ones(2, 1), Matrix::Ones(1, 2)},
                                        SchedulingBox::interval(0.1, 0.4, 7));
  json cfg = switching_config(path("out"));
  cfg["model"] = write_json("model.json", io::to_json(s));
  cfg["model_hat"] = path("model.json");
  EXPECT_EQ(run_cli("certify --config " + write_json("cfg.json", cfg)), harness::kStability);
}

TEST_F(HarnessTest, MissingConfigIsIoError) {
  EXPECT_EQ(run_cli("certify --config " + path("absent.json")), harness::kIo);
  EXPECT_EQ(run_cli("bogus"), harness::kUsage);
}

TEST_F(HarnessTest, ConstantTransformGivesZeroEnvelopeAndNoViolation) {
  const LpvModel s = example::two_state_model();
  Matrix t(2, 2);
  t << 1.0, 0.5, 0.0, 2.0;
  json cfg = switching_config(path("out"));
  cfg["model_hat"] = write_json("hat.json", io::to_json(make_frozen_equivalent(
                                                s, MatrixFamily::constant(t, 1))));
  harness::ExperimentConfig c = harness::config_from_json(cfg);
  std::ostringstream out, err;
  EXPECT_EQ(harness::cmd_bound(c, out, err), harness::kOk) << err.str();
  const json summary = io::read_json_file(path("out/summary.json"));
  EXPECT_LT(summary["constants"]["K_M_signal"].get<double>(), 1e-8);
  EXPECT_LT(summary["max_measured"].get<double>(), 1e-9);
  EXPECT_EQ(summary["violations"].get<std::size_t>(), 0u);
}

TEST_F(HarnessTest, BoundOutputIsDeterministicWithOneRowPerSample) {
  const std::string cfg = write_json("cfg.json", switching_config(path("a")));
  ASSERT_EQ(run_cli("bound --config " + cfg), 0);
  ASSERT_EQ(run_cli("bound --config " + cfg + " --out " + path("b")), 0);
  const std::string a = slurp(path("a/bound.csv"));
  EXPECT_EQ(a, slurp(path("b/bound.csv")));
  EXPECT_EQ(slurp(path("a/summary.json")), slurp(path("b/summary.json")));
  std::size_t lines = 0;
  for (char ch : a) lines += ch == '\n' ? 1 : 0;
  EXPECT_EQ(lines, 1u + 80u);  // header + horizon + 1 rows
  EXPECT_TRUE(fs::exists(path("a/plot.gp")));
}

TEST_F(HarnessTest, DwellOverrideOutsideClassIsRejected) {
  const std::string cfg = write_json("cfg.json", switching_config(path("out")));
  EXPECT_EQ(run_cli("bound --config " + cfg + " --delta 11"), harness::kUsage);
  EXPECT_EQ(run_cli("bound --config " + cfg + " --delta 5"), 0);
}

TEST_F(HarnessTest, ThresholdsReportVerifications) {
  json cfg = switching_config(path("out"));
  cfg["epsilon"] = 1e-3;
  harness::ExperimentConfig c = harness::config_from_json(cfg);
  std::ostringstream out, err;
  ASSERT_EQ(harness::cmd_thresholds(c, out, err), harness::kOk) << err.str();
  const json j = io::read_json_file(path("out/thresholds.json"));
  EXPECT_TRUE(j["delta_m_verification"]["passed"].get<bool>());
  EXPECT_TRUE(j["alpha_m_verification"]["passed"].get<bool>());
  EXPECT_TRUE(j["delta_step_verification"]["passed"].get<bool>());
  EXPECT_GE(j["delta_m"].get<std::size_t>(), 1u);
}

TEST_F(HarnessTest, ReproduceExampleWritesFigures) {
  EXPECT_EQ(run_cli("reproduce-example --out " + path("ex")), 0);
  for (const char* f : {"fig1.csv", "fig2.csv", "fig3.csv", "fig1.gp", "provenance.json",
                        "summary.json"}) {
    EXPECT_TRUE(fs::exists(path(std::string("ex/") + f))) << f;
  }
  const json summary = io::read_json_file(path("ex/summary.json"));
  EXPECT_TRUE(summary["max_difference_increases_with_frequency"].get<bool>());
}

TEST_F(HarnessTest, GridEnvironmentOverride) {
  ::setenv("LPV_GRID_POINTS", "11", 1);
  const harness::LoadedPair pair = harness::load_pair(harness::ExperimentConfig{});
  ::unsetenv("LPV_GRID_POINTS");
  EXPECT_EQ(pair.s.box().grid_points_per_axis(), 11);
  ::setenv("LPV_GRID_POINTS", "1", 1);
  EXPECT_THROW(harness::grid_points_from_env(), harness::ConfigError);
  ::unsetenv("LPV_GRID_POINTS");
}

}  // namespace
}  // namespace lpv
