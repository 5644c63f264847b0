#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "ehcoop/cli.hpp"

namespace ehcoop {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "ehcoop");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ehcoop_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string config(const std::string& name, const std::string& body) {
    const auto p = dir_ / name;
    std::ofstream(p) << body;
    return p.string();
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  }

  fs::path dir_;
};

TEST_F(CliTest, ExamplePrintsTotals) {
  const auto r = run({"example"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("sum(P_d + delta_r) = 14.0"), std::string::npos);
  EXPECT_NE(r.out.find("R_p = 3.0073"), std::string::npos);
}

TEST_F(CliTest, SolveZeroHarvestWritesOutputs) {
  const auto cfg = config("zero.json", R"({"theta_p": 0, "theta_s": 0})");
  const auto out = (dir_ / "run").string();
  const auto r = run({"solve", "--config", cfg, "--out", out, "--trace"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"report.json", "audit.json", "instance.json", "trace.csv", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(fs::path(out) / f)) << f;
  }
  const auto report = nlohmann::json::parse(slurp(fs::path(out) / "report.json"));
  EXPECT_EQ(report["objective"], 0.0);
  const auto manifest = nlohmann::json::parse(slurp(fs::path(out) / "manifest.json"));
  EXPECT_EQ(manifest["command"], "solve");
  EXPECT_EQ(manifest["config"]["theta_p"], 0.0);
}

TEST_F(CliTest, SolveLoadsEmbeddedInstance) {
  const auto gen = run({"generate", "--seed", "4", "--index", "2"});
  ASSERT_EQ(gen.code, 0);
  const auto cfg = config("inst.json", gen.out);
  const auto r = run({"solve", "--config", cfg});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("status"), std::string::npos);
}

TEST_F(CliTest, CoopprobWithoutEnergyIsZero) {
  const auto cfg = config("zero.json", R"({"theta_p": 0, "theta_s": 0})");
  const auto r = run({"coopprob", "--config", cfg, "--rs-from", "0.5", "--rs-to", "1.5", "--steps",
                      "3", "--realizations", "4", "--seed", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "rs_bar,p_joint,p_info,realizations\n0.5,0,0,4\n1,0,0,4\n1.5,0,0,4\n");
}

TEST_F(CliTest, RegionAndBsweepEmitHeaders) {
  const auto cfg = config("c.json", R"({"n_slots": 3})");
  const auto region = run({"region", "--config", cfg, "--rs-from", "0", "--rs-to", "1", "--steps",
                           "2", "--mode", "both"});
  ASSERT_EQ(region.code, 0) << region.err;
  EXPECT_EQ(region.out.rfind("rs_bar,rp_joint,rp_info,rp_nocoop\n", 0), 0u);
  const auto bs = run({"bsweep", "--config", cfg, "--bmax-from", "0", "--bmax-to", "2", "--steps",
                       "2", "--realizations", "3"});
  ASSERT_EQ(bs.code, 0) << bs.err;
  EXPECT_EQ(bs.out.rfind("b_max,rp_joint,rp_info,realizations\n", 0), 0u);
}

TEST_F(CliTest, SweepCsvIsReproducible) {
  const auto cfg = config("c.json", R"({"n_slots": 4})");
  const std::vector<std::string> base{"coopprob", "--config", cfg,   "--rs-to", "2",
                                      "--steps",  "3",      "--realizations", "6", "--seed", "9"};
  auto one = base, many = base;
  one.insert(one.end(), {"--workers", "1"});
  many.insert(many.end(), {"--workers", "3"});
  EXPECT_EQ(run(one).out, run(many).out);
}

TEST_F(CliTest, Errors) {
  EXPECT_NE(run({"solve", "--bogus"}).code, 0);
  EXPECT_NE(run({"solve", "--config", (dir_ / "missing.json").string()}).code, 0);
  const auto bad = config("bad.json", R"({"unknown_key": 1})");
  EXPECT_NE(run({"solve", "--config", bad}).code, 0);
  const auto long_cfg = config("n4.json", R"({"n_slots": 4})");
  const auto r = run({"oracle", "--config", long_cfg});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("at most 3"), std::string::npos);
  EXPECT_NE(run({}).code, 0);
}

TEST_F(CliTest, OracleOnTinyInstance) {
  const auto cfg = config(
      "tiny.json",
      R"({"n_slots": 1, "alpha": 1, "b_max": 10, "rs_bar": 0.4054651081081644,
          "channels": {"h_p": [1], "h_sp": [2], "h_ss": [1]},
          "harvests": {"e_p": [2], "e_s": [0]}})");
  const auto r = run({"oracle", "--config", cfg, "--grid-step", "0.01"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_TRUE(j["feasible"].get<bool>());
  EXPECT_NEAR(j["objective"].get<double>(), 1.386294, 1e-3);
}

}  // namespace
}  // namespace ehcoop
