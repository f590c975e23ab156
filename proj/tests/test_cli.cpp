#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "edgtyper/validation.hpp"
#include "scripted_oracle.hpp"

using namespace edgtyper;
using namespace edgtyper::testing;
namespace fs = std::filesystem;

namespace {

ProcessResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), EDG_TYPER_BIN);
  return run_process(args, fs::current_path());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override { dir_ = scratch_dir("cli"); }
  void TearDown() override { fs::remove_all(dir_); }
  std::string repo(const std::string& name) const {
    return (fixtures_dir() / "repos" / name).string();
  }
  fs::path dir_;
};

}  // namespace

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(cli({"--help"}).exit_code, 0);
  EXPECT_EQ(cli({"infer", "--help"}).exit_code, 0);
  EXPECT_EQ(cli({}).exit_code, 2);
  EXPECT_EQ(cli({"frobnicate"}).exit_code, 2);
  EXPECT_EQ(cli({"infer"}).exit_code, 2);
  EXPECT_EQ(cli({"infer", "--repo", (dir_ / "missing").string()}).exit_code, 2);
  EXPECT_EQ(cli({"infer", "--repo", repo("inventory"), "--oracle", "gpt"}).exit_code, 2);
  EXPECT_EQ(cli({"graph", "--repo", repo("inventory"), "--format", "svg"}).exit_code, 2);
  ProcessResult v = cli({"--version"});
  EXPECT_EQ(v.exit_code, 0);
  EXPECT_NE(v.out.find("edg-typer"), std::string::npos);
}

TEST_F(Cli, InferWritesOutputsAndExitsZero) {
  fs::path out = dir_ / "out", report = dir_ / "report.json", progress = dir_ / "progress.csv";
  ProcessResult r = cli({"infer", "--repo", repo("inventory"), "--out", out.string(), "--report",
                         report.string(), "--progress", progress.string()});
  ASSERT_EQ(r.exit_code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("(complete)"), std::string::npos);
  EXPECT_NE(r.out.find("checker errors 0"), std::string::npos);
  EXPECT_TRUE(fs::exists(out / "inventory" / "models.py"));
  EXPECT_NE(slurp(out / "inventory" / "models.py").find("->"), std::string::npos);
  nlohmann::json j = nlohmann::json::parse(slurp(report));
  EXPECT_TRUE(j["finished"].get<bool>());
  EXPECT_EQ(j["terminated_by"], "complete");
  EXPECT_EQ(slurp(progress).rfind("iteration,coverage\n", 0), 0u);
  EXPECT_EQ(cli({"check", "--repo", out.string()}).exit_code, 0);
}

TEST_F(Cli, StopThenResume) {
  fs::path ckpt = dir_ / "state.json";
  ProcessResult stopped = cli({"infer", "--repo", repo("inventory"), "--checkpoint", ckpt.string(),
                               "--stop-after-iterations", "1"});
  EXPECT_EQ(stopped.exit_code, 1) << stopped.err;
  EXPECT_NE(stopped.out.find("(stopped)"), std::string::npos);
  ASSERT_TRUE(fs::exists(ckpt));
  ProcessResult resumed = cli({"infer", "--repo", repo("inventory"), "--checkpoint", ckpt.string()});
  EXPECT_EQ(resumed.exit_code, 0) << resumed.err;
}

TEST_F(Cli, EnvironmentFailuresExitThree) {
  ProcessResult r = cli({"infer", "--repo", repo("inventory"), "--checker-path",
                         "/nonexistent/mypy"});
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_NE(r.err.find("CheckerMissing"), std::string::npos);

  fs::path cfg = dir_ / "http.toml";
  std::ofstream(cfg) << "[oracle]\nurl = \"http://127.0.0.1:1/infer\"\nretries = 0\ntimeout = 2\n";
  r = cli({"infer", "--repo", repo("inventory"), "--oracle", "http", "--config", cfg.string()});
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_NE(r.err.find("OracleUnavailable"), std::string::npos);

  std::ofstream(dir_ / "bad.toml") << "no_such_key = 1\n";
  r = cli({"infer", "--repo", repo("inventory"), "--config", (dir_ / "bad.toml").string()});
  EXPECT_EQ(r.exit_code, 2);
}

TEST_F(Cli, GraphExports) {
  ProcessResult dot = cli({"graph", "--repo", repo("textkit")});
  ASSERT_EQ(dot.exit_code, 0);
  EXPECT_EQ(dot.out.rfind("digraph", 0), 0u);
  fs::path out = dir_ / "g.json";
  ASSERT_EQ(cli({"graph", "--repo", repo("textkit"), "--format", "json", "--out", out.string()})
                .exit_code,
            0);
  nlohmann::json j = nlohmann::json::parse(slurp(out));
  EXPECT_FALSE(j["edges"].empty());
}

TEST_F(Cli, BaselineAndCheck) {
  std::string inherent = (fixtures_dir() / "baseline" / "inherent").string();
  ProcessResult before = cli({"check", "--repo", inherent});
  EXPECT_EQ(before.exit_code, 1);
  EXPECT_EQ(std::count(before.out.begin(), before.out.end(), '\n'), 3);
  fs::path out = dir_ / "base";
  ProcessResult b = cli({"prepare-baseline", "--repo", inherent, "--out", out.string()});
  ASSERT_EQ(b.exit_code, 0) << b.err;
  EXPECT_NE(b.out.find("suppressions 3"), std::string::npos);
  EXPECT_EQ(cli({"check", "--repo", out.string()}).exit_code, 0);
  ProcessResult again = cli({"prepare-baseline", "--repo", out.string()});
  EXPECT_NE(again.out.find("suppressions 0"), std::string::npos);
}

TEST_F(Cli, Evaluate) {
  std::string pred = (fixtures_dir() / "eval_pair" / "pred").string();
  std::string truth = (fixtures_dir() / "eval_pair" / "truth").string();
  fs::path report = dir_ / "eval.json", csv = dir_ / "eval.csv";
  ProcessResult r = cli({"evaluate", "--pred", pred, "--truth", truth, "--report", report.string(),
                         "--csv", csv.string()});
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("TypeExact 0.90"), std::string::npos);
  EXPECT_DOUBLE_EQ(nlohmann::json::parse(slurp(report))["type_exact_rate"].get<double>(), 0.9);
  EXPECT_EQ(slurp(csv).rfind("category,count", 0), 0u);

  fs::path base = dir_ / "base";
  ASSERT_EQ(cli({"prepare-baseline", "--repo", truth, "--out", base.string()}).exit_code, 0);
  ProcessResult j = cli({"evaluate", "--pred", pred, "--truth", truth, "--baseline", base.string(),
                         "--format", "json"});
  ASSERT_EQ(j.exit_code, 0) << j.err;
  nlohmann::json parsed = nlohmann::json::parse(j.out);
  EXPECT_TRUE(parsed.contains("introduced_errors"));
}
