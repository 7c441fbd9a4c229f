#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "anonfd/io.hpp"
#include "cli.hpp"

using namespace anonfd;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("anonfd-cli-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const json& j) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << j.dump(2);
    return p.string();
  }

  int call(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return cli::main(args, out_, err_);
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

json scenario(const std::string& algorithm, int n, int f) {
  return {{"schema", 1}, {"algorithm", algorithm}, {"n", n}, {"f", f}};
}

}  // namespace

TEST_F(Cli, RunPassWritesTraceAndReport) {
  json s = scenario("alg1", 3, 1);
  s["inputs"] = {0, 1, 1};
  s["seed"] = 4;
  const std::string file = write("s.json", s);
  EXPECT_EQ(call({"run", file, "--out", path("out")}), cli::kPass) << err_.str();
  EXPECT_NE(out_.str().find("PASS agreement"), std::string::npos);
  EXPECT_TRUE(fs::exists(path("out/seed-4.trace.jsonl")));
  json report = json::parse(slurp(path("out/seed-4.report.json")));
  EXPECT_TRUE(report.is_array());
  EXPECT_FALSE(report.empty());
}

TEST_F(Cli, RunIsByteIdentical) {
  json s = scenario("alg2", 5, 2);
  s["inputs"] = "random";
  s["crash"] = "random";
  const std::string file = write("s.json", s);
  ASSERT_EQ(call({"run", file, "--seed", "17", "--out", path("a")}), cli::kPass);
  ASSERT_EQ(call({"run", file, "--seed", "17", "--out", path("b")}), cli::kPass);
  EXPECT_EQ(slurp(path("a/seed-17.trace.jsonl")), slurp(path("b/seed-17.trace.jsonl")));
  EXPECT_EQ(slurp(path("a/seed-17.report.json")), slurp(path("b/seed-17.report.json")));
  EXPECT_FALSE(slurp(path("a/seed-17.trace.jsonl")).empty());
}

// A failing run prints a command that reproduces exactly the same trace.
TEST_F(Cli, FailureCarriesWorkingReproduction) {
  json s = scenario("alg1", 4, 3);
  s["inputs"] = "random";
  s["crash"] = "random";
  s["mutation"] = "alg1-min";
  const std::string file = write("mut.json", s);
  json c = {{"schema", 1}, {"scenario_file", "mut.json"}, {"seeds", {{"from", 0}, {"count", 50}}}};
  const std::string camp = write("camp.json", c);
  ASSERT_EQ(call({"campaign", camp, "--jobs", "1", "--out", path("summary.json")}), cli::kPropertyFailure);
  const std::string text = out_.str();
  const auto at = text.find("| reproduce: anonfd run ");
  ASSERT_NE(at, std::string::npos) << text;
  std::string line = text.substr(at + 20, text.find('\n', at) - at - 20);
  std::istringstream words(line);
  std::vector<std::string> args;
  for (std::string w; words >> w;) args.push_back(w);
  ASSERT_GE(args.size(), 4u);
  EXPECT_EQ(args[0], "run");
  EXPECT_EQ(args[2], "--seed");
  args.push_back("--out");
  args.push_back(path("repro"));
  EXPECT_EQ(call(args), cli::kPropertyFailure);
  EXPECT_NE(out_.str().find("FAIL"), std::string::npos);
  json summary = json::parse(slurp(path("summary.json")));
  EXPECT_GT(summary["failed_runs"].get<int>(), 0);

  // The saved trace replays to the same verdict.
  const std::string trace = path("repro/seed-" + args[3] + ".trace.jsonl");
  EXPECT_EQ(call({"check", trace}), cli::kPropertyFailure);
}

TEST_F(Cli, CampaignSummaryAndOverrides) {
  json s = scenario("alg2", 5, 2);
  s["inputs"] = "random";
  s["crash"] = "random";
  const std::string file = write("s.json", s);
  EXPECT_EQ(call({"campaign", file, "--count", "20", "--seed", "5", "--policy", "fifo", "--out",
                  path("sum.json")}),
            cli::kPass)
      << err_.str();
  json summary = json::parse(slurp(path("sum.json")));
  EXPECT_EQ(summary["runs"], 20);
  EXPECT_NE(out_.str().find("seeds 5..24"), std::string::npos);
  EXPECT_EQ(call({"campaign", file, "--count", "0"}), cli::kUsageError);
  EXPECT_EQ(call({"campaign", file, "--policy", "lifo"}), cli::kUsageError);
}

TEST_F(Cli, RandomThetaReportsRate) {
  const std::string file = write("rt.json", scenario("random-theta", 5, 2));
  EXPECT_EQ(call({"campaign", file, "--count", "30", "--out", path("sum.json")}), cli::kPass) << out_.str();
  EXPECT_NE(out_.str().find("theta success rate: 30/30"), std::string::npos) << out_.str();
  json summary = json::parse(slurp(path("sum.json")));
  EXPECT_EQ(summary["theta_success"]["successes"], 30);

  json collide = scenario("random-theta", 2, 0);
  collide["forced_ids"] = {"5", "5"};
  const std::string bad = write("collide.json", collide);
  EXPECT_EQ(call({"run", bad, "--out", path("c")}), cli::kPropertyFailure);
  EXPECT_NE(out_.str().find("FAIL distinct-ids"), std::string::npos) << out_.str();
}

TEST_F(Cli, Explore) {
  const std::string file = write("e.json", scenario("alg1", 2, 1));
  EXPECT_EQ(call({"explore", file, "--out", path("ex")}), cli::kPass) << err_.str();
  json summary = json::parse(slurp(path("ex/explore.json")));
  EXPECT_FALSE(summary["partial"].get<bool>());

  json mutant = scenario("alg1", 2, 1);
  mutant["mutation"] = "alg1-min";
  const std::string mfile = write("m.json", mutant);
  EXPECT_EQ(call({"explore", mfile, "--out", path("mx")}), cli::kPropertyFailure);
  EXPECT_TRUE(fs::exists(path("mx/violation-0.jsonl")));
  EXPECT_NE(out_.str().find("replay: anonfd check"), std::string::npos);
  EXPECT_EQ(call({"check", path("mx/violation-0.jsonl")}), cli::kPropertyFailure);

  EXPECT_EQ(call({"explore", write("big.json", scenario("alg1", 4, 1))}), cli::kUsageError);
  EXPECT_NE(err_.str().find("n"), std::string::npos);
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(call({}), cli::kUsageError);
  EXPECT_EQ(call({"frobnicate"}), cli::kUsageError);
  EXPECT_EQ(call({"run"}), cli::kUsageError);
  EXPECT_EQ(call({"run", path("missing.json")}), cli::kUsageError);
  EXPECT_EQ(call({"run", write("bad.json", scenario("alg1", 3, 3))}), cli::kUsageError);
  EXPECT_NE(err_.str().find("'f'"), std::string::npos) << err_.str();
  std::ofstream(path("garbage.jsonl")) << "not json\n";
  EXPECT_EQ(call({"check", path("garbage.jsonl"), "--algorithm", "alg1"}), cli::kUsageError);
  EXPECT_EQ(call({"--help"}), cli::kPass);
}

TEST_F(Cli, CheckWithWrongAlgorithmIsUsageError) {
  json s = scenario("alg1", 3, 1);
  const std::string file = write("s.json", s);
  ASSERT_EQ(call({"run", file, "--out", path("o")}), cli::kPass);
  EXPECT_EQ(call({"check", path("o/seed-0.trace.jsonl"), "--algorithm", "alg2"}), cli::kUsageError);
  EXPECT_EQ(call({"check", path("o/seed-0.trace.jsonl"), "--out", path("r.json")}), cli::kPass);
  EXPECT_TRUE(json::parse(slurp(path("r.json"))).is_array());
}

TEST_F(Cli, ValidateHistory) {
  DetectorHistory h(ValueRange::count, 3, 5, 0);
  for (int i = 1; i <= 3; ++i) h.set_from(ProcessId(i), 2, 1);
  const std::string file = write("h.json", history_to_json(h, DetectorKind::n));
  const FailurePattern F(3, {{ProcessId(2), 2}});
  const std::string pat = write("f.json", pattern_to_json({3, 1}, F));
  EXPECT_EQ(call({"validate-history", file, "--pattern", pat}), cli::kPass) << err_.str();
  EXPECT_NE(out_.str().find("PASS"), std::string::npos);

  // Without the crash the count over-reports.
  EXPECT_EQ(call({"validate-history", file}), cli::kPropertyFailure);
  EXPECT_NE(out_.str().find("reproduce: anonfd validate-history"), std::string::npos);

  const std::string inline_pattern = pattern_to_json({3, 1}, F).dump();
  EXPECT_EQ(call({"validate-history", file, "--pattern", inline_pattern}), cli::kPass);
  EXPECT_EQ(call({"validate-history", file, "--kind", "Theta", "--pattern", pat}), cli::kUsageError);
  EXPECT_EQ(call({"validate-history", file, "--kind", "DiamondN", "--pattern", pat}), cli::kPass);
  EXPECT_EQ(call({"validate-history", file, "--kind", "Nope"}), cli::kUsageError);
  EXPECT_EQ(call({"validate-history", file, "--pattern", "{broken"}), cli::kUsageError);
}
