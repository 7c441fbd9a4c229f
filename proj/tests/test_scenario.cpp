#include <gtest/gtest.h>

#include "anonfd/scenario.hpp"

using namespace anonfd;
using nlohmann::json;

namespace {

json base(const std::string& algorithm, int n, int f) {
  return {{"schema", 1}, {"algorithm", algorithm}, {"n", n}, {"f", f}};
}

std::string parse_error(const json& j) {
  try {
    parse_scenario(j);
  } catch (const FormatError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Parse, Minimal) {
  ScenarioSpec s = parse_scenario(base("alg2", 5, 2));
  EXPECT_EQ(s.program, Program::alg2);
  EXPECT_EQ(s.cfg.n, 5);
  EXPECT_EQ(s.oracle, DetectorKind::diamond_n);
  EXPECT_FALSE(s.inputs.has_value());
  ASSERT_TRUE(s.crash.has_value());
  EXPECT_TRUE(s.crash->empty());
}

TEST(Parse, ErrorsNameTheField) {
  EXPECT_NE(parse_error(base("alg1", 3, 3)).find("'f'"), std::string::npos);
  json j = base("alg3", 3, 1);
  j["oracle"] = {{"kind", "N"}};
  EXPECT_NE(parse_error(j).find("'oracle.kind'"), std::string::npos);
  // Majority-based algorithms need f < n/2.
  EXPECT_NE(parse_error(base("alg2", 4, 2)).find("'f'"), std::string::npos);
  j = base("alg1", 3, 1);
  j["inputs"] = {0, 1};
  EXPECT_NE(parse_error(j).find("'inputs'"), std::string::npos);
  j["inputs"] = {0, 2, 1};
  EXPECT_NE(parse_error(j).find("'inputs'"), std::string::npos);
  j = base("alg1", 3, 1);
  j["crash"] = {{"1", 3}, {"2", 5}};
  EXPECT_NE(parse_error(j).find("'crash'"), std::string::npos);
  j = base("alg1", 3, 1);
  j["mutation"] = "alg2-decide-any";
  EXPECT_NE(parse_error(j).find("'mutation'"), std::string::npos);
  j["mutation"] = "bogus";
  EXPECT_NE(parse_error(j).find("'mutation'"), std::string::npos);
  j = base("alg1", 3, 1);
  j["horizon"] = 0;
  EXPECT_NE(parse_error(j).find("'horizon'"), std::string::npos);
  j = base("alg1", 3, 1);
  j["schema"] = 2;
  EXPECT_FALSE(parse_error(j).empty());
  EXPECT_THROW(parse_scenario(json{{"schema", 1}, {"n", 3}, {"f", 1}}), FormatError);
  EXPECT_THROW(parse_scenario(json::array()), FormatError);
}

TEST(Parse, RoundTrip) {
  json j = base("alg5", 3, 1);
  j["crash"] = {{"2", 40}};
  j["oracle"] = {{"kind", "N"}, {"profile", "pessimistic"}, {"convergence", 30}};
  j["policy"] = {{"kind", "fifo"}, {"max_age", 50}};
  j["seed"] = 12;
  j["max_rounds"] = 9;
  j["max_round"] = 2;
  ScenarioSpec s = parse_scenario(j);
  ScenarioSpec back = parse_scenario(scenario_to_json(s));
  EXPECT_EQ(scenario_to_json(back), scenario_to_json(s));
  EXPECT_EQ(back.max_round, std::optional<int>(2));
  EXPECT_EQ(back.crash, s.crash);
}

TEST(Resolve, DeterministicPerSeed) {
  json j = base("alg2", 5, 2);
  j["inputs"] = "random";
  j["crash"] = "random";
  ScenarioSpec s = parse_scenario(j);
  bool differs = false;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    ResolvedScenario a = resolve(s, seed);
    ResolvedScenario b = resolve(s, seed);
    EXPECT_EQ(a.scenario.inputs, b.scenario.inputs);
    EXPECT_EQ(a.scenario.pattern, b.scenario.pattern);
    EXPECT_LE(static_cast<int>(a.scenario.pattern.crashed().size()), 2);
    EXPECT_EQ(to_jsonl(run_resolved(a)), to_jsonl(run_resolved(b)));
    if (a.scenario.inputs != resolve(s, seed + 1).scenario.inputs) differs = true;
  }
  EXPECT_TRUE(differs);
}

TEST(Resolve, FixedPartsKept) {
  json j = base("alg1", 3, 1);
  j["inputs"] = {1, 0, 1};
  j["crash"] = {{"3", 7}};
  ScenarioSpec s = parse_scenario(j);
  ResolvedScenario r = resolve(s, 99);
  EXPECT_EQ(r.scenario.inputs, (std::vector<int>{1, 0, 1}));
  EXPECT_EQ(r.scenario.pattern.crash_time(ProcessId(3)), std::optional<Time>(7));
  Trace t = run_resolved(r);
  EXPECT_EQ(t.meta["algorithm"], "alg1");
  EXPECT_EQ(t.meta["seed"], "99");
}

TEST(CheckAll, CoversEveryFamily) {
  json j = base("alg2", 3, 1);
  j["inputs"] = {0, 1, 1};
  Trace t = run_resolved(resolve(parse_scenario(j), 3));
  std::set<std::string> names;
  for (const CheckReport& r : check_all(t, Program::alg2)) names.insert(r.property);
  for (const char* p : {"termination", "agreement", "validity", "irrevocability", "lock-exclusivity",
                        "decision-spread", "no-ghost-steps", "reliability"}) {
    EXPECT_TRUE(names.count(p)) << p;
  }
  json rt = base("random-theta", 3, 1);
  Trace t2 = run_resolved(resolve(parse_scenario(rt), 3));
  names.clear();
  for (const CheckReport& r : check_all(t2, Program::random_theta)) names.insert(r.property);
  EXPECT_TRUE(names.count("distinct-ids"));
  EXPECT_TRUE(names.count("emulated-Theta"));
}

// The aggregated counts are the sums of the per-seed verdicts.
TEST(Campaign, AggregationMatchesPerRunChecks) {
  json j = base("alg1", 4, 3);
  j["inputs"] = "random";
  j["crash"] = "random";
  ScenarioSpec s = parse_scenario(j);
  CampaignSummary summary = run_campaign(s, 10, 40, 2, "alg1.json");
  EXPECT_EQ(summary.runs, 40u);
  std::map<std::string, VerdictCounts> expect;
  for (std::uint64_t seed = 10; seed < 50; ++seed) {
    Trace t = run_resolved(resolve(s, seed));
    for (const CheckReport& r : check_all(t, Program::alg1)) expect[r.property].add(r.verdict);
  }
  ASSERT_EQ(summary.counts.size(), expect.size());
  for (const auto& [name, c] : expect) {
    const VerdictCounts& got = summary.counts.at(name);
    EXPECT_EQ(got.pass, c.pass) << name;
    EXPECT_EQ(got.fail, c.fail) << name;
    EXPECT_EQ(got.vacuous, c.vacuous) << name;
    EXPECT_EQ(got.truncated, c.truncated) << name;
    EXPECT_EQ(got.total(), 40u) << name;
  }
  EXPECT_EQ(summary.failed_runs, 0u);
  json out = to_json(summary);
  EXPECT_EQ(out["runs"], 40);
}

TEST(Campaign, ThreadCountDoesNotChangeResults) {
  json j = base("alg2", 5, 2);
  j["inputs"] = "random";
  j["crash"] = "random";
  ScenarioSpec s = parse_scenario(j);
  CampaignSummary one = run_campaign(s, 0, 30, 1, "x");
  CampaignSummary four = run_campaign(s, 0, 30, 4, "x");
  json a = to_json(one), b = to_json(four);
  a.erase("seconds");
  b.erase("seconds");
  EXPECT_EQ(a, b);
}

TEST(Campaign, ChecksFilterCounts) {
  ScenarioSpec s = parse_scenario(base("alg1", 3, 1));
  CampaignSummary summary = run_campaign(s, 0, 5, 1, "x", {"agreement", "validity"});
  EXPECT_EQ(summary.counts.size(), 2u);
  EXPECT_TRUE(summary.counts.count("agreement"));
}

TEST(CampaignFile, Parse) {
  json c = {{"schema", 1}, {"scenario", base("alg2", 5, 2)}, {"mode", "sweep"},
            {"seeds", {{"from", 3}, {"count", 20}}}, {"checks", {"agreement"}}};
  CampaignSpec spec = parse_campaign(c);
  EXPECT_EQ(spec.mode, CampaignSpec::Mode::sweep);
  EXPECT_EQ(spec.seed_from, 3u);
  EXPECT_EQ(spec.seed_count, 20u);
  EXPECT_EQ(spec.checks, (std::vector<std::string>{"agreement"}));
  c["seeds"]["count"] = 0;
  EXPECT_THROW(parse_campaign(c), FormatError);
  c["seeds"]["count"] = 5;
  c["mode"] = "burst";
  EXPECT_THROW(parse_campaign(c), FormatError);
  c.erase("scenario");
  c["mode"] = "sweep";
  EXPECT_THROW(parse_campaign(c), FormatError);
}

TEST(Explore, SmallProgramIsClean) {
  json j = base("alg1", 2, 1);
  ExploreSummary s = explore_program(parse_scenario(j));
  EXPECT_EQ(s.input_vectors, 4u);
  EXPECT_TRUE(s.clean());
  EXPECT_FALSE(s.totals.partial);
  EXPECT_GT(s.totals.terminals, 0u);
}

TEST(Explore, Alg3UsesRoundCap) {
  ExploreSummary s = explore_program(parse_scenario(base("alg3", 2, 0)));
  EXPECT_TRUE(s.clean());
  EXPECT_GT(s.totals.round_capped, 0u);
}

TEST(Explore, RejectsLargeSystems) {
  EXPECT_THROW(explore_program(parse_scenario(base("alg1", 4, 1))), std::exception);
}

TEST(Explore, MutantLeavesWitness) {
  json j = base("alg1", 2, 1);
  j["mutation"] = "alg1-min";
  ExploreSummary s = explore_program(parse_scenario(j), 2);
  EXPECT_FALSE(s.clean());
  ASSERT_FALSE(s.violations.empty());
  EXPECT_LE(s.violations.size(), 2u);
  EXPECT_TRUE(s.violations[0].report.failed());
}

// Every seeded bug is caught by a campaign of its algorithm.
TEST(Mutants, EveryMutantCaught) {
  struct Case {
    const char* algorithm;
    int n, f;
    const char* mutation;
  };
  for (const Case& c : {Case{"alg1", 4, 3, "alg1-min"}, Case{"alg2", 5, 2, "alg2-lock-always"},
                        Case{"alg2", 5, 2, "alg2-decide-any"}, Case{"alg3", 5, 2, "alg3-no-majority"},
                        Case{"alg5", 5, 2, "alg5-wait-one"}, Case{"alg5", 5, 2, "alg5-no-guard"}}) {
    json j = base(c.algorithm, c.n, c.f);
    j["inputs"] = "random";
    j["crash"] = "random";
    j["mutation"] = c.mutation;
    j["max_rounds"] = 40;
    CampaignSummary s = run_campaign(parse_scenario(j), 0, 1000, 1, "x");
    EXPECT_GT(s.failed_runs, 0u) << c.mutation;
    ASSERT_FALSE(s.failures.empty()) << c.mutation;
    EXPECT_NE(s.failures[0].reproduce.find("--seed"), std::string::npos);
  }
}
