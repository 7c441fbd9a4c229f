#include <gtest/gtest.h>

#include <random>

#include "anonfd/io.hpp"
#include "anonfd/program.hpp"
#include "anonfd/transforms.hpp"
#include "anonfd/verify.hpp"

using namespace anonfd;

namespace {

ProcessId P(int i) { return ProcessId(i); }

ScenarioConfig scenario(int n, int f, DetectorKind oracle, DeliveryMode mode,
                        std::map<ProcessId, Time> crash = {}, std::uint64_t seed = 1) {
  ScenarioConfig sc;
  sc.cfg = {n, f};
  sc.inputs.assign(static_cast<std::size_t>(n), 0);
  sc.pattern = FailurePattern(n, std::move(crash));
  sc.oracle.kind = oracle;
  sc.oracle.profile = {0, PreConvergence::optimistic};
  sc.mode = mode;
  sc.seed = seed;
  sc.horizon = 4000;
  return sc;
}

FailurePattern random_pattern(const SystemConfig& cfg, Time latest, std::mt19937_64& rng) {
  std::map<ProcessId, Time> crash;
  const int k = static_cast<int>(rng() % static_cast<std::uint64_t>(cfg.f + 1));
  while (static_cast<int>(crash.size()) < k) {
    crash[P(1 + static_cast<int>(rng() % static_cast<std::uint64_t>(cfg.n)))] =
        static_cast<Time>(rng() % static_cast<std::uint64_t>(latest + 1));
  }
  return FailurePattern(cfg.n, crash);
}

OracleProfile random_profile(Time horizon, std::mt19937_64& rng) {
  return {static_cast<Time>(rng() % static_cast<std::uint64_t>(horizon + 1)),
          static_cast<PreConvergence>(rng() % 3)};
}

std::vector<ProcessSet> outputs_of(const Trace& t, ProcessId p) {
  std::vector<ProcessSet> out;
  for (const Event& e : t.events) {
    if (e.kind == EventKind::output && e.process == p) out.push_back(std::get<ProcessSet>(e.reading));
  }
  return out;
}

}  // namespace

TEST(Factories, ModeAndMutationChecks) {
  SystemConfig cfg{3, 1};
  EXPECT_THROW(diamond_n_to_diamond_p(cfg, DeliveryMode::anonymous), TransformError);
  EXPECT_THROW(n_to_p(cfg, DeliveryMode::anonymous), TransformError);
  EXPECT_THROW(theta_to_omega(cfg, DeliveryMode::anonymous), TransformError);
  EXPECT_THROW(randomized_n_to_theta(cfg, DeliveryMode::identified), TransformError);
  EXPECT_THROW(n_to_p(cfg, DeliveryMode::identified, {}, Mutation::alg1_min), TransformError);
  EXPECT_NO_THROW(n_to_p(cfg, DeliveryMode::identified, {}, Mutation::alg5_no_guard));
  ProgramOptions opts;
  opts.mutation = Mutation::alg5_wait_one;
  EXPECT_THROW(make_factory(Program::alg4, cfg, opts), std::invalid_argument);
}

TEST(Alg4, NoCrashNoSuspicion) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ScenarioConfig sc = scenario(3, 1, DetectorKind::diamond_n, DeliveryMode::identified, {}, seed);
    Trace t = run(sc, diamond_n_to_diamond_p(sc.cfg, sc.mode, {12}));
    for (int i = 1; i <= 3; ++i) {
      for (const ProcessSet& s : outputs_of(t, P(i))) EXPECT_TRUE(s.empty());
    }
    EXPECT_EQ(t.status, TraceStatus::complete);
  }
}

// When the crashed process's last ALIVE outraces the live ones it is counted
// alive for that round; later rounds suspect it for good.
TEST(Alg4, LateAliveIsCorrectedLater) {
  int wrongly_present = 0;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    ScenarioConfig sc = scenario(3, 1, DetectorKind::diamond_n, DeliveryMode::identified,
                                 {{P(2), static_cast<Time>(3 + seed % 10)}}, seed);
    sc.policy.kind = SchedulerKind::crash_adjacent;
    sc.oracle.profile = {40, PreConvergence::adversarial_random};
    Trace t = run(sc, diamond_n_to_diamond_p(sc.cfg, sc.mode, {25}));
    const Time crash = *sc.pattern.crash_time(P(2));
    for (const Event& e : t.events) {
      if (e.kind == EventKind::output && e.process != P(2) && e.step > crash &&
          !std::get<ProcessSet>(e.reading).contains(P(2))) {
        ++wrongly_present;
        break;
      }
    }
    DetectorHistory out = assemble_output_history(t, ValueRange::process_set, ProcessSet{});
    EXPECT_TRUE(validate_diamond_p(out, t.pattern)) << "seed " << seed;
    for (int i : {1, 3}) EXPECT_TRUE(std::get<ProcessSet>(out.tail(P(i))).contains(P(2)));
  }
  EXPECT_GT(wrongly_present, 0);
}

TEST(Alg5, NoCrashNoSuspicion) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ScenarioConfig sc = scenario(4, 2, DetectorKind::n, DeliveryMode::identified, {}, seed);
    Trace t = run(sc, n_to_p(sc.cfg, sc.mode, {15}));
    for (int i = 1; i <= 4; ++i) {
      for (const ProcessSet& s : outputs_of(t, P(i))) EXPECT_TRUE(s.empty());
    }
  }
}

TEST(Alg5, PerfectAndSkewBounded) {
  std::mt19937_64 rng(8);
  for (std::uint64_t seed = 0; seed < 150; ++seed) {
    ScenarioConfig sc = scenario(4, 2, DetectorKind::n, DeliveryMode::identified, {}, seed);
    sc.pattern = random_pattern(sc.cfg, 80, rng);
    sc.oracle.profile = random_profile(300, rng);
    Trace t = run(sc, n_to_p(sc.cfg, sc.mode, {20}));
    t.meta["algorithm"] = "alg5";
    EXPECT_EQ(check_emulation(t, Program::alg5).verdict, Verdict::pass) << "seed " << seed;
    for (const CheckReport& r : check_lemma_invariants(t, Program::alg5)) {
      EXPECT_EQ(r.verdict, Verdict::pass) << r.property << " seed " << seed;
    }
    // Never a suspicion before the crash.
    for (const Event& e : t.events) {
      if (e.kind != EventKind::output) continue;
      for (ProcessId q : std::get<ProcessSet>(e.reading).members()) {
        auto ct = sc.pattern.crash_time(q);
        ASSERT_TRUE(ct.has_value());
        EXPECT_LE(*ct, e.step);
      }
    }
  }
}

TEST(Alg5, SmallExplorationHasNoFalseSuspicion) {
  ExploreConfig config;
  config.cfg = {3, 1};
  config.inputs = {0, 0, 0};
  config.oracle = DetectorKind::n;
  config.mode = DeliveryMode::identified;
  config.max_crash_round = 1;
  ExploreVisitor visitor;
  std::size_t states = 0;
  visitor.on_state = [&](const StateView& s) {
    ++states;
    EXPECT_FALSE(state_no_false_suspicion(s).has_value());
    EXPECT_FALSE(state_round_skew(s, 2).has_value());
    return true;
  };
  ExploreResult r = explore(config, n_to_p(config.cfg, config.mode, {5}), visitor);
  EXPECT_FALSE(r.partial);
  EXPECT_GT(states, 0u);
}

TEST(ThetaToOmega, AdoptsTheSelfTruster) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const ProcessId leader = P(1 + static_cast<int>(seed % 3));
    ScenarioConfig sc = scenario(3, 1, DetectorKind::theta, DeliveryMode::identified, {}, seed);
    DetectorHistory theta(ValueRange::boolean, 3, sc.horizon, false);
    theta.set_from(leader, 30, true);
    theta.set_from(P(1 + static_cast<int>((seed + 1) % 3)), 0, true);
    theta.set_from(P(1 + static_cast<int>((seed + 1) % 3)), 30, false);
    sc.oracle.history = theta;
    Trace t = run(sc, theta_to_omega(sc.cfg, sc.mode, {40}));
    DetectorHistory omega = assemble_output_history(t, ValueRange::process_id, 1);
    EXPECT_TRUE(validate_omega(omega, t.pattern)) << "seed " << seed;
    for (int i = 1; i <= 3; ++i) EXPECT_EQ(omega.tail(P(i)), DetectorValue(leader.index()));
  }
}

// Local translations on 1000 sampled source histories each.
TEST(Translations, SampledSourcesGiveValidTargets) {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 4);
    SystemConfig cfg{n, n - 1};
    const Time horizon = 30;
    FailurePattern F = random_pattern(cfg, horizon, rng);
    OracleProfile profile = random_profile(horizon, rng);

    DetectorHistory p = sample_history(DetectorKind::p, F, cfg, horizon, profile, rng());
    EXPECT_TRUE(validate_n(suspects_to_count(p), F));
    DetectorHistory dp = sample_history(DetectorKind::diamond_p, F, cfg, horizon, profile, rng());
    EXPECT_TRUE(validate_diamond_n(suspects_to_count(dp), F));
    DetectorHistory om = sample_history(DetectorKind::omega, F, cfg, horizon, profile, rng());
    EXPECT_TRUE(validate_theta(omega_to_theta(om), F));
    DetectorHistory nh = sample_history(DetectorKind::n, F, cfg, horizon, profile, rng());
    EXPECT_TRUE(validate_diamond_n(n_to_diamond_n(nh), F));
  }
}

// The emulated anonymous outputs stay valid under every relabeling.
TEST(Translations, OutputsAreAnonymous) {
  std::mt19937_64 rng(56);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 3);
    SystemConfig cfg{n, n - 1};
    FailurePattern F = random_pattern(cfg, 20, rng);
    OracleProfile profile = random_profile(20, rng);
    const auto perms = Permutation::all(n);
    DetectorHistory count = suspects_to_count(sample_history(DetectorKind::p, F, cfg, 20, profile, rng()));
    EXPECT_EQ(check_permutation_closure(DetectorKind::n, F, count, perms).verdict, Verdict::pass);
    DetectorHistory theta = omega_to_theta(sample_history(DetectorKind::omega, F, cfg, 20, profile, rng()));
    EXPECT_EQ(check_permutation_closure(DetectorKind::theta, F, theta, perms).verdict, Verdict::pass);
  }
}

TEST(Translations, Examples) {
  FailurePattern F(3, {{P(2), 4}});
  DetectorHistory perfect(ValueRange::process_set, 3, 10, ProcessSet{});
  for (int i = 1; i <= 3; ++i) {
    for (Time t = 0; t <= 10; ++t) perfect.set(P(i), t, F.at(t));
  }
  DetectorHistory count = suspects_to_count(perfect);
  EXPECT_EQ(count.at(P(1), 3), DetectorValue(0));
  EXPECT_EQ(count.at(P(1), 4), DetectorValue(1));

  DetectorHistory omega(ValueRange::process_id, 3, 10, 3);
  DetectorHistory theta = omega_to_theta(omega);
  for (Time t = 0; t <= 10; ++t) {
    EXPECT_EQ(theta.at(P(3), t), DetectorValue(true));
    EXPECT_EQ(theta.at(P(1), t), DetectorValue(false));
  }

  // One-way: an eventually-accurate table is not an N history.
  DetectorHistory eventual(ValueRange::count, 3, 10, 2);
  for (int i = 1; i <= 3; ++i) eventual.set_from(P(i), 5, 1);
  EXPECT_TRUE(validate_diamond_n(n_to_diamond_n(eventual), F));
  EXPECT_FALSE(validate_n(eventual, F));
}

TEST(RandomTheta, SingleProcessTrustsItself) {
  ScenarioConfig sc = scenario(1, 0, DetectorKind::n, DeliveryMode::anonymous);
  Trace t = run(sc, randomized_n_to_theta(sc.cfg, sc.mode, {5}));
  DetectorHistory out = assemble_output_history(t, ValueRange::boolean, false);
  EXPECT_EQ(out.tail(P(1)), DetectorValue(true));
}

// With distinct identifiers the largest one ends up as the only self-truster,
// whatever the schedule.
TEST(RandomTheta, MaxIdWinsInEverySchedule) {
  ExploreConfig config;
  config.cfg = {3, 1};
  config.inputs = {0, 0, 0};
  config.oracle = DetectorKind::n;
  config.max_crashes = 0;
  std::vector<std::optional<std::uint64_t>> ids = {std::uint64_t{7}, std::uint64_t{42}, std::uint64_t{3}};
  std::size_t traces = 0;
  ExploreVisitor visitor;
  visitor.on_terminal = [&](const Trace& t) {
    ++traces;
    DetectorHistory out = assemble_output_history(t, ValueRange::boolean, false);
    EXPECT_EQ(out.tail(P(2)), DetectorValue(true));
    EXPECT_EQ(out.tail(P(1)), DetectorValue(false));
    EXPECT_EQ(out.tail(P(3)), DetectorValue(false));
    EXPECT_TRUE(validate_theta(out, t.pattern));
    return true;
  };
  ExploreResult r = explore(config, randomized_n_to_theta(config.cfg, DeliveryMode::anonymous, {3}, 64, ids), visitor);
  EXPECT_FALSE(r.partial);
  EXPECT_GT(traces, 0u);
}

TEST(RandomTheta, ForcedCollisionFails) {
  ScenarioConfig sc = scenario(2, 0, DetectorKind::n, DeliveryMode::anonymous);
  std::vector<std::optional<std::uint64_t>> same = {std::uint64_t{5}, std::uint64_t{5}};
  Trace t = run(sc, randomized_n_to_theta(sc.cfg, sc.mode, {10}, 64, same));
  EXPECT_TRUE(id_collision(t));
  DetectorHistory out = assemble_output_history(t, ValueRange::boolean, false);
  EXPECT_EQ(out.tail(P(1)), DetectorValue(true));
  EXPECT_EQ(out.tail(P(2)), DetectorValue(true));
  EXPECT_FALSE(validate_theta(out, t.pattern));
  EXPECT_EQ(drawn_ids(t), (std::vector<std::uint64_t>{5, 5}));
}

TEST(RandomTheta, IdBits) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    EXPECT_LT(draw_random_id(seed, 4), 16u);
    EXPECT_EQ(draw_random_id(seed), draw_random_id(seed));
  }
  EXPECT_NE(draw_random_id(1), draw_random_id(2));
}

TEST(Emulation, ExportCarriesProvenance) {
  DetectorHistory h(ValueRange::count, 2, 3, 0);
  auto meta = emulated_from(DetectorKind::p, "suspects-to-count", 9);
  nlohmann::json j = history_to_json(h, DetectorKind::n, meta);
  EXPECT_EQ(j["kind"], "N");
  EXPECT_EQ(j["emulated_from"]["source"], "P");
  HistoryFile back = history_from_json(j);
  EXPECT_EQ(back.history, h);
  EXPECT_EQ(back.emulated_from, meta);
}
