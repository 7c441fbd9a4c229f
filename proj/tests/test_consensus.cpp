#include <gtest/gtest.h>

#include <set>

#include "anonfd/consensus.hpp"
#include "anonfd/verify.hpp"

using namespace anonfd;

namespace {

ProcessId P(int i) { return ProcessId(i); }

ScenarioConfig scenario(int n, int f, std::vector<int> inputs, DetectorKind oracle,
                        std::map<ProcessId, Time> crash = {}, std::uint64_t seed = 1) {
  ScenarioConfig sc;
  sc.cfg = {n, f};
  sc.inputs = std::move(inputs);
  sc.pattern = FailurePattern(n, std::move(crash));
  sc.oracle.kind = oracle;
  sc.oracle.profile = {0, PreConvergence::optimistic};
  sc.policy.kind = SchedulerKind::random;
  sc.seed = seed;
  sc.horizon = default_horizon(sc.cfg);
  return sc;
}

void expect_consensus(const Trace& t) {
  for (const CheckReport& r : check_consensus(t)) {
    EXPECT_EQ(r.verdict, Verdict::pass) << r.property << ": " << r.detail;
  }
}

std::vector<std::vector<int>> binary_vectors(int n) {
  std::vector<std::vector<int>> out;
  for (int mask = 0; mask < (1 << n); ++mask) {
    std::vector<int> v;
    for (int i = 0; i < n; ++i) v.push_back((mask >> i) & 1);
    out.push_back(v);
  }
  return out;
}

DetectorHistory theta_leader(int n, Time horizon, ProcessId leader, Time from) {
  DetectorHistory h(ValueRange::boolean, n, horizon, false);
  h.set_from(leader, from, true);
  return h;
}

}  // namespace

TEST(Factories, Preconditions) {
  EXPECT_THROW(alg1_automaton({2, 2}), std::invalid_argument);
  EXPECT_NO_THROW(alg1_automaton({4, 3}));
  EXPECT_THROW(alg2_automaton({4, 2}), ConsensusError);
  EXPECT_NO_THROW(alg2_automaton({5, 2}));
  EXPECT_THROW(alg3_automaton({2, 1}), ConsensusError);
  EXPECT_THROW(alg1_automaton({3, 1}, Mutation::alg2_decide_any), ConsensusError);
  EXPECT_THROW(alg3_automaton({3, 1}, Mutation::alg1_min), ConsensusError);
  EXPECT_EQ(required_oracle(ConsensusAlgorithm::alg3), DetectorKind::theta);
  EXPECT_EQ(parse_consensus_algorithm("alg2"), ConsensusAlgorithm::alg2);
}

TEST(InboxTest, MultisetByRound) {
  Inbox in;
  in.add(Message::propose(2, 1));
  in.add(Message::propose(1, 0));
  in.add(Message::propose(1, 0));
  in.add(Message::report(1, 1));
  EXPECT_EQ(in.count(MsgType::propose, 1), 2u);
  EXPECT_EQ(in.of(MsgType::propose, 2).size(), 1u);
  in.discard_before(2);
  EXPECT_EQ(in.count(MsgType::propose, 1), 0u);
  EXPECT_EQ(in.all().size(), 1u);
}

TEST(Alg1, AllZeroDecidesZero) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    ScenarioConfig sc = scenario(4, 3, {0, 0, 0, 0}, DetectorKind::n,
                                 {{P(1 + static_cast<int>(seed % 4)), static_cast<Time>(seed % 20)}}, seed);
    sc.oracle.profile = {static_cast<Time>(seed), PreConvergence::adversarial_random};
    Trace t = run(sc, alg1_automaton(sc.cfg));
    for (const auto& d : t.decisions()) {
      if (d) {
        EXPECT_EQ(*d, 0);
      }
    }
    expect_consensus(t);
  }
}

TEST(Alg1, TwoProcessesDecideOneWithoutCrash) {
  ExploreConfig config;
  config.cfg = {2, 1};
  config.inputs = {0, 1};
  config.max_crashes = 0;
  auto traces = explore_traces(config, alg1_automaton(config.cfg));
  ASSERT_FALSE(traces.empty());
  for (const Trace& t : traces) {
    EXPECT_EQ(t.decisions(), (std::vector<std::optional<int>>{1, 1}));
  }
}

// p3 proposes 1 and may crash at any point of round 1, including right after
// only p1 received its proposal: the survivors still agree everywhere.
TEST(Alg1, LateCrashOfOneHolder) {
  ExploreConfig config;
  config.cfg = {3, 2};
  config.inputs = {0, 0, 1};
  ExploreResult r;
  std::size_t p3_crashes = 0;
  ExploreVisitor visitor;
  visitor.on_terminal = [&](const Trace& t) {
    if (t.pattern.crashed().contains(P(3))) ++p3_crashes;
    for (const CheckReport& rep : check_consensus(t)) {
      EXPECT_NE(rep.verdict, Verdict::fail) << rep.property << ": " << rep.detail;
    }
    return true;
  };
  r = explore(config, alg1_automaton(config.cfg), visitor);
  EXPECT_FALSE(r.partial);
  EXPECT_GT(p3_crashes, 0u);
}

TEST(Alg1, EstimatesAreStubborn) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    ScenarioConfig sc = scenario(4, 3, {static_cast<int>(seed & 1), static_cast<int>((seed >> 1) & 1), 0, 1},
                                 DetectorKind::n, {{P(4), static_cast<Time>(seed % 25)}}, seed);
    sc.oracle.profile = {static_cast<Time>(seed % 40), PreConvergence::adversarial_random};
    Trace t = run(sc, alg1_automaton(sc.cfg));
    t.meta["algorithm"] = "alg1";
    for (const CheckReport& r : check_lemma_invariants(t, Program::alg1)) {
      EXPECT_EQ(r.verdict, Verdict::pass) << r.property << " seed " << seed;
    }
    expect_consensus(t);
  }
}

// A history that admits a crash long before it happens is still a legal N
// history, but Algorithm 1 then waits for too few proposals: p1 (input 1) can
// be heard late by p2 every round, and the two correct processes disagree.
TEST(Alg1, AnticipatingHistoryBreaksAgreement) {
  SystemConfig cfg{3, 1};
  const Time crash = 400;
  DetectorHistory early(ValueRange::count, 3, 500, 1);
  FailurePattern F(3, {{P(3), crash}});
  ASSERT_TRUE(validate_n(early, F));

  int broken = 0;
  for (std::uint64_t seed = 0; seed < 500 && broken == 0; ++seed) {
    ScenarioConfig sc = scenario(3, 1, {1, 0, 0}, DetectorKind::n, {{P(3), crash}}, seed);
    sc.horizon = 500;
    sc.oracle.history = early;
    Trace t = run(sc, alg1_automaton(cfg));
    for (const CheckReport& r : check_consensus(t)) {
      if (r.property == "agreement" && r.failed()) ++broken;
    }
  }
  EXPECT_GT(broken, 0);
}

TEST(Alg2, UnanimousDecidesInFirstRound) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    ScenarioConfig sc = scenario(3, 1, {1, 1, 1}, DetectorKind::diamond_n, {}, seed);
    Trace t = run(sc, alg2_automaton(sc.cfg));
    EXPECT_EQ(t.status, TraceStatus::complete);
    for (const Event& e : t.events) {
      if (e.kind == EventKind::decide) {
        EXPECT_EQ(e.value, 1);
        EXPECT_EQ(e.round, 0);
      }
    }
    expect_consensus(t);
  }
}

// With an exact detector everyone waits for all three proposals, sees both
// values, keeps the min and locks it in the next round.
TEST(Alg2, MixedInputsDecideMin) {
  ExploreConfig config;
  config.cfg = {3, 1};
  config.inputs = {0, 1, 1};
  config.oracle = DetectorKind::n;
  config.max_crashes = 0;
  ExploreResult r;
  auto traces = explore_traces(config, alg2_automaton(config.cfg), &r);
  EXPECT_FALSE(r.partial);
  ASSERT_FALSE(traces.empty());
  for (const Trace& t : traces) {
    EXPECT_EQ(t.decisions(), (std::vector<std::optional<int>>{0, 0, 0}));
  }
}

// A decider broadcasts the next round's Lock before halting, so the others
// still collect enough Lock messages.
TEST(Alg2, DeciderHaltsAfterItsLock) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    ScenarioConfig sc = scenario(5, 2, {0, 1, 1, 0, 1}, DetectorKind::diamond_n,
                                 {{P(2), static_cast<Time>(seed % 50)}}, seed);
    sc.oracle.profile = {static_cast<Time>(seed % 90), PreConvergence::adversarial_random};
    Trace t = run(sc, alg2_automaton(sc.cfg));
    std::map<ProcessId, const Event*> last_send;
    for (const Event& e : t.events) {
      if (e.kind == EventKind::send) last_send[e.process] = &e;
      if (e.kind == EventKind::halt) {
        ASSERT_TRUE(last_send.count(e.process));
        EXPECT_EQ(last_send[e.process]->message.type, MsgType::lock);
      }
    }
    expect_consensus(t);
    t.meta["algorithm"] = "alg2";
    for (const CheckReport& r : check_lemma_invariants(t, Program::alg2)) {
      EXPECT_EQ(r.verdict, Verdict::pass) << r.property;
    }
  }
}

TEST(Alg2, ExhaustiveSmallInstance) {
  ExploreConfig config;
  config.cfg = {3, 1};
  config.oracle = DetectorKind::diamond_n;
  config.inputs = {1, 0, 1};
  ExploreVisitor visitor;
  std::size_t terminals = 0;
  visitor.on_state = [](const StateView& s) { return !state_lock_exclusivity(s).has_value(); };
  visitor.on_terminal = [&](const Trace& t) {
    ++terminals;
    for (const CheckReport& r : check_consensus(t)) {
      EXPECT_NE(r.verdict, Verdict::fail) << r.property << ": " << r.detail;
    }
    return true;
  };
  ExploreResult r = explore(config, alg2_automaton(config.cfg), visitor);
  EXPECT_FALSE(r.partial);
  EXPECT_FALSE(r.stopped);
  EXPECT_GT(terminals, 0u);
}

TEST(Alg3, StableLeaderUnanimousInputs) {
  for (int c : {0, 1}) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      ScenarioConfig sc = scenario(3, 1, {c, c, c}, DetectorKind::theta, {}, seed);
      sc.oracle.history = theta_leader(3, sc.horizon, P(1), 0);
      Trace t = run(sc, alg3_automaton(sc.cfg));
      EXPECT_EQ(t.status, TraceStatus::complete);
      EXPECT_EQ(t.decisions(), (std::vector<std::optional<int>>{c, c, c}));
    }
  }
}

// Nobody trusts itself before step 100, so nobody gets past the first wait.
TEST(Alg3, BlocksUntilSelfTrust) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ScenarioConfig sc = scenario(3, 1, {0, 1, 1}, DetectorKind::theta, {}, seed);
    sc.oracle.history = theta_leader(3, sc.horizon, P(2), 100);
    Trace t = run(sc, alg3_automaton(sc.cfg));
    for (const Event& e : t.events) {
      if (e.kind == EventKind::send) {
        EXPECT_GE(e.step, 100);
      }
    }
    expect_consensus(t);
  }
}

// Two different non-? votes in one round would need two strict majorities
// among the round's reports.
TEST(Alg3, OneVoteValuePerRound) {
  for (std::uint64_t seed = 0; seed < 150; ++seed) {
    ScenarioConfig sc = scenario(5, 2, {0, 1, 0, 1, 1}, DetectorKind::theta,
                                 {{P(1 + static_cast<int>(seed % 5)), static_cast<Time>(seed % 60)}}, seed);
    sc.oracle.profile = {static_cast<Time>(seed * 3 % 200), PreConvergence::adversarial_random};
    Trace t = run(sc, alg3_automaton(sc.cfg));
    std::map<int, std::set<int>> votes;
    for (const Event& e : t.events) {
      if (e.kind == EventKind::send && e.message.type == MsgType::vote && e.message.value != kUnset) {
        votes[e.message.round].insert(e.message.value);
      }
    }
    for (const auto& [round, values] : votes) EXPECT_EQ(values.size(), 1u) << "round " << round;
    expect_consensus(t);
    t.meta["algorithm"] = "alg3";
    for (const CheckReport& r : check_lemma_invariants(t, Program::alg3)) {
      EXPECT_EQ(r.verdict, Verdict::pass) << r.property;
    }
  }
}

// Rounds are unbounded under unfair schedules, so the search is cut at a
// round cap; capped states are neither expanded nor counted as partial.
TEST(Alg3, ExhaustiveUniqueDecide) {
  struct Case { int n, f, max_round, max_crashes; };
  for (const Case& c : {Case{2, 0, 3, 0}, Case{3, 1, 0, 1}}) {
    for (const auto& inputs : binary_vectors(c.n)) {
      ExploreConfig config;
      config.cfg = {c.n, c.f};
      config.oracle = DetectorKind::theta;
      config.inputs = inputs;
      config.max_round = c.max_round;
      config.max_crashes = c.max_crashes;
      ExploreVisitor visitor;
      visitor.on_state = [](const StateView& s) { return !state_unique_decide(s).has_value(); };
      visitor.on_terminal = [&](const Trace& t) {
        for (const CheckReport& r : check_consensus(t)) {
          EXPECT_NE(r.verdict, Verdict::fail) << r.property << ": " << r.detail;
        }
        return true;
      };
      ExploreResult r = explore(config, alg3_automaton(config.cfg), visitor);
      EXPECT_FALSE(r.stopped);
      EXPECT_FALSE(r.partial);
      EXPECT_GT(r.round_capped, 0u);
    }
  }
}

TEST(Describe, ExposesState) {
  Alg2 a({3, 1}, 1);
  EXPECT_EQ(a.value(), 1);
  EXPECT_EQ(a.lock(), kUnset);
  EXPECT_FALSE(a.describe().empty());
  Alg1 b({3, 1}, 0);
  EXPECT_EQ(b.round(), 1);
  EXPECT_TRUE(b.estimates().empty());
}
