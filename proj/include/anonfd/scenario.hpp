#pragma once

// Scenario and campaign files, seeded resolution of their random parts, and
// the drivers shared by the command line tool and the acceptance tests.
//
// Scenario file (schema 1):
//   {"schema": 1, "algorithm": "alg2", "n": 5, "f": 2,
//    "inputs": [0, 1, 1, 0, 1] | "random" | "all",
//    "crash": {"2": 40} | "random", "crash_window": 200,
//    "oracle": {"kind": "DiamondN", "profile": "adversarial-random",
//               "convergence": 300 | "random", "history": {...}},
//    "policy": "random" | {"kind": "fifo", "max_age": 500},
//    "seed": 7, "horizon": 5000,
//    "max_rounds": 12, "mutation": "none", "id_bits": 64,
//    "forced_ids": ["5", null], "max_crash_round": 3, "max_round": 1, "max_states": 20000000}
//
// Campaign file (schema 1):
//   {"schema": 1, "scenario": {...} | "scenario_file": "path",
//    "mode": "sweep" | "single" | "explore", "seeds": {"from": 0, "count": 1000},
//    "checks": ["agreement", ...]}

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "anonfd/io.hpp"
#include "anonfd/program.hpp"
#include "anonfd/verify.hpp"

namespace anonfd {

inline constexpr int kSchemaVersion = 1;

struct ScenarioSpec {
  Program program = Program::alg1;
  SystemConfig cfg;
  /// Unset: drawn per seed.
  std::optional<std::vector<int>> inputs;
  /// Explore over every binary input vector.
  bool all_inputs = false;
  /// Unset: up to f crashes drawn per seed within crash_window.
  std::optional<std::map<ProcessId, Time>> crash;
  std::optional<Time> crash_window;
  DetectorKind oracle = DetectorKind::n;
  PreConvergence behavior = PreConvergence::adversarial_random;
  /// Unset: drawn per seed.
  std::optional<Time> convergence;
  std::optional<DetectorHistory> history;
  SchedulerPolicy policy;
  std::uint64_t seed = 0;
  std::optional<Time> horizon;
  ProgramOptions options;
  std::optional<int> max_crash_round;
  /// Explore: states past this round are not expanded (alg3 defaults to 0).
  std::optional<int> max_round;
  std::size_t max_states = 20'000'000;
};

/// Throws FormatError naming the offending field, including oracle/algorithm
/// mismatches and unmet resilience preconditions.
ScenarioSpec parse_scenario(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioSpec& spec);

struct ResolvedScenario {
  Program program;
  ScenarioConfig scenario;
  ProgramOptions options;
};

/// Fixes every random part of the spec from `seed`.
ResolvedScenario resolve(const ScenarioSpec& spec, std::uint64_t seed);

/// Runs a resolved scenario; the trace's meta records algorithm and seed.
Trace run_resolved(const ResolvedScenario& r);

/// Every check that applies to the program: consensus properties, lemma
/// invariants, trace well-formedness, and emulated-detector validity.
/// The randomized reduction also reports "distinct-ids".
std::vector<CheckReport> check_all(const Trace& trace, Program program);

struct VerdictCounts {
  std::size_t pass = 0;
  std::size_t fail = 0;
  std::size_t vacuous = 0;
  std::size_t truncated = 0;

  void add(Verdict v);
  std::size_t total() const { return pass + fail + vacuous + truncated; }
};

struct Failure {
  std::uint64_t seed = 0;
  CheckReport report;
  std::string reproduce;
};

struct CampaignSummary {
  Program program = Program::alg1;
  std::size_t runs = 0;
  std::size_t failed_runs = 0;
  std::map<std::string, VerdictCounts> counts;
  std::vector<Failure> failures;
  double seconds = 0;
};

nlohmann::json to_json(const CampaignSummary& s);

/// Runs seeds [from, from+count) over `jobs` worker threads. `source` names
/// the file used in reproduction commands. `checks`, when non-empty,
/// restricts which properties are counted.
CampaignSummary run_campaign(const ScenarioSpec& spec, std::uint64_t from, std::size_t count,
                             unsigned jobs, const std::string& source,
                             const std::vector<std::string>& checks = {});

struct ExploreViolation {
  CheckReport report;
  /// Path to the violating state (a prefix when a state invariant broke).
  Trace trace;
};

struct ExploreSummary {
  Program program = Program::alg1;
  std::size_t input_vectors = 0;
  ExploreResult totals;
  std::map<std::string, VerdictCounts> counts;
  std::vector<ExploreViolation> violations;
  double seconds = 0;

  bool clean() const;
};

nlohmann::json to_json(const ExploreSummary& s);

/// Exhaustive exploration of the spec's program over its inputs (every
/// binary vector when `all_inputs` or inputs are unset), checking state
/// invariants at every state and check_all at every maximal state. Keeps at
/// most `keep` violating traces.
ExploreSummary explore_program(const ScenarioSpec& spec, std::size_t keep = 5);

struct CampaignSpec {
  ScenarioSpec scenario;
  enum class Mode { single, sweep, explore } mode = Mode::sweep;
  std::uint64_t seed_from = 0;
  std::size_t seed_count = 1;
  std::vector<std::string> checks;
};

/// `base_dir` resolves a relative "scenario_file".
CampaignSpec parse_campaign(const nlohmann::json& j, const std::string& base_dir = ".");

}  // namespace anonfd
