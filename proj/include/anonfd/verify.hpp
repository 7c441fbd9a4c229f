#pragma once

// Property checkers over traces and histories. All checkers are pure.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "anonfd/detectors.hpp"
#include "anonfd/program.hpp"
#include "anonfd/simulator.hpp"

namespace anonfd {

enum class Verdict { pass, fail, vacuous, truncated };

std::string to_string(Verdict v);
Verdict parse_verdict(const std::string& text);

struct CheckReport {
  std::string property;
  Verdict verdict = Verdict::pass;
  /// Event indices into the trace, or [p, t] cells for history checks.
  nlohmann::json witness = nlohmann::json::array();
  std::string detail;

  bool failed() const { return verdict == Verdict::fail; }
};

nlohmann::json to_json(const CheckReport& r);
CheckReport report_from_json(const nlohmann::json& j);

/// "termination", "irrevocability", "agreement", "validity", in that order.
/// Termination is `truncated` when a truncated trace leaves a correct process
/// undecided, and fails when a finished trace does.
std::vector<CheckReport> check_consensus(const Trace& trace);

/// Lemma-level invariants for the program that produced the trace:
///   alg1: "stubbornness"
///   alg2: "lock-exclusivity", "decision-spread"
///   alg3: "unique-decide"
///   alg5: "round-skew"
/// Other programs have none. Throws std::invalid_argument when the trace's
/// recorded algorithm (meta "algorithm") names a different program.
std::vector<CheckReport> check_lemma_invariants(const Trace& trace, Program program);

/// Trace well-formedness: "crash-pattern" (crash events match the failure
/// pattern), "no-ghost-steps" and "reliability" (finished traces deliver
/// every broadcast to every process that neither crashed nor halted).
std::vector<CheckReport> check_trace_wellformed(const Trace& trace);

/// Output history of a transformation judged by its target detector
/// ("emulated-<Kind>").
CheckReport check_emulation(const Trace& trace, Program program);

CheckReport check_history(DetectorKind kind, const DetectorHistory& history,
                          const FailurePattern& pattern);

enum class Symmetry { symmetric, unsymmetrical };

std::string to_string(Symmetry s);

struct SymmetryReport {
  /// Pointwise agreement of correct processes at every time.
  Symmetry strict = Symmetry::symmetric;
  /// Agreement on the constant tail.
  Symmetry suffix = Symmetry::symmetric;
  /// Earliest time from which correct processes agree for good.
  std::optional<Time> agree_from;
  /// First (time, process, process) disagreement, if any.
  std::optional<std::tuple<Time, ProcessId, ProcessId>> first_disagreement;
};

SymmetryReport classify_symmetry(const DetectorHistory& history, const FailurePattern& pattern);

/// Delegates to is_anonymous with the given permutations ("permutation-closure").
/// Throws ModelError when (H, F) itself is invalid.
CheckReport check_permutation_closure(DetectorKind kind, const FailurePattern& pattern,
                                      const DetectorHistory& history,
                                      const std::vector<Permutation>& perms,
                                      AnonymityConvention convention = AnonymityConvention::consistent);

// State invariants for explore(). Each returns a description of the
// violation, or nothing.

/// Round difference of non-crashed processes at most `bound`.
std::optional<std::string> state_round_skew(const StateView& state, int bound);
/// No two Lock messages of one round carry different non-? tags.
std::optional<std::string> state_lock_exclusivity(const StateView& state);
/// All Decide messages sent so far carry one value.
std::optional<std::string> state_unique_decide(const StateView& state);
/// Every emulated suspect set contains crashed processes only.
std::optional<std::string> state_no_false_suspicion(const StateView& state);

/// True when any report failed.
bool any_failed(const std::vector<CheckReport>& reports);

}  // namespace anonfd
