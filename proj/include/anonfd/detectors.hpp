#pragma once

// History validators, samplers and the runtime oracle for the anonymous
// detectors (N, DiamondN, Theta) and the classic ones (P, DiamondP, Omega).
//
// Validators read a finite table under constant-tail semantics: every
// "eventually forever" clause holds iff it holds at the horizon, and the
// earliest time from which it holds without interruption is reported as the
// witness. Cells of a process at or after its crash time are never read.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "anonfd/model.hpp"

namespace anonfd {

class DetectorError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class DetectorKind { n, diamond_n, theta, p, diamond_p, omega };

std::string to_string(DetectorKind kind);
/// Accepts "N", "DiamondN", "Theta", "P", "DiamondP", "Omega".
DetectorKind parse_detector_kind(const std::string& text);
ValueRange range_of(DetectorKind kind);
/// True for N, DiamondN and Theta, whose outputs never name a process.
bool is_anonymous_kind(DetectorKind kind);

struct Validation {
  bool ok = true;
  std::string reason;
  std::optional<ProcessId> process;
  std::optional<Time> time;
  /// Earliest time from which the eventual clauses hold, when they do.
  std::optional<Time> witness;

  explicit operator bool() const { return ok; }
};

Validation validate_n(const DetectorHistory& history, const FailurePattern& pattern);
Validation validate_diamond_n(const DetectorHistory& history, const FailurePattern& pattern);
Validation validate_theta(const DetectorHistory& history, const FailurePattern& pattern);
Validation validate_p(const DetectorHistory& history, const FailurePattern& pattern);
Validation validate_diamond_p(const DetectorHistory& history, const FailurePattern& pattern);
Validation validate_omega(const DetectorHistory& history, const FailurePattern& pattern);

Validation validate(DetectorKind kind, const DetectorHistory& history,
                    const FailurePattern& pattern);

/// A detector: range plus the set of legal histories per failure pattern.
class DetectorSpec {
 public:
  explicit DetectorSpec(DetectorKind kind) : kind_(kind) {}

  DetectorKind kind() const { return kind_; }
  ValueRange range() const { return range_of(kind_); }
  bool validates(const DetectorHistory& history, const FailurePattern& pattern) const {
    return validate(kind_, history, pattern).ok;
  }
  HistoryValidator validator() const;

 private:
  DetectorKind kind_;
};

/// A(q, t) = n - H(q, t): the number of processes believed alive.
DetectorHistory alive_view(const DetectorHistory& history, int n);

enum class PreConvergence {
  /// Most helpful for progress: N/DiamondN report the true crash count so far,
  /// Theta and Omega already point at the eventual leader, P/DiamondP suspect
  /// exactly the crashed processes.
  optimistic,
  /// Least helpful for progress: N/DiamondN report no crash (n alive), Theta
  /// trusts nobody, P/DiamondP suspect nobody, Omega names the local process.
  pessimistic,
  /// Piecewise-constant random values inside each kind's envelope.
  adversarial_random,
};

std::string to_string(PreConvergence behavior);
/// Accepts "optimistic", "pessimistic", "adversarial-random".
PreConvergence parse_pre_convergence(const std::string& text);

struct OracleProfile {
  Time convergence_time = 0;
  PreConvergence behavior = PreConvergence::pessimistic;
};

/// Draws a history over [0, horizon] that validates against `kind` for the
/// pattern. N and P histories never report a crash before it happens, so their
/// effective convergence is at least the last crash time. The effective
/// convergence point is stored in the history.
///
/// Throws DetectorError for infeasible requests (convergence or a crash past
/// the horizon, or a pattern without a correct process).
DetectorHistory sample_history(DetectorKind kind, const FailurePattern& pattern,
                               const SystemConfig& cfg, Time horizon,
                               const OracleProfile& profile, std::uint64_t seed);

/// Reveals a pre-drawn history to the processes of one simulation.
class OracleRuntime {
 public:
  OracleRuntime(DetectorSpec spec, DetectorHistory history)
      : spec_(spec), history_(std::move(history)) {}

  const DetectorSpec& spec() const { return spec_; }
  const DetectorHistory& history() const { return history_; }
  const DetectorValue& query(ProcessId p, Time t) const { return history_.at(p, t); }

 private:
  DetectorSpec spec_;
  DetectorHistory history_;
};

}  // namespace anonfd
