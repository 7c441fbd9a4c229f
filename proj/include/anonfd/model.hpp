#pragma once

// Core formal objects: processes, failure patterns, permutations, receive
// logs and failure detector histories.

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

namespace anonfd {

/// Global discrete time: one tick per scheduler step.
using Time = std::int64_t;

inline constexpr int kMaxProcesses = 64;

class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// 1-based process index, p1..pn.
class ProcessId {
 public:
  constexpr ProcessId() = default;
  constexpr explicit ProcessId(int index) : index_(index) {}

  static constexpr ProcessId from_slot(std::size_t slot) {
    return ProcessId(static_cast<int>(slot) + 1);
  }

  constexpr int index() const { return index_; }
  constexpr std::size_t slot() const { return static_cast<std::size_t>(index_ - 1); }

  auto operator<=>(const ProcessId&) const = default;

 private:
  int index_ = 1;
};

std::string to_string(ProcessId p);

/// Set of processes stored as a bitmask (n <= 64).
class ProcessSet {
 public:
  constexpr ProcessSet() = default;
  static constexpr ProcessSet from_bits(std::uint64_t bits) {
    ProcessSet s;
    s.bits_ = bits;
    return s;
  }
  static ProcessSet all(int n);
  static ProcessSet of(std::initializer_list<int> indices);

  void insert(ProcessId p) { bits_ |= bit(p); }
  void erase(ProcessId p) { bits_ &= ~bit(p); }
  bool contains(ProcessId p) const { return (bits_ & bit(p)) != 0; }
  bool empty() const { return bits_ == 0; }
  int size() const;
  std::uint64_t bits() const { return bits_; }

  /// Largest member index, or 0 for the empty set.
  int max_index() const;
  std::vector<ProcessId> members() const;

  ProcessSet operator|(ProcessSet o) const { return from_bits(bits_ | o.bits_); }
  ProcessSet operator&(ProcessSet o) const { return from_bits(bits_ & o.bits_); }
  ProcessSet operator-(ProcessSet o) const { return from_bits(bits_ & ~o.bits_); }
  bool subset_of(ProcessSet o) const { return (bits_ & ~o.bits_) == 0; }

  auto operator<=>(const ProcessSet&) const = default;

 private:
  static std::uint64_t bit(ProcessId p) { return std::uint64_t{1} << p.slot(); }
  std::uint64_t bits_ = 0;
};

std::string to_string(ProcessSet s);

struct SystemConfig {
  int n = 1;
  int f = 0;

  /// Throws ModelError unless 1 <= n <= 64 and 0 <= f < n.
  void validate() const;
  ProcessSet all() const { return ProcessSet::all(n); }
  bool contains(ProcessId p) const { return p.index() >= 1 && p.index() <= n; }
};

/// F: crash times per process; F(t) = {p : crash_time(p) <= t}.
class FailurePattern {
 public:
  explicit FailurePattern(int n = 1);
  FailurePattern(int n, std::map<ProcessId, Time> crash_times);

  int n() const { return n_; }
  const std::map<ProcessId, Time>& crash_times() const { return crash_; }
  std::optional<Time> crash_time(ProcessId p) const;

  /// F(t).
  ProcessSet at(Time t) const;
  ProcessSet crashed() const;
  bool alive_at(ProcessId p, Time t) const;
  /// Latest crash time, or 0 when nobody crashes.
  Time last_crash() const;

  /// Checks |crashed(F)| <= f and that the pattern belongs to cfg's system.
  void validate(const SystemConfig& cfg) const;

  bool operator==(const FailurePattern&) const = default;

 private:
  int n_;
  std::map<ProcessId, Time> crash_;
};

ProcessSet crashed_set(const FailurePattern& pattern);
/// P - crashed(F). Throws ModelError if every process crashes.
ProcessSet correct_set(const FailurePattern& pattern, const SystemConfig& cfg);

/// Bijection on {p1..pn}.
class Permutation {
 public:
  explicit Permutation(std::vector<ProcessId> images);

  static Permutation identity(int n);
  static Permutation swap(int n, ProcessId a, ProcessId b);
  /// cycle(n, {1,2,3}) maps p1->p2->p3->p1.
  static Permutation cycle(int n, const std::vector<int>& indices);
  static Permutation random(int n, std::mt19937_64& rng);
  /// All n! permutations in lexicographic order of their image vectors.
  static std::vector<Permutation> all(int n);

  int n() const { return static_cast<int>(images_.size()); }
  ProcessId operator()(ProcessId p) const { return images_.at(p.slot()); }
  ProcessSet operator()(ProcessSet s) const;
  Permutation inverse() const;
  /// (this ∘ inner)(p) = this(inner(p)).
  Permutation after(const Permutation& inner) const;
  const std::vector<ProcessId>& images() const { return images_; }

  bool operator==(const Permutation&) const = default;

 private:
  std::vector<ProcessId> images_;
};

std::string to_string(const Permutation& perm);

/// Exhaustive for n <= 4, otherwise `samples` uniformly drawn permutations.
std::vector<Permutation> permutation_source(int n, std::size_t samples = 100,
                                            std::uint64_t seed = 0);

/// F^Π with F^Π(t) = Π(F(t)).
FailurePattern permute_pattern(const Permutation& perm, const FailurePattern& pattern);

// ---------------------------------------------------------------------------
// Receive log

/// R_i(j, t): value that receiver i got from sender j at time t.
class ReceiveLog {
 public:
  using Key = std::tuple<ProcessId, ProcessId, Time>;

  void record(ProcessId receiver, ProcessId sender, Time t, std::string value);
  std::optional<std::string> get(ProcessId receiver, ProcessId sender, Time t) const;
  const std::map<Key, std::string>& entries() const { return values_; }

 private:
  std::map<Key, std::string> values_;
};

/// R^Π_i(j, t) = R_i(Π(j), t); empty when the slot was never delivered.
std::optional<std::string> anonymous_receive(const ReceiveLog& log, const Permutation& perm,
                                             ProcessId receiver, ProcessId j, Time t);

// ---------------------------------------------------------------------------
// Failure detector histories

enum class ValueRange { count, boolean, process_set, process_id };

std::string to_string(ValueRange range);
ValueRange parse_value_range(const std::string& text);

/// One detector module output. `int` holds counts and process indices.
using DetectorValue = std::variant<int, bool, ProcessSet>;

std::string to_string(const DetectorValue& value);

/// H(p, t) for t in [0, horizon]; values past the horizon repeat the last one.
class DetectorHistory {
 public:
  DetectorHistory(ValueRange range, int n, Time horizon, DetectorValue fill);

  ValueRange range() const { return range_; }
  int n() const { return n_; }
  Time horizon() const { return horizon_; }

  const DetectorValue& at(ProcessId p, Time t) const;
  const DetectorValue& tail(ProcessId p) const { return at(p, horizon_); }
  void set(ProcessId p, Time t, DetectorValue value);
  /// Sets H(p, t') = value for every t' in [t, horizon].
  void set_from(ProcessId p, Time t, const DetectorValue& value);

  /// Time from which the generator guarantees the eventual clauses hold.
  std::optional<Time> convergence;

  bool operator==(const DetectorHistory& o) const {
    return range_ == o.range_ && n_ == o.n_ && horizon_ == o.horizon_ && out_ == o.out_;
  }

 private:
  ValueRange range_;
  int n_;
  Time horizon_;
  std::vector<std::vector<DetectorValue>> out_;
};

/// H^Π with H^Π(p, t) = H(Π(p), t).
DetectorHistory permute_history(const Permutation& perm, const DetectorHistory& history);

/// How the history and the pattern are relabeled together when testing
/// closure under permutation.
enum class AnonymityConvention {
  /// Check H^Π against F^(Π⁻¹): process p inherits both the output row and
  /// the crash time of process Π(p).
  consistent,
  /// Check H^Π against F^Π exactly as the two formulas are printed.
  literal,
};

using HistoryValidator =
    std::function<bool(const DetectorHistory&, const FailurePattern&)>;

struct AnonymityVerdict {
  bool anonymous = true;
  std::optional<Permutation> violating;
  std::size_t checked = 0;
};

/// Checks that every relabeling of a valid (H, F) stays valid.
/// Throws ModelError if (H, F) itself is invalid.
AnonymityVerdict is_anonymous(const HistoryValidator& validates, const FailurePattern& pattern,
                              const DetectorHistory& history,
                              const std::vector<Permutation>& perms,
                              AnonymityConvention convention = AnonymityConvention::consistent);

}  // namespace anonfd
