#pragma once

// Deterministic discrete-event execution of process automata over reliable
// broadcast channels.
//
// Time is the scheduler step counter. At each step the simulator applies the
// crashes scheduled for that step, lets every waiting process whose detector
// reading changed re-evaluate its wait, and then delivers one in-flight
// message. A broadcast is delivered to every process, the sender included.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "anonfd/detectors.hpp"
#include "anonfd/message.hpp"
#include "anonfd/model.hpp"

namespace anonfd {

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DeliveryMode {
  /// Receivers see payloads only.
  anonymous,
  /// Every reception is attributed to its sender.
  identified,
};

std::string to_string(DeliveryMode mode);
DeliveryMode parse_delivery_mode(const std::string& text);

/// Actions available to an automaton while it runs.
class StepContext {
 public:
  virtual ~StepContext() = default;

  virtual const SystemConfig& config() const = 0;
  /// Current detector reading of this process. Re-read on every call.
  virtual DetectorValue oracle() = 0;
  virtual void broadcast(const Message& m) = 0;
  virtual void decide(int value, int round) = 0;
  virtual void halt() = 0;
  /// Marks the start of a round with the current estimate (or -1).
  virtual void enter_round(int round, int value) = 0;
  /// Emulated detector output (output_p) of a transformation.
  virtual void output(const DetectorValue& value) = 0;
  /// Records the random identifier a process drew.
  virtual void random_id(std::uint64_t id) = 0;
};

/// A deterministic process automaton. `step` runs the process until it blocks
/// on a wait or halts; calling it again without new input must be a no-op.
class Automaton {
 public:
  virtual ~Automaton() = default;

  virtual void receive(const Message& m, std::optional<ProcessId> from) = 0;
  virtual void step(StepContext& ctx) = 0;
  virtual bool halted() const = 0;
  virtual int round() const = 0;
  virtual std::unique_ptr<Automaton> clone() const = 0;
  /// Canonical bytes of the full local state, received buffers included.
  virtual void encode(std::string& out) const = 0;
  virtual nlohmann::json describe() const = 0;
};

struct ProcessInit {
  int input = 0;
  /// Set only in identified mode: anonymous automata never learn who they are.
  std::optional<ProcessId> identity;
  /// Private randomness of the process.
  std::uint64_t seed = 0;
  /// Position in the harness's process table. Factories may use it to apply
  /// per-process scripted settings; automata never store it.
  ProcessId slot;
};

using AutomatonFactory = std::function<std::unique_ptr<Automaton>(const ProcessInit&)>;

// ---------------------------------------------------------------------------
// Traces

/// `converge` marks the nondeterministic oracle stabilization of explore();
/// it is not a step of any process.
enum class EventKind { send, deliver, crash, oracle, decide, halt, round, output, random_id, converge };

std::string to_string(EventKind kind);
EventKind parse_event_kind(const std::string& text);

struct Event {
  Time step = 0;
  EventKind kind = EventKind::send;
  ProcessId process;
  /// deliver: sender slot as recorded through the hidden relabeling.
  std::optional<ProcessId> peer;
  Message message;
  int value = 0;
  int round = 0;
  DetectorValue reading = 0;
  std::uint64_t id = 0;

  bool operator==(const Event&) const = default;
};

enum class TraceStatus {
  /// Every live process halted.
  complete,
  /// Nothing can happen any more, but some live process is still waiting.
  quiescent,
  /// The step horizon or a depth bound cut the run short.
  truncated,
};

std::string to_string(TraceStatus status);
TraceStatus parse_trace_status(const std::string& text);

struct Trace {
  SystemConfig cfg;
  DeliveryMode mode = DeliveryMode::anonymous;
  std::vector<int> inputs;
  /// Crash times the run was subjected to.
  FailurePattern pattern;
  std::vector<Event> events;
  TraceStatus status = TraceStatus::complete;
  Time end_step = 0;
  /// Messages still in flight at the end of the run.
  std::size_t pending = 0;
  std::vector<nlohmann::json> final_states;
  /// Free-form provenance: algorithm, seed, schedule id.
  nlohmann::json meta = nlohmann::json::object();

  bool truncated() const { return status == TraceStatus::truncated; }
  ProcessSet correct() const { return cfg.all() - pattern.crashed(); }
  /// First decision per process.
  std::vector<std::optional<int>> decisions() const;
};

nlohmann::json to_json(const Event& e);
Event event_from_json(const nlohmann::json& j);
/// One JSON object per line: a "scenario" header, the events, an "end" line.
std::string to_jsonl(const Trace& trace);
Trace trace_from_jsonl(const std::string& text);

// ---------------------------------------------------------------------------
// Scenarios

enum class SchedulerKind {
  fifo,
  random,
  /// Delivers messages of crashed (or soon crashing) processes first.
  crash_adjacent,
};

std::string to_string(SchedulerKind kind);
/// Accepts "fifo", "random", "crash-adjacent".
SchedulerKind parse_scheduler_kind(const std::string& text);

struct SchedulerPolicy {
  SchedulerKind kind = SchedulerKind::random;
  /// A message older than this many steps is delivered before anything else.
  std::optional<Time> max_age;
};

struct OracleConfig {
  DetectorKind kind = DetectorKind::n;
  OracleProfile profile;
  /// Replaces the sampled history when set (scripted scenarios).
  std::optional<DetectorHistory> history;
};

struct ScenarioConfig {
  SystemConfig cfg;
  std::vector<int> inputs;
  FailurePattern pattern;
  OracleConfig oracle;
  SchedulerPolicy policy;
  DeliveryMode mode = DeliveryMode::anonymous;
  std::uint64_t seed = 0;
  Time horizon = 0;
  /// Hidden relabeling Π of senders: deliveries record sender Π(j).
  std::optional<Permutation> sender_relabel;

  /// Throws SimulationError when sizes or the failure pattern do not fit cfg.
  void validate() const;
};

/// 50·(f+2) rounds of n² deliveries.
Time default_horizon(const SystemConfig& cfg);

/// splitmix64 stream derivation: independent seeds per purpose.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Samples (or takes) the scenario's oracle history.
OracleRuntime make_oracle(const ScenarioConfig& scenario);

Trace run(const ScenarioConfig& scenario, const AutomatonFactory& factory);
Trace run(const ScenarioConfig& scenario, const AutomatonFactory& factory,
          const OracleRuntime& oracle);

// ---------------------------------------------------------------------------
// Exhaustive exploration

/// Oracle used while exploring. N reports the crashes that happened so far;
/// DiamondN reports no crash until a nondeterministic convergence step, then
/// the crashes so far; Theta and Omega converge on a nondeterministically
/// chosen leader that is never crashed afterwards; P and DiamondP mirror N and
/// DiamondN with sets.
struct ExploreConfig {
  SystemConfig cfg;
  std::vector<int> inputs;
  DetectorKind oracle = DetectorKind::n;
  DeliveryMode mode = DeliveryMode::anonymous;
  /// Crash budget; defaults to cfg.f.
  std::optional<int> max_crashes;
  /// A process may crash only while its round is at most this.
  std::optional<int> max_crash_round;
  std::size_t max_states = 20'000'000;
  std::size_t max_depth = 100'000;
  /// States where a live process has passed this round are not expanded.
  /// Needed for algorithms whose rounds outrun their own Decide messages
  /// under unfair schedules.
  std::optional<int> max_round;
};

/// Snapshot handed to state invariants.
struct ProcessView {
  int round = 0;
  bool crashed = false;
  bool halted = false;
  std::optional<DetectorValue> output;
};

struct StateView {
  const SystemConfig& cfg;
  const std::vector<ProcessView>& processes;
  ProcessSet crashed;
  /// Every distinct payload broadcast so far.
  const std::vector<Message>& sent;
  /// Events of the path that reached this state.
  const std::vector<Event>& path;
};

struct ExploreResult {
  std::size_t states = 0;
  std::size_t transitions = 0;
  std::size_t terminals = 0;
  /// Budget (states or depth) exhausted: the search is not exhaustive.
  bool partial = false;
  /// States cut by max_round (the search stays exhaustive within it).
  std::size_t round_capped = 0;
  /// A visitor asked to stop.
  bool stopped = false;
};

struct ExploreVisitor {
  /// Called once per distinct maximal state (no delivery or convergence step
  /// left) with the trace of the path that first reached it. Return false to
  /// stop.
  std::function<bool(const Trace&)> on_terminal;
  /// Called once per distinct state. Return false to stop.
  std::function<bool(const StateView&)> on_state;
};

ExploreResult explore(const ExploreConfig& config, const AutomatonFactory& factory,
                      const ExploreVisitor& visitor);

/// Convenience for tiny instances: every terminal trace.
std::vector<Trace> explore_traces(const ExploreConfig& config, const AutomatonFactory& factory,
                                  ExploreResult* result = nullptr);

}  // namespace anonfd
