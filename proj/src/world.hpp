#pragma once

// Mutable global state of one execution. Shared by run() and explore();
// explore() copies it at every branch point.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "anonfd/simulator.hpp"

namespace anonfd::detail {

struct InFlight {
  Message msg;
  ProcessId sender;
  ProcessId receiver;
  Time sent_at = 0;
  std::uint64_t seq = 0;
};

/// Detector driven by the explored state instead of a pre-drawn history.
struct ExploreOracle {
  DetectorKind kind = DetectorKind::n;
  bool converged = false;
  std::optional<ProcessId> leader;

  bool needs_convergence() const { return kind != DetectorKind::n && kind != DetectorKind::p; }
  DetectorValue read(ProcessId p, ProcessSet crashed, ProcessId self) const;
};

class World {
 public:
  World(const SystemConfig& cfg, DeliveryMode mode, std::vector<int> inputs,
        const AutomatonFactory& factory, std::uint64_t seed, std::vector<Event>* log);
  World(const World& other);
  World& operator=(const World&) = delete;

  const SystemConfig& cfg() const { return cfg_; }
  DeliveryMode mode() const { return mode_; }
  Time now() const { return now_; }
  void set_now(Time t) { now_ = t; }
  const std::vector<InFlight>& pool() const { return pool_; }
  bool crashed(ProcessId p) const { return crashed_[p.slot()]; }
  bool halted(ProcessId p) const { return procs_[p.slot()]->halted(); }
  bool live(ProcessId p) const { return !crashed(p) && !halted(p); }
  ProcessSet crashed_set() const;
  int crash_count() const { return crashed_set().size(); }
  const Automaton& automaton(ProcessId p) const { return *procs_[p.slot()]; }
  const std::optional<DetectorValue>& output(ProcessId p) const { return output_[p.slot()]; }
  const std::vector<Message>& sent() const { return sent_; }
  const std::vector<int>& inputs() const { return inputs_; }
  bool all_halted() const;

  void use_runtime(const OracleRuntime* runtime) { runtime_ = runtime; }
  void set_relabel(std::optional<Permutation> relabel) { relabel_ = std::move(relabel); }
  void track_sent(bool on) { track_sent_ = on; }
  ExploreOracle& explore_oracle() { return explore_oracle_; }
  const ExploreOracle& explore_oracle() const { return explore_oracle_; }

  DetectorValue read_oracle(ProcessId p) const;

  void start();
  void crash(ProcessId p);
  void deliver(std::size_t index);
  /// Re-runs every waiting process whose detector reading changed.
  void poll_changed();
  void log_converge();

  /// Canonical bytes of the whole state (time excluded).
  std::string key() const;
  std::vector<ProcessView> views() const;
  Trace snapshot_trace(const FailurePattern& pattern, TraceStatus status) const;

 private:
  friend class Context;

  void step_process(ProcessId p);
  void record(Event e);
  void drop_pending_to(ProcessId p);

  SystemConfig cfg_;
  DeliveryMode mode_;
  std::vector<int> inputs_;
  std::vector<std::unique_ptr<Automaton>> procs_;
  std::vector<bool> crashed_;
  std::vector<std::optional<DetectorValue>> last_read_;
  std::vector<std::optional<DetectorValue>> output_;
  std::vector<InFlight> pool_;
  std::vector<Message> sent_;
  bool track_sent_ = false;
  Time now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::vector<Event>* log_;
  const OracleRuntime* runtime_ = nullptr;
  ExploreOracle explore_oracle_;
  std::optional<Permutation> relabel_;
};

}  // namespace anonfd::detail
