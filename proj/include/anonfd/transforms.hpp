#pragma once

// Detector emulations. Each emulating automaton maintains an output variable
// and reports it through StepContext::output; the assembled per-process
// output history is then judged by the target detector's validator.
//
// Algorithms 4 and 5 and the Theta->Omega announcement need sender
// identities and run in identified mode only. The randomized N->Theta
// reduction runs anonymously: its identifiers travel as payload.

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "anonfd/mutation.hpp"
#include "anonfd/simulator.hpp"

namespace anonfd {

class TransformError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Round-structured emulations run forever; `max_rounds` makes a process
/// halt after completing that round so that exploration stays finite.
struct RoundLimit {
  std::optional<int> max_rounds;
};

/// Identified-mode helper: senders of round-tagged messages per round.
class SenderInbox {
 public:
  void add(int round, ProcessId sender, bool flag = false);
  void discard_before(int round);
  ProcessSet senders(int round) const;
  /// Senders whose round message carried flag = true.
  ProcessSet flagged(int round) const;
  void encode(std::string& out) const;

 private:
  // (round, sender, flag), sorted.
  std::vector<std::tuple<int, int, bool>> items_;
};

/// DiamondN -> DiamondP: suspect everyone missing from this round's ALIVE set.
class Alg4 final : public Automaton {
 public:
  Alg4(const SystemConfig& cfg, RoundLimit limit);

  void receive(const Message& m, std::optional<ProcessId> from) override;
  void step(StepContext& ctx) override;
  bool halted() const override { return halted_; }
  int round() const override { return r_; }
  std::unique_ptr<Automaton> clone() const override { return std::make_unique<Alg4>(*this); }
  void encode(std::string& out) const override;
  nlohmann::json describe() const override;

  ProcessSet suspect() const { return suspect_; }

 private:
  SystemConfig cfg_;
  RoundLimit limit_;
  int r_ = 0;
  bool waiting_ = false;
  bool started_ = false;
  bool halted_ = false;
  ProcessSet suspect_;
  SenderInbox inbox_;
};

/// N -> P: only suspect after the ALIVE sender set has been stable for f+2
/// rounds.
class Alg5 final : public Automaton {
 public:
  Alg5(const SystemConfig& cfg, RoundLimit limit, Mutation mutation = Mutation::none);

  void receive(const Message& m, std::optional<ProcessId> from) override;
  void step(StepContext& ctx) override;
  bool halted() const override { return halted_; }
  int round() const override { return r_; }
  std::unique_ptr<Automaton> clone() const override { return std::make_unique<Alg5>(*this); }
  void encode(std::string& out) const override;
  nlohmann::json describe() const override;

  ProcessSet suspect() const { return suspect_; }
  int lastchange() const { return lastchange_; }

 private:
  SystemConfig cfg_;
  RoundLimit limit_;
  Mutation mutation_;
  int r_ = 0;
  bool waiting_ = false;
  bool started_ = false;
  bool halted_ = false;
  ProcessSet suspect_;
  ProcessSet earlier_;
  int lastchange_ = 0;
  SenderInbox inbox_;
};

/// Theta -> Omega. Every round a process broadcasts (Trust, r, b) with its
/// current Theta reading b and waits for n-f round-r messages. Its leader is
/// the sender of the trusting message with the highest round seen so far
/// (ties go to the smallest index), or itself before any such message.
class ThetaToOmega final : public Automaton {
 public:
  ThetaToOmega(const SystemConfig& cfg, ProcessId self, RoundLimit limit);

  void receive(const Message& m, std::optional<ProcessId> from) override;
  void step(StepContext& ctx) override;
  bool halted() const override { return halted_; }
  int round() const override { return r_; }
  std::unique_ptr<Automaton> clone() const override {
    return std::make_unique<ThetaToOmega>(*this);
  }
  void encode(std::string& out) const override;
  nlohmann::json describe() const override;

  ProcessId leader() const { return leader_; }

 private:
  SystemConfig cfg_;
  ProcessId self_;
  RoundLimit limit_;
  int r_ = 0;
  bool waiting_ = false;
  bool halted_ = false;
  ProcessId leader_;
  int leader_round_ = -1;
  SenderInbox inbox_;
};

/// N -> Theta with random identifiers: output true iff the own identifier is
/// the largest among this round's heartbeats.
class RandomTheta final : public Automaton {
 public:
  RandomTheta(const SystemConfig& cfg, std::uint64_t id, RoundLimit limit);

  void receive(const Message& m, std::optional<ProcessId> from) override;
  void step(StepContext& ctx) override;
  bool halted() const override { return halted_; }
  int round() const override { return r_; }
  std::unique_ptr<Automaton> clone() const override { return std::make_unique<RandomTheta>(*this); }
  void encode(std::string& out) const override;
  nlohmann::json describe() const override;

  std::uint64_t id() const { return id_; }
  /// Set once the process saw its own identifier twice in one round.
  bool collision() const { return collision_; }

 private:
  SystemConfig cfg_;
  std::uint64_t id_;
  RoundLimit limit_;
  int r_ = 0;
  bool waiting_ = false;
  bool announced_ = false;
  bool halted_ = false;
  bool trusted_ = false;
  bool collision_ = false;
  // Heartbeat identifiers of the current and later rounds.
  std::multiset<std::pair<int, std::uint64_t>> inbox_;
};

/// Draws the identifier a RandomTheta process uses for a given private seed,
/// keeping only the low `bits` bits (1..64).
std::uint64_t draw_random_id(std::uint64_t seed, int bits = 64);

// Factories. Identified-only emulations throw TransformError when `mode` is
// anonymous.
AutomatonFactory diamond_n_to_diamond_p(const SystemConfig& cfg, DeliveryMode mode,
                                        RoundLimit limit = {});
/// Accepts the alg5-* mutations only.
AutomatonFactory n_to_p(const SystemConfig& cfg, DeliveryMode mode, RoundLimit limit = {},
                        Mutation mutation = Mutation::none);
AutomatonFactory theta_to_omega(const SystemConfig& cfg, DeliveryMode mode,
                                RoundLimit limit = {});
/// `forced_ids[i]`, when set, replaces the random identifier of process i+1.
AutomatonFactory randomized_n_to_theta(const SystemConfig& cfg, DeliveryMode mode,
                                       RoundLimit limit = {}, int id_bits = 64,
                                       std::vector<std::optional<std::uint64_t>> forced_ids = {});

// Local translations, applied to whole histories.

/// P -> N and DiamondP -> DiamondN: the number of suspected processes.
DetectorHistory suspects_to_count(const DetectorHistory& suspects);
/// Omega -> Theta: trust yourself iff Omega names you.
DetectorHistory omega_to_theta(const DetectorHistory& omega);
/// N -> DiamondN: the same history.
DetectorHistory n_to_diamond_n(const DetectorHistory& n);

/// Output history of an emulation trace over [0, end_step]. Cells before a
/// process's first output event take `initial`.
DetectorHistory assemble_output_history(const Trace& trace, ValueRange range,
                                        const DetectorValue& initial);

/// Identifiers drawn in a trace, per process (0 when none was recorded).
std::vector<std::uint64_t> drawn_ids(const Trace& trace);
/// True if two processes drew the same identifier.
bool id_collision(const Trace& trace);

/// Metadata attached to exported emulated histories.
nlohmann::json emulated_from(DetectorKind source, const std::string& transformation,
                             std::uint64_t seed);

}  // namespace anonfd
