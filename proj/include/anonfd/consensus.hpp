#pragma once

// Consensus automata for the N, DiamondN and Theta oracles. All three run in
// anonymous mode: they see payloads only, and wait conditions re-read the
// detector on every evaluation.

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "anonfd/mutation.hpp"
#include "anonfd/simulator.hpp"

namespace anonfd {

class ConsensusError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Messages of the current and later rounds, kept as a sorted multiset.
class Inbox {
 public:
  void add(const Message& m);
  /// Drops every round-tagged message below `round`.
  void discard_before(int round);
  std::vector<Message> of(MsgType type, int round) const;
  std::size_t count(MsgType type, int round) const;
  const std::vector<Message>& all() const { return items_; }
  void encode(std::string& out) const;

 private:
  std::vector<Message> items_;
};

/// f+1 rounds: propose, wait for alive-view many proposals, adopt the max.
class Alg1 final : public Automaton {
 public:
  Alg1(const SystemConfig& cfg, int input, Mutation mutation = Mutation::none);

  void receive(const Message& m, std::optional<ProcessId> from) override;
  void step(StepContext& ctx) override;
  bool halted() const override { return halted_; }
  int round() const override { return r_; }
  std::unique_ptr<Automaton> clone() const override { return std::make_unique<Alg1>(*this); }
  void encode(std::string& out) const override;
  nlohmann::json describe() const override;

  int value() const { return v_; }
  /// Estimate at the end of each completed round.
  const std::vector<int>& estimates() const { return estimates_; }

 private:
  SystemConfig cfg_;
  Mutation mutation_;
  int v_;
  int r_ = 1;
  bool waiting_ = false;
  bool halted_ = false;
  std::vector<int> estimates_;
  Inbox inbox_;
};

/// Propose phase then lock phase per round, min rules, decide on unanimous
/// locks; a decider halts right after its next Lock broadcast.
class Alg2 final : public Automaton {
 public:
  Alg2(const SystemConfig& cfg, int input, Mutation mutation = Mutation::none);

  void receive(const Message& m, std::optional<ProcessId> from) override;
  void step(StepContext& ctx) override;
  bool halted() const override { return halted_; }
  int round() const override { return r_; }
  std::unique_ptr<Automaton> clone() const override { return std::make_unique<Alg2>(*this); }
  void encode(std::string& out) const override;
  nlohmann::json describe() const override;

  int value() const { return v_; }
  int lock() const { return lock_; }
  std::optional<int> decided_round() const { return decided_round_; }

 private:
  enum class Phase : std::uint8_t { start, propose_wait, lock_wait };

  SystemConfig cfg_;
  Mutation mutation_;
  int v_;
  int lock_ = kUnset;
  int r_ = 0;
  Phase phase_ = Phase::start;
  bool halted_ = false;
  std::optional<int> decided_round_;
  Inbox inbox_;
};

/// Leader, Report, Vote phases per round; Decide messages are relayed once,
/// then the receiver decides their value and halts.
class Alg3 final : public Automaton {
 public:
  Alg3(const SystemConfig& cfg, int input, Mutation mutation = Mutation::none);

  void receive(const Message& m, std::optional<ProcessId> from) override;
  void step(StepContext& ctx) override;
  bool halted() const override { return halted_; }
  int round() const override { return r_; }
  std::unique_ptr<Automaton> clone() const override { return std::make_unique<Alg3>(*this); }
  void encode(std::string& out) const override;
  nlohmann::json describe() const override;

  int value() const { return v_; }
  int aux() const { return aux_; }

 private:
  enum class Phase : std::uint8_t { start, leader_wait, report_wait, vote_wait };

  SystemConfig cfg_;
  Mutation mutation_;
  int v_;
  int aux_ = kUnset;
  int r_ = 0;
  Phase phase_ = Phase::start;
  bool halted_ = false;
  std::optional<int> decide_received_;
  Inbox inbox_;
};

enum class ConsensusAlgorithm { alg1, alg2, alg3 };

std::string to_string(ConsensusAlgorithm a);
/// Accepts "alg1", "alg2", "alg3".
ConsensusAlgorithm parse_consensus_algorithm(const std::string& text);
/// Oracle each algorithm is written against.
DetectorKind required_oracle(ConsensusAlgorithm a);

/// Throws ConsensusError when the resilience precondition fails
/// (n > f for alg1, n > 2f otherwise) or the mutation belongs to another
/// algorithm.
AutomatonFactory alg1_automaton(const SystemConfig& cfg, Mutation mutation = Mutation::none);
AutomatonFactory alg2_automaton(const SystemConfig& cfg, Mutation mutation = Mutation::none);
AutomatonFactory alg3_automaton(const SystemConfig& cfg, Mutation mutation = Mutation::none);
AutomatonFactory consensus_automaton(ConsensusAlgorithm a, const SystemConfig& cfg,
                                     Mutation mutation = Mutation::none);

}  // namespace anonfd
