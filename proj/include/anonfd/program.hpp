#pragma once

// Registry of every automaton the harness can run, with the oracle and
// delivery mode each one is written against.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "anonfd/consensus.hpp"
#include "anonfd/transforms.hpp"

namespace anonfd {

enum class Program { alg1, alg2, alg3, alg4, alg5, theta_omega, random_theta };

std::string to_string(Program p);
/// Accepts "alg1".."alg5", "theta-omega", "random-theta".
Program parse_program(const std::string& text);

struct ProgramInfo {
  /// Oracle the program is written against.
  DetectorKind oracle;
  DeliveryMode mode;
  /// Emulated detector, for transformations.
  std::optional<DetectorKind> target;
  bool consensus = false;
};

ProgramInfo program_info(Program p);

/// Strict match, except that N is accepted where DiamondN is expected
/// (every N history is a DiamondN history).
bool oracle_compatible(Program p, DetectorKind oracle);

struct ProgramOptions {
  Mutation mutation = Mutation::none;
  /// Round cap for the non-terminating emulations.
  std::optional<int> max_rounds;
  int id_bits = 64;
  std::vector<std::optional<std::uint64_t>> forced_ids;
};

/// Throws ConsensusError or TransformError for unmet preconditions.
AutomatonFactory make_factory(Program p, const SystemConfig& cfg, const ProgramOptions& options = {});

/// Initial value of an emulation's output variable.
DetectorValue initial_output(Program p, const SystemConfig& cfg);

}  // namespace anonfd
