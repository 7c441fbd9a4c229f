#pragma once

#include <string>

namespace anonfd {

/// Deliberately broken variants, used to show that the lemma checkers are
/// not vacuous.
enum class Mutation {
  none,
  /// Algorithm 1 adopts the minimum instead of the maximum.
  alg1_min,
  /// Algorithm 2 locks its minimum even when it saw both values.
  alg2_lock_always,
  /// Algorithm 2 decides as soon as one lock tag equals its new estimate.
  alg2_decide_any,
  /// Algorithm 3 votes for its own estimate instead of a Report majority.
  alg3_no_majority,
  /// Algorithm 5 ends a round after a single ALIVE message.
  alg5_wait_one,
  /// Algorithm 5 updates its suspects without the f+2 stability window.
  alg5_no_guard,
};

std::string to_string(Mutation m);
/// Accepts the names printed by to_string, e.g. "alg1-min".
Mutation parse_mutation(const std::string& text);

}  // namespace anonfd
