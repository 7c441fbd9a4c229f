#include "anonfd/mutation.hpp"

#include <stdexcept>

namespace anonfd {

namespace {

constexpr Mutation kAll[] = {Mutation::none,          Mutation::alg1_min,
                             Mutation::alg2_lock_always, Mutation::alg2_decide_any,
                             Mutation::alg3_no_majority,
                             Mutation::alg5_wait_one,
                             Mutation::alg5_no_guard};

}  // namespace

std::string to_string(Mutation m) {
  switch (m) {
    case Mutation::none: return "none";
    case Mutation::alg1_min: return "alg1-min";
    case Mutation::alg2_lock_always: return "alg2-lock-always";
    case Mutation::alg2_decide_any: return "alg2-decide-any";
    case Mutation::alg3_no_majority: return "alg3-no-majority";
    case Mutation::alg5_wait_one: return "alg5-wait-one";
    case Mutation::alg5_no_guard: return "alg5-no-guard";
  }
  return "?";
}

Mutation parse_mutation(const std::string& text) {
  for (Mutation m : kAll) {
    if (to_string(m) == text) return m;
  }
  throw std::invalid_argument("unknown mutation '" + text + "'");
}

}  // namespace anonfd
