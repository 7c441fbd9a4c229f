#include "anonfd/program.hpp"

namespace anonfd {

namespace {

constexpr Program kAll[] = {Program::alg1,        Program::alg2, Program::alg3,
                            Program::alg4,        Program::alg5, Program::theta_omega,
                            Program::random_theta};

}  // namespace

std::string to_string(Program p) {
  switch (p) {
    case Program::alg1: return "alg1";
    case Program::alg2: return "alg2";
    case Program::alg3: return "alg3";
    case Program::alg4: return "alg4";
    case Program::alg5: return "alg5";
    case Program::theta_omega: return "theta-omega";
    case Program::random_theta: return "random-theta";
  }
  return "?";
}

Program parse_program(const std::string& text) {
  for (Program p : kAll) {
    if (to_string(p) == text) return p;
  }
  throw std::invalid_argument("unknown algorithm '" + text + "'");
}

ProgramInfo program_info(Program p) {
  using K = DetectorKind;
  using M = DeliveryMode;
  switch (p) {
    case Program::alg1: return {K::n, M::anonymous, std::nullopt, true};
    case Program::alg2: return {K::diamond_n, M::anonymous, std::nullopt, true};
    case Program::alg3: return {K::theta, M::anonymous, std::nullopt, true};
    case Program::alg4: return {K::diamond_n, M::identified, K::diamond_p, false};
    case Program::alg5: return {K::n, M::identified, K::p, false};
    case Program::theta_omega: return {K::theta, M::identified, K::omega, false};
    case Program::random_theta: return {K::n, M::anonymous, K::theta, false};
  }
  return {K::n, M::anonymous, std::nullopt, false};
}

bool oracle_compatible(Program p, DetectorKind oracle) {
  DetectorKind want = program_info(p).oracle;
  return oracle == want || (want == DetectorKind::diamond_n && oracle == DetectorKind::n);
}

AutomatonFactory make_factory(Program p, const SystemConfig& cfg, const ProgramOptions& options) {
  const DeliveryMode mode = program_info(p).mode;
  const RoundLimit limit{options.max_rounds};
  switch (p) {
    case Program::alg1: return alg1_automaton(cfg, options.mutation);
    case Program::alg2: return alg2_automaton(cfg, options.mutation);
    case Program::alg3: return alg3_automaton(cfg, options.mutation);
    case Program::alg4:
      if (options.mutation != Mutation::none) throw TransformError("alg4 has no mutations");
      return diamond_n_to_diamond_p(cfg, mode, limit);
    case Program::alg5: return n_to_p(cfg, mode, limit, options.mutation);
    case Program::theta_omega: return theta_to_omega(cfg, mode, limit);
    case Program::random_theta:
      return randomized_n_to_theta(cfg, mode, limit, options.id_bits, options.forced_ids);
  }
  throw std::invalid_argument("unknown program");
}

DetectorValue initial_output(Program p, const SystemConfig&) {
  switch (program_info(p).target.value_or(DetectorKind::n)) {
    case DetectorKind::p:
    case DetectorKind::diamond_p: return ProcessSet{};
    case DetectorKind::theta: return false;
    case DetectorKind::omega: return 1;
    default: return 0;
  }
}

}  // namespace anonfd
