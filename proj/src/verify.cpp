#include "anonfd/verify.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace anonfd {

namespace {

CheckReport make(std::string property, Verdict verdict, nlohmann::json witness = nlohmann::json::array(),
                 std::string detail = "") {
  return {std::move(property), verdict, std::move(witness), std::move(detail)};
}

std::vector<std::vector<std::size_t>> decide_events(const Trace& trace) {
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(trace.cfg.n));
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const Event& e = trace.events[i];
    if (e.kind == EventKind::decide) out[e.process.slot()].push_back(i);
  }
  return out;
}

FailurePattern realized_pattern(const Trace& trace) {
  std::map<ProcessId, Time> crash;
  for (const Event& e : trace.events) {
    if (e.kind == EventKind::crash) crash[e.process] = e.step;
  }
  return FailurePattern(trace.cfg.n, std::move(crash));
}

nlohmann::json ids_json(ProcessSet s) {
  nlohmann::json out = nlohmann::json::array();
  for (ProcessId p : s.members()) out.push_back(p.index());
  return out;
}

CheckReport stubbornness(const Trace& trace) {
  std::vector<std::optional<std::size_t>> one_at(static_cast<std::size_t>(trace.cfg.n));
  bool any = false;
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const Event& e = trace.events[i];
    if (e.kind != EventKind::round && e.kind != EventKind::decide) continue;
    any = true;
    auto& seen = one_at[e.process.slot()];
    if (e.value == 1 && !seen) seen = i;
    if (e.value == 0 && seen) {
      return make("stubbornness", Verdict::fail, {*seen, i},
                  to_string(e.process) + " held 1 and later 0");
    }
  }
  return make("stubbornness", any ? Verdict::pass : Verdict::vacuous);
}

CheckReport lock_exclusivity(const Trace& trace) {
  std::map<int, std::size_t> first;
  bool any = false;
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const Event& e = trace.events[i];
    if (e.kind != EventKind::send || e.message.type != MsgType::lock || e.message.value == kUnset) {
      continue;
    }
    any = true;
    auto [it, inserted] = first.emplace(e.message.round, i);
    if (!inserted && trace.events[it->second].message.value != e.message.value) {
      return make("lock-exclusivity", Verdict::fail, {it->second, i},
                  "round " + std::to_string(e.message.round) + " carries locks 0 and 1");
    }
  }
  return make("lock-exclusivity", any ? Verdict::pass : Verdict::vacuous);
}

CheckReport decision_spread(const Trace& trace) {
  std::optional<std::size_t> first;
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    if (trace.events[i].kind == EventKind::decide) {
      first = i;
      break;
    }
  }
  if (!first) {
    return make("decision-spread", trace.truncated() ? Verdict::truncated : Verdict::vacuous);
  }
  const Event& head = trace.events[*first];
  ProcessSet decided;
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const Event& e = trace.events[i];
    if (e.kind != EventKind::decide) continue;
    decided.insert(e.process);
    if (e.value != head.value || e.round > head.round + 1) {
      return make("decision-spread", Verdict::fail, {*first, i},
                  to_string(e.process) + " decided " + std::to_string(e.value) + " in round " +
                      std::to_string(e.round) + " after the first decision " +
                      std::to_string(head.value) + " in round " + std::to_string(head.round));
    }
  }
  ProcessSet missing = trace.correct() - decided;
  if (missing.empty()) return make("decision-spread", Verdict::pass);
  if (trace.truncated()) return make("decision-spread", Verdict::truncated, ids_json(missing));
  return make("decision-spread", Verdict::fail, ids_json(missing),
              "correct processes never followed the first decision");
}

CheckReport unique_decide(const Trace& trace) {
  std::optional<std::size_t> first;
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const Event& e = trace.events[i];
    if (e.kind != EventKind::send || e.message.type != MsgType::decide) continue;
    if (!first) {
      first = i;
    } else if (trace.events[*first].message.value != e.message.value) {
      return make("unique-decide", Verdict::fail, {*first, i}, "Decide messages carry 0 and 1");
    }
  }
  return make("unique-decide", first ? Verdict::pass : Verdict::vacuous);
}

CheckReport round_skew(const Trace& trace) {
  const int bound = trace.cfg.f + 1;
  std::vector<std::optional<int>> round(static_cast<std::size_t>(trace.cfg.n));
  ProcessSet crashed;
  int worst = 0;
  auto check = [&](std::size_t at) -> std::optional<CheckReport> {
    std::optional<int> lo, hi;
    for (int i = 1; i <= trace.cfg.n; ++i) {
      const auto& r = round[static_cast<std::size_t>(i - 1)];
      if (!r || crashed.contains(ProcessId(i))) continue;
      lo = std::min(lo.value_or(*r), *r);
      hi = std::max(hi.value_or(*r), *r);
    }
    if (!lo) return std::nullopt;
    worst = std::max(worst, *hi - *lo);
    if (*hi - *lo > bound) {
      return make("round-skew", Verdict::fail, {at},
                  "round difference " + std::to_string(*hi - *lo) + " exceeds " +
                      std::to_string(bound) + " at step " +
                      std::to_string(trace.events[at].step));
    }
    return std::nullopt;
  };
  bool any = false;
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const Event& e = trace.events[i];
    if (e.kind == EventKind::round) {
      round[e.process.slot()] = e.round;
      any = true;
    }
    if (e.kind == EventKind::crash) crashed.insert(e.process);
    const bool step_ends = i + 1 == trace.events.size() || trace.events[i + 1].step != e.step;
    if (step_ends) {
      if (auto bad = check(i)) return *bad;
    }
  }
  if (!any) return make("round-skew", Verdict::vacuous);
  return make("round-skew", Verdict::pass, nlohmann::json::array(),
              "maximum skew " + std::to_string(worst));
}

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::vacuous: return "vacuous";
    case Verdict::truncated: return "truncated";
  }
  return "?";
}

Verdict parse_verdict(const std::string& text) {
  for (Verdict v : {Verdict::pass, Verdict::fail, Verdict::vacuous, Verdict::truncated}) {
    if (to_string(v) == text) return v;
  }
  throw std::invalid_argument("unknown verdict '" + text + "'");
}

nlohmann::json to_json(const CheckReport& r) {
  nlohmann::json j = {{"property", r.property}, {"verdict", to_string(r.verdict)}, {"witness", r.witness}};
  if (!r.detail.empty()) j["detail"] = r.detail;
  return j;
}

CheckReport report_from_json(const nlohmann::json& j) {
  return {j.at("property").get<std::string>(), parse_verdict(j.at("verdict").get<std::string>()),
          j.value("witness", nlohmann::json::array()), j.value("detail", std::string())};
}

std::vector<CheckReport> check_consensus(const Trace& trace) {
  std::vector<CheckReport> out;
  auto decides = decide_events(trace);
  const ProcessSet correct = trace.correct();

  ProcessSet undecided;
  for (ProcessId p : correct.members()) {
    if (decides[p.slot()].empty()) undecided.insert(p);
  }
  if (undecided.empty()) {
    out.push_back(make("termination", Verdict::pass));
  } else if (trace.truncated()) {
    out.push_back(make("termination", Verdict::truncated, ids_json(undecided),
                       "trace truncated before every correct process decided"));
  } else {
    out.push_back(make("termination", Verdict::fail, ids_json(undecided),
                       "correct processes never decide"));
  }

  CheckReport irrevocability = make("irrevocability", Verdict::pass);
  for (const auto& list : decides) {
    if (list.size() > 1) {
      irrevocability = make("irrevocability", Verdict::fail, {list[0], list[1]},
                            to_string(trace.events[list[0]].process) + " decided twice");
      break;
    }
  }
  out.push_back(irrevocability);

  std::optional<std::size_t> reference;
  CheckReport agreement = make("agreement", Verdict::vacuous);
  for (ProcessId p : correct.members()) {
    const auto& list = decides[p.slot()];
    if (list.empty()) continue;
    if (!reference) {
      reference = list.front();
      agreement.verdict = Verdict::pass;
    } else if (trace.events[*reference].value != trace.events[list.front()].value) {
      agreement = make("agreement", Verdict::fail, {*reference, list.front()},
                       "correct processes decided 0 and 1");
      break;
    }
  }
  out.push_back(agreement);

  CheckReport validity = make("validity", Verdict::vacuous);
  for (const auto& list : decides) {
    for (std::size_t i : list) {
      const int v = trace.events[i].value;
      if (std::find(trace.inputs.begin(), trace.inputs.end(), v) == trace.inputs.end()) {
        validity = make("validity", Verdict::fail, {i}, "decided " + std::to_string(v) +
                                                            " which nobody proposed");
        break;
      }
      validity.verdict = Verdict::pass;
    }
    if (validity.failed()) break;
  }
  out.push_back(validity);
  return out;
}

std::vector<CheckReport> check_lemma_invariants(const Trace& trace, Program program) {
  if (trace.meta.contains("algorithm") && trace.meta["algorithm"] != to_string(program)) {
    throw std::invalid_argument("trace was produced by " + trace.meta["algorithm"].dump() +
                                ", not " + to_string(program));
  }
  switch (program) {
    case Program::alg1: return {stubbornness(trace)};
    case Program::alg2: return {lock_exclusivity(trace), decision_spread(trace)};
    case Program::alg3: return {unique_decide(trace)};
    case Program::alg5: return {round_skew(trace)};
    default: return {};
  }
}

std::vector<CheckReport> check_trace_wellformed(const Trace& trace) {
  std::vector<CheckReport> out;
  const FailurePattern realized = realized_pattern(trace);

  CheckReport pattern = make("crash-pattern", Verdict::pass);
  for (const auto& [p, t] : trace.pattern.crash_times()) {
    auto got = realized.crash_time(p);
    const bool reached = t <= trace.end_step;
    if ((reached && got != t) || (!reached && got)) {
      pattern = make("crash-pattern", Verdict::fail, {p.index()},
                     to_string(p) + " should crash at step " + std::to_string(t));
      break;
    }
  }
  for (const auto& [p, t] : realized.crash_times()) {
    if (trace.pattern.crash_time(p) != t) {
      pattern = make("crash-pattern", Verdict::fail, {p.index()},
                     to_string(p) + " crashed at step " + std::to_string(t) + " unscheduled");
    }
  }
  out.push_back(pattern);

  CheckReport ghost = make("no-ghost-steps", Verdict::pass);
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const Event& e = trace.events[i];
    auto ct = realized.crash_time(e.process);
    if (e.kind != EventKind::crash && e.kind != EventKind::converge && ct && e.step >= *ct) {
      ghost = make("no-ghost-steps", Verdict::fail, {i},
                   to_string(e.process) + " acts after crashing");
      break;
    }
  }
  out.push_back(ghost);

  if (trace.truncated()) {
    out.push_back(make("reliability", Verdict::truncated));
    return out;
  }
  std::multiset<Message> sent;
  std::vector<std::multiset<Message>> delivered(static_cast<std::size_t>(trace.cfg.n));
  ProcessSet halted;
  for (const Event& e : trace.events) {
    if (e.kind == EventKind::send) sent.insert(e.message);
    if (e.kind == EventKind::deliver) delivered[e.process.slot()].insert(e.message);
    if (e.kind == EventKind::halt) halted.insert(e.process);
  }
  CheckReport reliability = make("reliability", Verdict::pass);
  for (int i = 1; i <= trace.cfg.n; ++i) {
    ProcessId q(i);
    const auto& got = delivered[q.slot()];
    const bool live = !realized.crash_time(q) && !halted.contains(q);
    const bool ok = live ? got == sent : std::includes(sent.begin(), sent.end(), got.begin(), got.end());
    if (!ok) {
      reliability = make("reliability", Verdict::fail, {q.index()},
                         to_string(q) + " received " + std::to_string(got.size()) + " of " +
                             std::to_string(sent.size()) + " broadcasts");
      break;
    }
  }
  out.push_back(reliability);
  return out;
}

CheckReport check_history(DetectorKind kind, const DetectorHistory& history,
                          const FailurePattern& pattern) {
  Validation v = validate(kind, history, pattern);
  std::string property = "valid-" + to_string(kind);
  if (v.ok) {
    nlohmann::json w = nlohmann::json::array();
    return make(property, Verdict::pass, w,
                v.witness ? "eventual clauses hold from t=" + std::to_string(*v.witness) : "");
  }
  nlohmann::json w = nlohmann::json::array();
  if (v.process && v.time) w.push_back({v.process->index(), *v.time});
  return make(property, Verdict::fail, w, v.reason);
}

CheckReport check_emulation(const Trace& trace, Program program) {
  auto target = program_info(program).target;
  if (!target) throw std::invalid_argument(to_string(program) + " emulates no detector");
  DetectorHistory h =
      assemble_output_history(trace, range_of(*target), initial_output(program, trace.cfg));
  CheckReport r = check_history(*target, h, realized_pattern(trace));
  r.property = "emulated-" + to_string(*target);
  return r;
}

std::string to_string(Symmetry s) { return s == Symmetry::symmetric ? "symmetric" : "unsymmetrical"; }

SymmetryReport classify_symmetry(const DetectorHistory& history, const FailurePattern& pattern) {
  const auto correct = (ProcessSet::all(history.n()) - pattern.crashed()).members();
  auto disagree_at = [&](Time t) -> std::optional<std::pair<ProcessId, ProcessId>> {
    for (std::size_t i = 1; i < correct.size(); ++i) {
      if (history.at(correct[i], t) != history.at(correct[0], t)) {
        return std::make_pair(correct[0], correct[i]);
      }
    }
    return std::nullopt;
  };
  SymmetryReport r;
  for (Time t = 0; t <= history.horizon(); ++t) {
    if (auto d = disagree_at(t)) {
      r.strict = Symmetry::unsymmetrical;
      r.first_disagreement = std::make_tuple(t, d->first, d->second);
      break;
    }
  }
  if (disagree_at(history.horizon())) {
    r.suffix = Symmetry::unsymmetrical;
    return r;
  }
  Time from = history.horizon();
  while (from > 0 && !disagree_at(from - 1)) --from;
  r.agree_from = from;
  return r;
}

CheckReport check_permutation_closure(DetectorKind kind, const FailurePattern& pattern,
                                      const DetectorHistory& history,
                                      const std::vector<Permutation>& perms,
                                      AnonymityConvention convention) {
  AnonymityVerdict v = is_anonymous(DetectorSpec(kind).validator(), pattern, history, perms, convention);
  if (v.anonymous) {
    return make("permutation-closure", Verdict::pass, nlohmann::json::array(),
                std::to_string(v.checked) + " permutations checked");
  }
  nlohmann::json images = nlohmann::json::array();
  for (ProcessId p : v.violating->images()) images.push_back(p.index());
  return make("permutation-closure", Verdict::fail, images,
              "relabeling " + to_string(*v.violating) + " leaves the detector's legal set");
}

std::optional<std::string> state_round_skew(const StateView& state, int bound) {
  std::optional<int> lo, hi;
  for (const ProcessView& p : state.processes) {
    if (p.crashed) continue;
    lo = std::min(lo.value_or(p.round), p.round);
    hi = std::max(hi.value_or(p.round), p.round);
  }
  if (lo && *hi - *lo > bound) {
    return "round skew " + std::to_string(*hi - *lo) + " exceeds " + std::to_string(bound);
  }
  return std::nullopt;
}

std::optional<std::string> state_lock_exclusivity(const StateView& state) {
  std::map<int, int> tag;
  for (const Message& m : state.sent) {
    if (m.type != MsgType::lock || m.value == kUnset) continue;
    auto [it, inserted] = tag.emplace(m.round, m.value);
    if (!inserted && it->second != m.value) {
      return "round " + std::to_string(m.round) + " has Lock messages for 0 and 1";
    }
  }
  return std::nullopt;
}

std::optional<std::string> state_unique_decide(const StateView& state) {
  std::optional<int> value;
  for (const Message& m : state.sent) {
    if (m.type != MsgType::decide) continue;
    if (value && *value != m.value) return "Decide messages for 0 and 1";
    value = m.value;
  }
  return std::nullopt;
}

std::optional<std::string> state_no_false_suspicion(const StateView& state) {
  for (std::size_t i = 0; i < state.processes.size(); ++i) {
    const ProcessView& p = state.processes[i];
    if (p.crashed || !p.output) continue;
    const ProcessSet* s = std::get_if<ProcessSet>(&*p.output);
    if (s && !s->subset_of(state.crashed)) {
      return to_string(ProcessId::from_slot(i)) + " suspects " + to_string(*s - state.crashed) +
             " before it crashed";
    }
  }
  return std::nullopt;
}

bool any_failed(const std::vector<CheckReport>& reports) {
  return std::any_of(reports.begin(), reports.end(), [](const CheckReport& r) { return r.failed(); });
}

}  // namespace anonfd
