#include "anonfd/detectors.hpp"

#include <algorithm>
#include <functional>

namespace anonfd {

std::string to_string(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::n: return "N";
    case DetectorKind::diamond_n: return "DiamondN";
    case DetectorKind::theta: return "Theta";
    case DetectorKind::p: return "P";
    case DetectorKind::diamond_p: return "DiamondP";
    case DetectorKind::omega: return "Omega";
  }
  return "?";
}

DetectorKind parse_detector_kind(const std::string& text) {
  if (text == "N") return DetectorKind::n;
  if (text == "DiamondN") return DetectorKind::diamond_n;
  if (text == "Theta") return DetectorKind::theta;
  if (text == "P") return DetectorKind::p;
  if (text == "DiamondP") return DetectorKind::diamond_p;
  if (text == "Omega") return DetectorKind::omega;
  throw DetectorError("unknown detector kind '" + text + "'");
}

ValueRange range_of(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::n:
    case DetectorKind::diamond_n: return ValueRange::count;
    case DetectorKind::theta: return ValueRange::boolean;
    case DetectorKind::p:
    case DetectorKind::diamond_p: return ValueRange::process_set;
    case DetectorKind::omega: return ValueRange::process_id;
  }
  return ValueRange::count;
}

bool is_anonymous_kind(DetectorKind kind) {
  return kind == DetectorKind::n || kind == DetectorKind::diamond_n ||
         kind == DetectorKind::theta;
}

std::string to_string(PreConvergence behavior) {
  switch (behavior) {
    case PreConvergence::optimistic: return "optimistic";
    case PreConvergence::pessimistic: return "pessimistic";
    case PreConvergence::adversarial_random: return "adversarial-random";
  }
  return "?";
}

PreConvergence parse_pre_convergence(const std::string& text) {
  if (text == "optimistic") return PreConvergence::optimistic;
  if (text == "pessimistic") return PreConvergence::pessimistic;
  if (text == "adversarial-random") return PreConvergence::adversarial_random;
  throw DetectorError("unknown pre-convergence behavior '" + text + "'");
}

namespace {

void check_shape(const DetectorHistory& h, const FailurePattern& pattern, ValueRange expected) {
  if (h.range() != expected) {
    throw DetectorError("history range " + to_string(h.range()) + " where " +
                        to_string(expected) + " is required");
  }
  if (h.n() != pattern.n()) throw DetectorError("history / failure pattern size mismatch");
  if ((ProcessSet::all(h.n()) - pattern.crashed()).empty()) {
    throw DetectorError("failure pattern has no correct process");
  }
  const ProcessSet all = ProcessSet::all(h.n());
  for (int i = 1; i <= h.n(); ++i) {
    for (Time t = 0; t <= h.horizon(); ++t) {
      const DetectorValue& v = h.at(ProcessId(i), t);
      bool ok = false;
      switch (expected) {
        case ValueRange::count:
          ok = std::holds_alternative<int>(v) && std::get<int>(v) >= 0 &&
               std::get<int>(v) <= h.n();
          break;
        case ValueRange::boolean: ok = std::holds_alternative<bool>(v); break;
        case ValueRange::process_set:
          ok = std::holds_alternative<ProcessSet>(v) && std::get<ProcessSet>(v).subset_of(all);
          break;
        case ValueRange::process_id:
          ok = std::holds_alternative<int>(v) && std::get<int>(v) >= 1 &&
               std::get<int>(v) <= h.n();
          break;
      }
      if (!ok) {
        throw DetectorError("range violation at (" + to_string(ProcessId(i)) + ", " +
                            std::to_string(t) + "): " + to_string(v));
      }
    }
  }
}

Validation failure(std::string reason, ProcessId p, Time t) {
  Validation v;
  v.ok = false;
  v.reason = std::move(reason);
  v.process = p;
  v.time = t;
  return v;
}

using CellPredicate = std::function<bool(ProcessId, Time)>;

/// Earliest t such that pred holds for every member of `who` on [t, horizon],
/// or nullopt (with the offending process) if it fails at the horizon.
std::optional<Time> eventually_forever(const DetectorHistory& h, ProcessSet who,
                                       const CellPredicate& pred, ProcessId* offender) {
  Time witness = 0;
  for (ProcessId q : who.members()) {
    if (!pred(q, h.horizon())) {
      if (offender) *offender = q;
      return std::nullopt;
    }
    for (Time t = h.horizon(); t >= 0; --t) {
      if (!pred(q, t)) {
        witness = std::max(witness, t + 1);
        break;
      }
    }
  }
  return witness;
}

int count_at(const DetectorHistory& h, ProcessId q, Time t) { return std::get<int>(h.at(q, t)); }

Validation count_detector(const DetectorHistory& h, const FailurePattern& pattern,
                          bool perpetual_accuracy) {
  check_shape(h, pattern, ValueRange::count);
  const int crashed = pattern.crashed().size();
  const ProcessSet correct = ProcessSet::all(h.n()) - pattern.crashed();

  if (perpetual_accuracy) {
    for (ProcessId q : correct.members()) {
      for (Time t = 0; t <= h.horizon(); ++t) {
        if (count_at(h, q, t) > crashed) {
          return failure("accuracy: output " + std::to_string(count_at(h, q, t)) +
                             " exceeds |crashed(F)| = " + std::to_string(crashed),
                         q, t);
        }
      }
    }
  }

  ProcessId offender;
  auto complete = eventually_forever(
      h, correct, [&](ProcessId q, Time t) { return count_at(h, q, t) >= crashed; }, &offender);
  if (!complete) {
    return failure("completeness: final output below |crashed(F)| = " + std::to_string(crashed),
                   offender, h.horizon());
  }
  Time witness = *complete;
  if (!perpetual_accuracy) {
    auto accurate = eventually_forever(
        h, correct, [&](ProcessId q, Time t) { return count_at(h, q, t) <= crashed; },
        &offender);
    if (!accurate) {
      return failure("eventual accuracy: final output above |crashed(F)| = " +
                         std::to_string(crashed),
                     offender, h.horizon());
    }
    witness = std::max(witness, *accurate);
  }
  Validation ok;
  ok.witness = witness;
  return ok;
}

ProcessSet set_at(const DetectorHistory& h, ProcessId q, Time t) {
  return std::get<ProcessSet>(h.at(q, t));
}

Validation set_detector(const DetectorHistory& h, const FailurePattern& pattern,
                        bool perpetual_accuracy) {
  check_shape(h, pattern, ValueRange::process_set);
  const ProcessSet crashed = pattern.crashed();
  const ProcessSet correct = ProcessSet::all(h.n()) - crashed;

  if (perpetual_accuracy) {
    for (int i = 1; i <= h.n(); ++i) {
      ProcessId p(i);
      for (Time t = 0; t <= h.horizon() && pattern.alive_at(p, t); ++t) {
        ProcessSet early = set_at(h, p, t) - pattern.at(t);
        if (!early.empty()) {
          return failure("strong accuracy: " + to_string(early) + " suspected before crashing",
                         p, t);
        }
      }
    }
  }

  ProcessId offender;
  auto complete = eventually_forever(
      h, correct, [&](ProcessId q, Time t) { return crashed.subset_of(set_at(h, q, t)); },
      &offender);
  if (!complete) {
    return failure("strong completeness: crashed processes " + to_string(crashed) +
                       " not permanently suspected",
                   offender, h.horizon());
  }
  Time witness = *complete;
  if (!perpetual_accuracy) {
    auto accurate = eventually_forever(
        h, correct, [&](ProcessId q, Time t) { return (set_at(h, q, t) & correct).empty(); },
        &offender);
    if (!accurate) {
      return failure("eventual strong accuracy: a correct process is still suspected", offender,
                     h.horizon());
    }
    witness = std::max(witness, *accurate);
  }
  Validation ok;
  ok.witness = witness;
  return ok;
}

}  // namespace

Validation validate_n(const DetectorHistory& history, const FailurePattern& pattern) {
  return count_detector(history, pattern, true);
}

Validation validate_diamond_n(const DetectorHistory& history, const FailurePattern& pattern) {
  return count_detector(history, pattern, false);
}

Validation validate_theta(const DetectorHistory& h, const FailurePattern& pattern) {
  check_shape(h, pattern, ValueRange::boolean);
  const ProcessSet correct = ProcessSet::all(h.n()) - pattern.crashed();
  std::optional<ProcessId> leader;
  for (ProcessId q : correct.members()) {
    if (!std::get<bool>(h.tail(q))) continue;
    if (leader) {
      return failure("eventual self-trust: " + to_string(*leader) + " and " + to_string(q) +
                         " both trust themselves forever",
                     q, h.horizon());
    }
    leader = q;
  }
  if (!leader) {
    return failure("eventual self-trust: no correct process trusts itself at the end",
                   correct.members().front(), h.horizon());
  }
  auto witness = eventually_forever(
      h, correct,
      [&](ProcessId q, Time t) { return std::get<bool>(h.at(q, t)) == (q == *leader); },
      nullptr);
  Validation ok;
  ok.witness = witness;
  ok.process = leader;
  return ok;
}

Validation validate_p(const DetectorHistory& history, const FailurePattern& pattern) {
  return set_detector(history, pattern, true);
}

Validation validate_diamond_p(const DetectorHistory& history, const FailurePattern& pattern) {
  return set_detector(history, pattern, false);
}

Validation validate_omega(const DetectorHistory& h, const FailurePattern& pattern) {
  check_shape(h, pattern, ValueRange::process_id);
  const ProcessSet correct = ProcessSet::all(h.n()) - pattern.crashed();
  const ProcessId first = correct.members().front();
  const ProcessId leader(std::get<int>(h.tail(first)));
  if (!correct.contains(leader)) {
    return failure("eventual leader " + to_string(leader) + " is not correct", first,
                   h.horizon());
  }
  ProcessId offender;
  auto witness = eventually_forever(
      h, correct, [&](ProcessId q, Time t) { return std::get<int>(h.at(q, t)) == leader.index(); },
      &offender);
  if (!witness) {
    return failure("correct processes disagree on the eventual leader", offender, h.horizon());
  }
  Validation ok;
  ok.witness = witness;
  ok.process = leader;
  return ok;
}

Validation validate(DetectorKind kind, const DetectorHistory& history,
                    const FailurePattern& pattern) {
  switch (kind) {
    case DetectorKind::n: return validate_n(history, pattern);
    case DetectorKind::diamond_n: return validate_diamond_n(history, pattern);
    case DetectorKind::theta: return validate_theta(history, pattern);
    case DetectorKind::p: return validate_p(history, pattern);
    case DetectorKind::diamond_p: return validate_diamond_p(history, pattern);
    case DetectorKind::omega: return validate_omega(history, pattern);
  }
  throw DetectorError("unknown detector kind");
}

HistoryValidator DetectorSpec::validator() const {
  DetectorKind kind = kind_;
  return [kind](const DetectorHistory& h, const FailurePattern& f) {
    return validate(kind, h, f).ok;
  };
}

DetectorHistory alive_view(const DetectorHistory& history, int n) {
  if (history.range() != ValueRange::count) {
    throw DetectorError("alive_view needs a count-valued history");
  }
  DetectorHistory out(ValueRange::count, history.n(), history.horizon(), 0);
  for (int i = 1; i <= history.n(); ++i) {
    for (Time t = 0; t <= history.horizon(); ++t) {
      out.set(ProcessId(i), t, n - std::get<int>(history.at(ProcessId(i), t)));
    }
  }
  out.convergence = history.convergence;
  return out;
}

// ---------------------------------------------------------------------------
// Sampling

namespace {

class Sampler {
 public:
  Sampler(const FailurePattern& pattern, const SystemConfig& cfg, Time horizon,
          std::uint64_t seed)
      : pattern_(pattern), cfg_(cfg), horizon_(horizon), rng_(seed) {}

  std::uint64_t below(std::uint64_t bound) { return bound == 0 ? 0 : rng_() % bound; }

  /// Fills [0, until) of every row with piecewise-constant values.
  template <typename Draw>
  void fill_random(DetectorHistory& h, Time until, Draw draw) {
    for (int i = 1; i <= cfg_.n; ++i) {
      ProcessId p(i);
      Time t = 0;
      while (t < until) {
        Time len = 1 + static_cast<Time>(below(16));
        DetectorValue v = draw(p, t);
        for (Time u = t; u < std::min(until, t + len); ++u) h.set(p, u, v);
        t += len;
      }
    }
  }

  template <typename Value>
  void fill(DetectorHistory& h, Time from, Time until, Value value) {
    for (int i = 1; i <= cfg_.n; ++i) {
      ProcessId p(i);
      for (Time t = from; t < until && t <= horizon_; ++t) h.set(p, t, value(p, t));
    }
  }

  ProcessId random_correct() {
    auto correct = (cfg_.all() - pattern_.crashed()).members();
    return correct[below(correct.size())];
  }

  ProcessSet random_subset(ProcessSet of) {
    ProcessSet out;
    for (ProcessId p : of.members()) {
      if (below(2) == 1) out.insert(p);
    }
    return out;
  }

  const FailurePattern& pattern_;
  const SystemConfig& cfg_;
  Time horizon_;
  std::mt19937_64 rng_;
};

}  // namespace

DetectorHistory sample_history(DetectorKind kind, const FailurePattern& pattern,
                               const SystemConfig& cfg, Time horizon,
                               const OracleProfile& profile, std::uint64_t seed) {
  pattern.validate(cfg);
  if (horizon < 0) throw DetectorError("negative horizon");
  if (profile.convergence_time < 0 || profile.convergence_time > horizon) {
    throw DetectorError("convergence time " + std::to_string(profile.convergence_time) +
                        " outside [0, " + std::to_string(horizon) + "]");
  }
  if (pattern.last_crash() > horizon) {
    throw DetectorError("a crash is scheduled after the history horizon");
  }
  if ((cfg.all() - pattern.crashed()).empty()) {
    throw DetectorError("no correct process: Theta/Omega leaders cannot exist");
  }

  Sampler s(pattern, cfg, horizon, seed);
  const int crashed = pattern.crashed().size();
  const ProcessSet crashed_set = pattern.crashed();
  const PreConvergence mode = profile.behavior;
  Time conv = profile.convergence_time;

  DetectorHistory h(ValueRange::count, cfg.n, horizon, 0);
  switch (kind) {
    case DetectorKind::n:
    case DetectorKind::diamond_n: {
      const bool perpetual = kind == DetectorKind::n;
      if (perpetual) conv = std::max(conv, pattern.last_crash());
      auto current = [&](ProcessId, Time t) { return DetectorValue{pattern.at(t).size()}; };
      if (mode == PreConvergence::optimistic) {
        s.fill(h, 0, conv, current);
      } else if (mode == PreConvergence::pessimistic) {
        s.fill(h, 0, conv, [](ProcessId, Time) { return DetectorValue{0}; });
      } else {
        s.fill_random(h, conv, [&](ProcessId, Time t) {
          const int cap = perpetual ? pattern.at(t).size() : cfg.f;
          return DetectorValue{static_cast<int>(s.below(static_cast<std::uint64_t>(cap) + 1))};
        });
      }
      s.fill(h, conv, horizon + 1, [&](ProcessId, Time) { return DetectorValue{crashed}; });
      break;
    }
    case DetectorKind::theta: {
      h = DetectorHistory(ValueRange::boolean, cfg.n, horizon, false);
      const ProcessId leader = s.random_correct();
      if (mode == PreConvergence::optimistic) {
        s.fill(h, 0, conv, [&](ProcessId p, Time) { return DetectorValue{p == leader}; });
      } else if (mode == PreConvergence::adversarial_random) {
        s.fill_random(h, conv, [&](ProcessId, Time) { return DetectorValue{s.below(2) == 1}; });
      }
      for (int i = 1; i <= cfg.n; ++i) {
        ProcessId p(i);
        bool tail = crashed_set.contains(p) ? s.below(2) == 1 : p == leader;
        h.set_from(p, conv, tail);
      }
      break;
    }
    case DetectorKind::p:
    case DetectorKind::diamond_p: {
      const bool perpetual = kind == DetectorKind::p;
      if (perpetual) conv = std::max(conv, pattern.last_crash());
      h = DetectorHistory(ValueRange::process_set, cfg.n, horizon, ProcessSet{});
      if (mode == PreConvergence::optimistic) {
        s.fill(h, 0, conv, [&](ProcessId, Time t) { return DetectorValue{pattern.at(t)}; });
      } else if (mode == PreConvergence::adversarial_random) {
        s.fill_random(h, conv, [&](ProcessId, Time t) {
          return DetectorValue{s.random_subset(perpetual ? pattern.at(t) : cfg.all())};
        });
      }
      s.fill(h, conv, horizon + 1, [&](ProcessId, Time) { return DetectorValue{crashed_set}; });
      break;
    }
    case DetectorKind::omega: {
      h = DetectorHistory(ValueRange::process_id, cfg.n, horizon, 1);
      const ProcessId leader = s.random_correct();
      if (mode == PreConvergence::optimistic) {
        s.fill(h, 0, conv, [&](ProcessId, Time) { return DetectorValue{leader.index()}; });
      } else if (mode == PreConvergence::pessimistic) {
        s.fill(h, 0, conv, [](ProcessId p, Time) { return DetectorValue{p.index()}; });
      } else {
        s.fill_random(h, conv, [&](ProcessId, Time) {
          return DetectorValue{static_cast<int>(s.below(static_cast<std::uint64_t>(cfg.n))) + 1};
        });
      }
      s.fill(h, conv, horizon + 1, [&](ProcessId, Time) { return DetectorValue{leader.index()}; });
      break;
    }
  }
  h.convergence = conv;

  Validation check = validate(kind, h, pattern);
  if (!check.ok) {
    throw std::logic_error("sampled " + to_string(kind) + " history fails its own spec: " +
                           check.reason);
  }
  return h;
}

}  // namespace anonfd
