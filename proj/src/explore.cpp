#include <algorithm>
#include <map>
#include <string_view>
#include <unordered_set>

#include "anonfd/simulator.hpp"
#include "world.hpp"

namespace anonfd {

namespace {

struct StateHash {
  std::uint64_t a = 0;
  std::uint64_t b = 0;
  bool operator==(const StateHash&) const = default;
};

struct StateHashHasher {
  std::size_t operator()(const StateHash& h) const { return static_cast<std::size_t>(h.a ^ (h.b * 31)); }
};

// Two independent 64-bit digests; a collision in both is not a practical
// concern at the state counts explored here.
StateHash digest(std::string_view bytes) {
  std::uint64_t fnv = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    fnv ^= c;
    fnv *= 0x100000001b3ULL;
  }
  return {fnv, std::hash<std::string_view>{}(bytes)};
}

enum class ChoiceKind { deliver, crash, converge };

struct Choice {
  ChoiceKind kind;
  std::size_t index = 0;
  ProcessId process;
};

class Explorer {
 public:
  Explorer(const ExploreConfig& config, const AutomatonFactory& factory,
           const ExploreVisitor& visitor)
      : config_(config),
        factory_(factory),
        visitor_(visitor),
        budget_(config.max_crashes.value_or(config.cfg.f)) {}

  ExploreResult run() {
    const int n = config_.cfg.n;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n) && !stop_; ++mask) {
      ProcessSet initial = ProcessSet::from_bits(mask);
      if (initial.size() > budget_) continue;
      log_.clear();
      detail::World world(config_.cfg, config_.mode, config_.inputs, factory_, 0, &log_);
      world.track_sent(true);
      world.explore_oracle().kind = config_.oracle;
      for (ProcessId p : initial.members()) world.crash(p);
      world.start();
      dfs(world, 0);
    }
    return result_;
  }

 private:
  std::vector<Choice> choices(const detail::World& w) const {
    std::vector<Choice> out;
    std::vector<std::string> seen;
    for (std::size_t i = 0; i < w.pool().size(); ++i) {
      const auto& m = w.pool()[i];
      std::string tag;
      tag.push_back(static_cast<char>(m.receiver.index()));
      if (w.mode() == DeliveryMode::identified) tag.push_back(static_cast<char>(m.sender.index()));
      encode(m.msg, tag);
      if (std::find(seen.begin(), seen.end(), tag) != seen.end()) continue;
      seen.push_back(std::move(tag));
      out.push_back({ChoiceKind::deliver, i, m.receiver});
    }
    const auto& oracle = w.explore_oracle();
    if (oracle.needs_convergence() && !oracle.converged) {
      if (oracle.kind == DetectorKind::theta || oracle.kind == DetectorKind::omega) {
        for (int i = 1; i <= config_.cfg.n; ++i) {
          if (!w.crashed(ProcessId(i))) out.push_back({ChoiceKind::converge, 0, ProcessId(i)});
        }
      } else {
        out.push_back({ChoiceKind::converge, 0, ProcessId(1)});
      }
    }
    if (w.crash_count() < budget_) {
      for (int i = 1; i <= config_.cfg.n; ++i) {
        ProcessId p(i);
        if (!w.live(p)) continue;
        if (oracle.leader == p) continue;
        if (config_.max_crash_round && w.automaton(p).round() > *config_.max_crash_round) continue;
        out.push_back({ChoiceKind::crash, 0, p});
      }
    }
    return out;
  }

  bool over_round_cap(const detail::World& w) const {
    for (int i = 1; i <= config_.cfg.n; ++i) {
      ProcessId p(i);
      if (w.live(p) && w.automaton(p).round() > *config_.max_round) return true;
    }
    return false;
  }

  static void apply(detail::World& w, const Choice& c) {
    w.set_now(w.now() + 1);
    switch (c.kind) {
      case ChoiceKind::deliver: w.deliver(c.index); break;
      case ChoiceKind::crash:
        w.crash(c.process);
        w.poll_changed();
        break;
      case ChoiceKind::converge: {
        auto& oracle = w.explore_oracle();
        oracle.converged = true;
        if (oracle.kind == DetectorKind::theta || oracle.kind == DetectorKind::omega) {
          oracle.leader = c.process;
        }
        w.log_converge();
        w.poll_changed();
        break;
      }
    }
  }

  FailurePattern realized_pattern() const {
    std::map<ProcessId, Time> crash;
    for (const Event& e : log_) {
      if (e.kind == EventKind::crash) crash[e.process] = e.step;
    }
    return FailurePattern(config_.cfg.n, std::move(crash));
  }

  void dfs(const detail::World& w, std::size_t depth) {
    if (stop_) return;
    if (!visited_.insert(digest(w.key())).second) return;
    if (++result_.states > config_.max_states) {
      result_.partial = true;
      stop_ = true;
      return;
    }
    if (visitor_.on_state) {
      auto views = w.views();
      StateView view{config_.cfg, views, w.crashed_set(), w.sent(), log_};
      if (!visitor_.on_state(view)) {
        result_.stopped = stop_ = true;
        return;
      }
    }

    if (config_.max_round && over_round_cap(w)) {
      ++result_.round_capped;
      return;
    }

    auto next = choices(w);
    bool maximal = std::none_of(next.begin(), next.end(),
                                [](const Choice& c) { return c.kind != ChoiceKind::crash; });
    if (maximal) {
      ++result_.terminals;
      if (visitor_.on_terminal) {
        Trace t = w.snapshot_trace(realized_pattern(), w.all_halted() ? TraceStatus::complete
                                                                       : TraceStatus::quiescent);
        if (!visitor_.on_terminal(t)) {
          result_.stopped = stop_ = true;
          return;
        }
      }
    }
    if (depth >= config_.max_depth) {
      result_.partial = true;
      return;
    }
    for (const Choice& c : next) {
      const std::size_t mark = log_.size();
      detail::World child(w);
      apply(child, c);
      ++result_.transitions;
      dfs(child, depth + 1);
      log_.resize(mark);
      if (stop_) return;
    }
  }

  const ExploreConfig& config_;
  const AutomatonFactory& factory_;
  const ExploreVisitor& visitor_;
  int budget_;
  std::vector<Event> log_;
  std::unordered_set<StateHash, StateHashHasher> visited_;
  ExploreResult result_;
  bool stop_ = false;
};

}  // namespace

ExploreResult explore(const ExploreConfig& config, const AutomatonFactory& factory,
                      const ExploreVisitor& visitor) {
  config.cfg.validate();
  if (static_cast<int>(config.inputs.size()) != config.cfg.n) {
    throw SimulationError("explore: inputs size does not match n");
  }
  if (config.cfg.n > 3) throw SimulationError("explore is limited to n <= 3");
  return Explorer(config, factory, visitor).run();
}

std::vector<Trace> explore_traces(const ExploreConfig& config, const AutomatonFactory& factory,
                                  ExploreResult* result) {
  std::vector<Trace> traces;
  ExploreVisitor visitor;
  visitor.on_terminal = [&](const Trace& t) {
    traces.push_back(t);
    return true;
  };
  ExploreResult r = explore(config, factory, visitor);
  if (result) *result = r;
  return traces;
}

}  // namespace anonfd
