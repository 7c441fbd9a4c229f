#include "anonfd/simulator.hpp"

#include <algorithm>
#include <random>

#include "world.hpp"

namespace anonfd {

std::string to_string(DeliveryMode mode) {
  return mode == DeliveryMode::anonymous ? "anonymous" : "identified";
}

DeliveryMode parse_delivery_mode(const std::string& text) {
  if (text == "anonymous") return DeliveryMode::anonymous;
  if (text == "identified") return DeliveryMode::identified;
  throw SimulationError("unknown delivery mode '" + text + "'");
}

std::string to_string(SchedulerKind kind) {
  switch (kind) {
    case SchedulerKind::fifo: return "fifo";
    case SchedulerKind::random: return "random";
    case SchedulerKind::crash_adjacent: return "crash-adjacent";
  }
  return "?";
}

SchedulerKind parse_scheduler_kind(const std::string& text) {
  if (text == "fifo") return SchedulerKind::fifo;
  if (text == "random") return SchedulerKind::random;
  if (text == "crash-adjacent") return SchedulerKind::crash_adjacent;
  throw SimulationError("unknown scheduler policy '" + text + "'");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Time default_horizon(const SystemConfig& cfg) {
  return static_cast<Time>(50) * (cfg.f + 2) * cfg.n * cfg.n;
}

void ScenarioConfig::validate() const {
  try {
    cfg.validate();
    pattern.validate(cfg);
  } catch (const ModelError& e) {
    throw SimulationError(e.what());
  }
  if (static_cast<int>(inputs.size()) != cfg.n) {
    throw SimulationError("inputs has " + std::to_string(inputs.size()) +
                          " entries, expected n=" + std::to_string(cfg.n));
  }
  if (horizon <= 0) throw SimulationError("horizon must be positive");
  if (sender_relabel && sender_relabel->n() != cfg.n) {
    throw SimulationError("sender relabeling has the wrong size");
  }
  if (oracle.history && (oracle.history->n() != cfg.n ||
                         oracle.history->range() != range_of(oracle.kind))) {
    throw SimulationError("scripted oracle history does not match the scenario");
  }
}

OracleRuntime make_oracle(const ScenarioConfig& scenario) {
  DetectorSpec spec(scenario.oracle.kind);
  if (scenario.oracle.history) return OracleRuntime(spec, *scenario.oracle.history);
  return OracleRuntime(spec, sample_history(scenario.oracle.kind, scenario.pattern, scenario.cfg,
                                            scenario.horizon, scenario.oracle.profile,
                                            derive_seed(scenario.seed, 2)));
}

Trace run(const ScenarioConfig& scenario, const AutomatonFactory& factory) {
  scenario.validate();
  OracleRuntime oracle = make_oracle(scenario);
  return run(scenario, factory, oracle);
}

namespace {

std::size_t pick(const std::vector<detail::InFlight>& pool, const ScenarioConfig& scenario,
                 Time now, std::mt19937_64& rng) {
  const auto& policy = scenario.policy;
  if (policy.max_age && now - pool.front().sent_at >= *policy.max_age) return 0;
  switch (policy.kind) {
    case SchedulerKind::fifo: return 0;
    case SchedulerKind::random: return static_cast<std::size_t>(rng() % pool.size());
    case SchedulerKind::crash_adjacent: {
      std::optional<std::size_t> best;
      Time best_crash = 0;
      for (std::size_t i = 0; i < pool.size(); ++i) {
        auto ct = scenario.pattern.crash_time(pool[i].sender);
        if (ct && (!best || *ct < best_crash)) {
          best = i;
          best_crash = *ct;
        }
      }
      if (best) return *best;
      return static_cast<std::size_t>(rng() % pool.size());
    }
  }
  return 0;
}

}  // namespace

Trace run(const ScenarioConfig& scenario, const AutomatonFactory& factory,
          const OracleRuntime& oracle) {
  scenario.validate();
  const SystemConfig& cfg = scenario.cfg;
  std::vector<Event> log;
  detail::World world(cfg, scenario.mode, scenario.inputs, factory, scenario.seed, &log);
  world.use_runtime(&oracle);
  world.set_relabel(scenario.sender_relabel);
  std::mt19937_64 rng(derive_seed(scenario.seed, 1));

  auto crash_due = [&](Time t) {
    for (const auto& [p, ct] : scenario.pattern.crash_times()) {
      if (ct == t && !world.crashed(p)) world.crash(p);
    }
  };
  auto future_crash = [&](Time t) {
    for (const auto& entry : scenario.pattern.crash_times()) {
      if (entry.second > t) return true;
    }
    return false;
  };

  // After this step no detector reading changes any more.
  Time oracle_stable = 0;
  const DetectorHistory& h = oracle.history();
  for (int i = 1; i <= cfg.n; ++i) {
    for (Time t = h.horizon(); t > oracle_stable; --t) {
      if (h.at(ProcessId(i), t) != h.at(ProcessId(i), t - 1)) {
        oracle_stable = t;
        break;
      }
    }
  }

  world.set_now(0);
  crash_due(0);
  world.start();

  TraceStatus status = TraceStatus::truncated;
  for (Time t = 1;; ++t) {
    if (world.all_halted()) {
      status = TraceStatus::complete;
      break;
    }
    if (t > scenario.horizon) {
      status = TraceStatus::truncated;
      break;
    }
    world.set_now(t);
    crash_due(t);
    world.poll_changed();
    if (!world.pool().empty()) {
      world.deliver(pick(world.pool(), scenario, t, rng));
      continue;
    }
    if (world.all_halted()) continue;
    if (!future_crash(t) && t >= oracle_stable) {
      status = TraceStatus::quiescent;
      break;
    }
  }

  Trace trace = world.snapshot_trace(scenario.pattern, status);
  trace.meta["seed"] = std::to_string(scenario.seed);
  return trace;
}

}  // namespace anonfd
