#include "anonfd/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <filesystem>
#include <mutex>
#include <random>
#include <thread>

namespace anonfd {

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& why) {
  throw FormatError("field '" + field + "': " + why);
}

template <class T>
T get(const nlohmann::json& j, const std::string& field) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    bad(field, "has the wrong type");
  }
}

std::uint64_t parse_u64(const nlohmann::json& j, const std::string& field) {
  if (j.is_number_unsigned() || j.is_number_integer()) {
    if (j.is_number_integer() && j.get<std::int64_t>() < 0) bad(field, "must be non-negative");
    return j.get<std::uint64_t>();
  }
  if (j.is_string()) {
    try {
      std::size_t used = 0;
      std::uint64_t v = std::stoull(j.get<std::string>(), &used);
      if (used == j.get<std::string>().size()) return v;
    } catch (const std::exception&) {
    }
  }
  bad(field, "must be an unsigned integer or a decimal string");
}

SchedulerPolicy parse_policy(const nlohmann::json& j) {
  SchedulerPolicy policy;
  try {
    if (j.is_string()) {
      policy.kind = parse_scheduler_kind(j.get<std::string>());
    } else if (j.is_object()) {
      policy.kind = parse_scheduler_kind(get<std::string>(j.at("kind"), "policy.kind"));
      if (j.contains("max_age")) {
        policy.max_age = get<Time>(j.at("max_age"), "policy.max_age");
        if (*policy.max_age <= 0) bad("policy.max_age", "must be positive");
      }
    } else {
      bad("policy", "must be a string or an object");
    }
  } catch (const SimulationError& e) {
    bad("policy", e.what());
  } catch (const nlohmann::json::exception&) {
    bad("policy.kind", "is missing");
  }
  return policy;
}

nlohmann::json policy_json(const SchedulerPolicy& p) {
  nlohmann::json j = {{"kind", to_string(p.kind)}};
  if (p.max_age) j["max_age"] = *p.max_age;
  return j;
}

std::vector<std::vector<int>> all_binary(int n) {
  std::vector<std::vector<int>> out;
  for (int mask = 0; mask < (1 << n); ++mask) {
    std::vector<int> v;
    for (int i = 0; i < n; ++i) v.push_back((mask >> i) & 1);
    out.push_back(v);
  }
  return out;
}

}  // namespace

ScenarioSpec parse_scenario(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("scenario must be a JSON object");
  if (!j.contains("schema")) bad("schema", "is missing");
  if (j.at("schema") != kSchemaVersion) bad("schema", "unsupported version " + j.at("schema").dump());

  ScenarioSpec s;
  if (!j.contains("algorithm")) bad("algorithm", "is missing");
  try {
    s.program = parse_program(get<std::string>(j.at("algorithm"), "algorithm"));
  } catch (const std::invalid_argument& e) {
    if (dynamic_cast<const FormatError*>(&e)) throw;
    bad("algorithm", e.what());
  }
  if (!j.contains("n")) bad("n", "is missing");
  if (!j.contains("f")) bad("f", "is missing");
  s.cfg = {get<int>(j.at("n"), "n"), get<int>(j.at("f"), "f")};
  try {
    s.cfg.validate();
  } catch (const ModelError& e) {
    bad("f", e.what());
  }

  if (j.contains("inputs")) {
    const auto& in = j.at("inputs");
    if (in == "random") {
    } else if (in == "all") {
      s.all_inputs = true;
    } else {
      auto v = get<std::vector<int>>(in, "inputs");
      if (static_cast<int>(v.size()) != s.cfg.n) bad("inputs", "needs exactly n entries");
      for (int x : v) {
        if (x != 0 && x != 1) bad("inputs", "values must be 0 or 1");
      }
      s.inputs = v;
    }
  }

  if (j.contains("crash")) {
    const auto& c = j.at("crash");
    if (c != "random") {
      try {
        s.crash = crash_map_from_json(c, s.cfg.n);
      } catch (const FormatError& e) {
        bad("crash", e.what());
      }
      if (static_cast<int>(s.crash->size()) > s.cfg.f) bad("crash", "more than f crashes");
    }
  } else {
    s.crash = std::map<ProcessId, Time>{};
  }
  if (j.contains("crash_window")) {
    s.crash_window = get<Time>(j.at("crash_window"), "crash_window");
    if (*s.crash_window < 0) bad("crash_window", "must be non-negative");
  }

  s.oracle = program_info(s.program).oracle;
  if (j.contains("oracle")) {
    const auto& o = j.at("oracle");
    if (!o.is_object()) bad("oracle", "must be an object");
    if (o.contains("kind")) {
      try {
        s.oracle = parse_detector_kind(get<std::string>(o.at("kind"), "oracle.kind"));
      } catch (const DetectorError& e) {
        bad("oracle.kind", e.what());
      }
    }
    if (o.contains("profile")) {
      try {
        s.behavior = parse_pre_convergence(get<std::string>(o.at("profile"), "oracle.profile"));
      } catch (const DetectorError& e) {
        bad("oracle.profile", e.what());
      }
    }
    if (o.contains("convergence") && o.at("convergence") != "random") {
      s.convergence = get<Time>(o.at("convergence"), "oracle.convergence");
      if (*s.convergence < 0) bad("oracle.convergence", "must be non-negative");
    }
    if (o.contains("history")) {
      std::optional<HistoryFile> parsed;
      try {
        parsed = history_from_json(o.at("history"));
      } catch (const FormatError& e) {
        bad("oracle.history", e.what());
      }
      HistoryFile& h = *parsed;
      if (h.kind && *h.kind != s.oracle) bad("oracle.history.kind", "does not match oracle.kind");
      if (h.history.n() != s.cfg.n) bad("oracle.history.out", "needs one row per process");
      if (h.history.range() != range_of(s.oracle)) bad("oracle.history.range", "does not match oracle.kind");
      s.history = std::move(h.history);
    }
  }
  if (!oracle_compatible(s.program, s.oracle)) {
    bad("oracle.kind", to_string(s.program) + " runs on " + to_string(program_info(s.program).oracle) +
                           ", not " + to_string(s.oracle));
  }

  if (j.contains("policy")) s.policy = parse_policy(j.at("policy"));
  if (j.contains("seed")) s.seed = parse_u64(j.at("seed"), "seed");
  if (j.contains("horizon")) {
    s.horizon = get<Time>(j.at("horizon"), "horizon");
    if (*s.horizon <= 0) bad("horizon", "must be positive");
  }

  if (j.contains("mutation")) {
    try {
      s.options.mutation = parse_mutation(get<std::string>(j.at("mutation"), "mutation"));
    } catch (const FormatError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      bad("mutation", e.what());
    }
  }
  if (j.contains("max_rounds")) {
    s.options.max_rounds = get<int>(j.at("max_rounds"), "max_rounds");
    if (*s.options.max_rounds < 1) bad("max_rounds", "must be positive");
  }
  if (j.contains("id_bits")) s.options.id_bits = get<int>(j.at("id_bits"), "id_bits");
  if (j.contains("forced_ids")) {
    const auto& ids = j.at("forced_ids");
    if (!ids.is_array() || static_cast<int>(ids.size()) > s.cfg.n) {
      bad("forced_ids", "must be an array of at most n entries");
    }
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i].is_null()) {
        s.options.forced_ids.push_back(std::nullopt);
      } else {
        s.options.forced_ids.push_back(parse_u64(ids[i], "forced_ids[" + std::to_string(i) + "]"));
      }
    }
  }
  if (j.contains("max_crash_round")) s.max_crash_round = get<int>(j.at("max_crash_round"), "max_crash_round");
  if (j.contains("max_round")) s.max_round = get<int>(j.at("max_round"), "max_round");
  if (j.contains("max_states")) s.max_states = get<std::size_t>(j.at("max_states"), "max_states");

  try {
    make_factory(s.program, s.cfg, s.options);
  } catch (const ConsensusError& e) {
    bad(s.options.mutation == Mutation::none ? "f" : "mutation", e.what());
  } catch (const TransformError& e) {
    bad(s.options.mutation == Mutation::none ? "algorithm" : "mutation", e.what());
  }
  return s;
}

nlohmann::json scenario_to_json(const ScenarioSpec& s) {
  nlohmann::json j = {{"schema", kSchemaVersion}, {"algorithm", to_string(s.program)},
                      {"n", s.cfg.n},             {"f", s.cfg.f}};
  if (s.all_inputs) {
    j["inputs"] = "all";
  } else if (s.inputs) {
    j["inputs"] = *s.inputs;
  } else {
    j["inputs"] = "random";
  }
  if (s.crash) {
    j["crash"] = pattern_to_json(s.cfg, FailurePattern(s.cfg.n, *s.crash))["crash"];
  } else {
    j["crash"] = "random";
  }
  if (s.crash_window) j["crash_window"] = *s.crash_window;
  nlohmann::json o = {{"kind", to_string(s.oracle)}, {"profile", to_string(s.behavior)}};
  o["convergence"] = s.convergence ? nlohmann::json(*s.convergence) : nlohmann::json("random");
  if (s.history) o["history"] = history_to_json(*s.history, s.oracle);
  j["oracle"] = o;
  j["policy"] = policy_json(s.policy);
  j["seed"] = s.seed;
  if (s.horizon) j["horizon"] = *s.horizon;
  if (s.options.mutation != Mutation::none) j["mutation"] = to_string(s.options.mutation);
  if (s.options.max_rounds) j["max_rounds"] = *s.options.max_rounds;
  if (s.options.id_bits != 64) j["id_bits"] = s.options.id_bits;
  if (!s.options.forced_ids.empty()) {
    nlohmann::json ids = nlohmann::json::array();
    for (const auto& id : s.options.forced_ids) {
      ids.push_back(id ? nlohmann::json(std::to_string(*id)) : nlohmann::json(nullptr));
    }
    j["forced_ids"] = ids;
  }
  if (s.max_crash_round) j["max_crash_round"] = *s.max_crash_round;
  if (s.max_round) j["max_round"] = *s.max_round;
  return j;
}

ResolvedScenario resolve(const ScenarioSpec& spec, std::uint64_t seed) {
  const Time horizon = spec.horizon.value_or(default_horizon(spec.cfg));
  std::mt19937_64 rng(derive_seed(seed, 3));
  auto uniform = [&rng](std::uint64_t lo, std::uint64_t hi) {
    return lo + rng() % (hi - lo + 1);
  };

  ScenarioConfig sc;
  sc.cfg = spec.cfg;
  sc.seed = seed;
  sc.horizon = horizon;
  sc.policy = spec.policy;
  sc.mode = program_info(spec.program).mode;

  if (spec.inputs) {
    sc.inputs = *spec.inputs;
  } else {
    for (int i = 0; i < spec.cfg.n; ++i) sc.inputs.push_back(static_cast<int>(rng() & 1));
  }

  if (spec.crash) {
    sc.pattern = FailurePattern(spec.cfg.n, *spec.crash);
  } else {
    const Time window = spec.crash_window.value_or(horizon / 10);
    const int k = static_cast<int>(uniform(0, static_cast<std::uint64_t>(spec.cfg.f)));
    std::vector<int> order(static_cast<std::size_t>(spec.cfg.n));
    for (int i = 0; i < spec.cfg.n; ++i) order[static_cast<std::size_t>(i)] = i + 1;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    std::map<ProcessId, Time> crash;
    for (int i = 0; i < k; ++i) {
      crash[ProcessId(order[static_cast<std::size_t>(i)])] =
          static_cast<Time>(uniform(0, static_cast<std::uint64_t>(window)));
    }
    sc.pattern = FailurePattern(spec.cfg.n, std::move(crash));
  }

  sc.oracle.kind = spec.oracle;
  sc.oracle.profile.behavior = spec.behavior;
  sc.oracle.profile.convergence_time =
      spec.convergence ? *spec.convergence
                       : static_cast<Time>(uniform(0, static_cast<std::uint64_t>(horizon / 4)));
  sc.oracle.history = spec.history;
  return {spec.program, std::move(sc), spec.options};
}

Trace run_resolved(const ResolvedScenario& r) {
  Trace t = run(r.scenario, make_factory(r.program, r.scenario.cfg, r.options));
  t.meta["algorithm"] = to_string(r.program);
  t.meta["oracle"] = to_string(r.scenario.oracle.kind);
  t.meta["profile"] = to_string(r.scenario.oracle.profile.behavior);
  t.meta["convergence"] = r.scenario.oracle.profile.convergence_time;
  t.meta["policy"] = to_string(r.scenario.policy.kind);
  t.meta["horizon"] = r.scenario.horizon;
  return t;
}

std::vector<CheckReport> check_all(const Trace& trace, Program program) {
  std::vector<CheckReport> out = check_trace_wellformed(trace);
  if (program_info(program).consensus) {
    for (auto& r : check_consensus(trace)) out.push_back(std::move(r));
  }
  for (auto& r : check_lemma_invariants(trace, program)) out.push_back(std::move(r));
  if (program_info(program).target) out.push_back(check_emulation(trace, program));
  if (program == Program::random_theta) {
    const bool clash = id_collision(trace);
    out.push_back({"distinct-ids", clash ? Verdict::fail : Verdict::pass,
                   nlohmann::json::array(), clash ? "collision" : ""});
  }
  return out;
}

void VerdictCounts::add(Verdict v) {
  switch (v) {
    case Verdict::pass: ++pass; break;
    case Verdict::fail: ++fail; break;
    case Verdict::vacuous: ++vacuous; break;
    case Verdict::truncated: ++truncated; break;
  }
}

namespace {

nlohmann::json counts_json(const std::map<std::string, VerdictCounts>& counts) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, c] : counts) {
    j[name] = {{"pass", c.pass}, {"fail", c.fail}, {"vacuous", c.vacuous}, {"truncated", c.truncated}};
  }
  return j;
}

bool wanted(const std::vector<std::string>& checks, const std::string& property) {
  return checks.empty() || std::find(checks.begin(), checks.end(), property) != checks.end();
}

}  // namespace

nlohmann::json to_json(const CampaignSummary& s) {
  nlohmann::json failures = nlohmann::json::array();
  for (const Failure& f : s.failures) {
    failures.push_back({{"seed", f.seed}, {"report", to_json(f.report)}, {"reproduce", f.reproduce}});
  }
  return {{"algorithm", to_string(s.program)}, {"runs", s.runs},
          {"failed_runs", s.failed_runs},      {"counts", counts_json(s.counts)},
          {"failures", failures},              {"seconds", s.seconds}};
}

CampaignSummary run_campaign(const ScenarioSpec& spec, std::uint64_t from, std::size_t count,
                             unsigned jobs, const std::string& source,
                             const std::vector<std::string>& checks) {
  if (count == 0) throw FormatError("field 'seeds.count': empty seed range");
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::vector<CheckReport>> results(count);
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;

  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        const Trace t = run_resolved(resolve(spec, from + i));
        results[i] = check_all(t, spec.program);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(count)));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < jobs; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);

  CampaignSummary summary;
  summary.program = spec.program;
  summary.runs = count;
  for (std::size_t i = 0; i < count; ++i) {
    bool failed = false;
    for (const CheckReport& r : results[i]) {
      if (!wanted(checks, r.property)) continue;
      summary.counts[r.property].add(r.verdict);
      if (r.failed()) {
        failed = true;
        summary.failures.push_back(
            {from + i, r, "anonfd run " + source + " --seed " + std::to_string(from + i)});
      }
    }
    if (failed) ++summary.failed_runs;
  }
  summary.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return summary;
}

bool ExploreSummary::clean() const {
  if (totals.partial) return false;
  return std::all_of(counts.begin(), counts.end(), [](const auto& kv) { return kv.second.fail == 0; });
}

nlohmann::json to_json(const ExploreSummary& s) {
  nlohmann::json violations = nlohmann::json::array();
  for (const auto& v : s.violations) violations.push_back(to_json(v.report));
  return {{"algorithm", to_string(s.program)},
          {"input_vectors", s.input_vectors},
          {"states", s.totals.states},
          {"transitions", s.totals.transitions},
          {"terminals", s.totals.terminals},
          {"round_capped", s.totals.round_capped},
          {"partial", s.totals.partial},
          {"stopped", s.totals.stopped},
          {"counts", counts_json(s.counts)},
          {"violations", violations},
          {"seconds", s.seconds}};
}

ExploreSummary explore_program(const ScenarioSpec& spec, std::size_t keep) {
  const auto start = std::chrono::steady_clock::now();
  const Program program = spec.program;
  const ProgramInfo info = program_info(program);

  ProgramOptions options = spec.options;
  std::optional<int> max_crash_round = spec.max_crash_round;
  if (!info.consensus) {
    if (!max_crash_round) max_crash_round = 3;
    if (!options.max_rounds) options.max_rounds = *max_crash_round + spec.cfg.f + 6;
  }
  // Alg3 keeps starting rounds until a Decide reaches it, so an unfair
  // schedule never runs out of rounds.
  std::optional<int> max_round = spec.max_round;
  if (program == Program::alg3 && !max_round) max_round = 0;
  const AutomatonFactory factory = make_factory(program, spec.cfg, options);

  std::vector<std::vector<int>> input_sets;
  if (info.consensus && (spec.all_inputs || !spec.inputs)) {
    input_sets = all_binary(spec.cfg.n);
  } else {
    input_sets.push_back(spec.inputs.value_or(std::vector<int>(static_cast<std::size_t>(spec.cfg.n), 0)));
  }

  ExploreSummary summary;
  summary.program = program;
  summary.input_vectors = input_sets.size();

  for (const auto& inputs : input_sets) {
    ExploreConfig config;
    config.cfg = spec.cfg;
    config.inputs = inputs;
    config.oracle = spec.oracle;
    config.mode = info.mode;
    config.max_crash_round = max_crash_round;
    config.max_round = max_round;
    config.max_states = spec.max_states;

    auto prefix_trace = [&](const StateView& s) {
      Trace t;
      t.cfg = spec.cfg;
      t.mode = info.mode;
      t.inputs = inputs;
      std::map<ProcessId, Time> crash;
      for (const Event& e : s.path) {
        if (e.kind == EventKind::crash) crash[e.process] = e.step;
      }
      t.pattern = FailurePattern(spec.cfg.n, crash);
      t.events = s.path;
      t.status = TraceStatus::truncated;
      t.end_step = s.path.empty() ? 0 : s.path.back().step;
      t.meta = {{"algorithm", to_string(program)}, {"prefix", true}};
      return t;
    };

    ExploreVisitor visitor;
    visitor.on_state = [&](const StateView& s) {
      std::vector<std::pair<std::string, std::optional<std::string>>> checks;
      switch (program) {
        case Program::alg2: checks.emplace_back("state-lock-exclusivity", state_lock_exclusivity(s)); break;
        case Program::alg3: checks.emplace_back("state-unique-decide", state_unique_decide(s)); break;
        case Program::alg5:
          checks.emplace_back("state-round-skew", state_round_skew(s, spec.cfg.f + 1));
          checks.emplace_back("state-no-false-suspicion", state_no_false_suspicion(s));
          break;
        default: break;
      }
      for (auto& [name, problem] : checks) {
        summary.counts[name].add(problem ? Verdict::fail : Verdict::pass);
        if (problem && summary.violations.size() < keep) {
          summary.violations.push_back({{name, Verdict::fail, nlohmann::json::array(), *problem},
                                        prefix_trace(s)});
        }
      }
      return summary.violations.size() < keep;
    };
    visitor.on_terminal = [&](const Trace& t) {
      Trace trace = t;
      trace.meta = {{"algorithm", to_string(program)}, {"explored", true}};
      for (const CheckReport& r : check_all(trace, program)) {
        summary.counts[r.property].add(r.verdict);
        if (r.failed() && summary.violations.size() < keep) summary.violations.push_back({r, trace});
      }
      return summary.violations.size() < keep;
    };

    ExploreResult r = explore(config, factory, visitor);
    summary.totals.states += r.states;
    summary.totals.transitions += r.transitions;
    summary.totals.terminals += r.terminals;
    summary.totals.round_capped += r.round_capped;
    summary.totals.partial = summary.totals.partial || r.partial;
    summary.totals.stopped = summary.totals.stopped || r.stopped;
    if (r.stopped) break;
  }
  summary.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return summary;
}

CampaignSpec parse_campaign(const nlohmann::json& j, const std::string& base_dir) {
  if (!j.is_object()) throw FormatError("campaign must be a JSON object");
  if (!j.contains("schema")) bad("schema", "is missing");
  if (j.at("schema") != kSchemaVersion) bad("schema", "unsupported version " + j.at("schema").dump());
  CampaignSpec c;
  if (j.contains("scenario")) {
    c.scenario = parse_scenario(j.at("scenario"));
  } else if (j.contains("scenario_file")) {
    std::filesystem::path p = get<std::string>(j.at("scenario_file"), "scenario_file");
    if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
    c.scenario = parse_scenario(read_json_file(p.string()));
  } else {
    bad("scenario", "is missing (or give 'scenario_file')");
  }
  const std::string mode = j.value("mode", std::string("sweep"));
  if (mode == "single") {
    c.mode = CampaignSpec::Mode::single;
  } else if (mode == "sweep") {
    c.mode = CampaignSpec::Mode::sweep;
  } else if (mode == "explore") {
    c.mode = CampaignSpec::Mode::explore;
  } else {
    bad("mode", "must be single, sweep or explore");
  }
  c.seed_from = c.scenario.seed;
  if (j.contains("seeds")) {
    const auto& s = j.at("seeds");
    if (s.contains("from")) c.seed_from = parse_u64(s.at("from"), "seeds.from");
    if (!s.contains("count")) bad("seeds.count", "is missing");
    const auto count = get<std::int64_t>(s.at("count"), "seeds.count");
    if (count <= 0) bad("seeds.count", "empty seed range");
    c.seed_count = static_cast<std::size_t>(count);
  }
  if (c.mode == CampaignSpec::Mode::single) c.seed_count = 1;
  if (c.mode == CampaignSpec::Mode::explore && c.scenario.cfg.n > 3) bad("n", "explore needs n <= 3");
  if (j.contains("checks")) c.checks = get<std::vector<std::string>>(j.at("checks"), "checks");
  return c;
}

}  // namespace anonfd
