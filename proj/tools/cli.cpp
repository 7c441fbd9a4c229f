#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "anonfd/io.hpp"
#include "anonfd/scenario.hpp"
#include "anonfd/verify.hpp"

namespace anonfd::cli {

namespace fs = std::filesystem;

namespace {

bool is_campaign(const nlohmann::json& j) {
  return j.is_object() && (j.contains("scenario") || j.contains("scenario_file"));
}

std::string parent_dir(const std::string& path) {
  fs::path parent = fs::path(path).parent_path();
  return parent.empty() ? "." : parent.string();
}

CampaignSpec load(const std::string& path) {
  nlohmann::json j = read_json_file(path);
  if (is_campaign(j)) return parse_campaign(j, parent_dir(path));
  CampaignSpec c;
  c.scenario = parse_scenario(j);
  c.mode = CampaignSpec::Mode::single;
  c.seed_from = c.scenario.seed;
  c.seed_count = 1;
  return c;
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("--out: cannot write " + path.string());
  f << text;
}

std::string verdict_tag(Verdict v) {
  switch (v) {
    case Verdict::pass: return "PASS";
    case Verdict::fail: return "FAIL";
    case Verdict::vacuous: return "VACUOUS";
    case Verdict::truncated: return "TRUNCATED";
  }
  return "?";
}

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<Time> horizon;
  std::optional<std::string> policy;
};

void apply(ScenarioSpec& spec, const Overrides& o) {
  if (o.horizon) {
    if (*o.horizon <= 0) throw FormatError("--horizon: must be positive");
    spec.horizon = *o.horizon;
  }
  if (o.policy) {
    try {
      spec.policy.kind = parse_scheduler_kind(*o.policy);
    } catch (const SimulationError& e) {
      throw FormatError(std::string("--policy: ") + e.what());
    }
  }
}

// Flags that change a run must appear in its reproduction command.
std::string repro_flags(const Overrides& o) {
  std::string s;
  if (o.horizon) s += " --horizon " + std::to_string(*o.horizon);
  if (o.policy) s += " --policy " + *o.policy;
  return s;
}

int cmd_run(const std::string& file, const Overrides& o, const std::string& out_dir,
            std::ostream& out) {
  CampaignSpec c = load(file);
  apply(c.scenario, o);
  const std::uint64_t seed = o.seed.value_or(c.seed_from);
  const Trace trace = run_resolved(resolve(c.scenario, seed));
  const auto reports = check_all(trace, c.scenario.program);

  const fs::path dir(out_dir);
  const std::string stem = "seed-" + std::to_string(seed);
  write_file(dir / (stem + ".trace.jsonl"), to_jsonl(trace));
  nlohmann::json rj = nlohmann::json::array();
  for (const auto& r : reports) rj.push_back(to_json(r));
  write_file(dir / (stem + ".report.json"), rj.dump(2) + "\n");

  const std::string repro = "anonfd run " + file + " --seed " + std::to_string(seed) + repro_flags(o);
  bool failed = false;
  out << to_string(c.scenario.program) << " seed " << seed << ": " << to_string(trace.status)
      << ", " << trace.events.size() << " events\n";
  for (const auto& r : reports) {
    out << verdict_tag(r.verdict) << " " << r.property;
    if (r.failed()) {
      failed = true;
      out << ": " << r.detail << " | reproduce: " << repro;
    }
    out << "\n";
  }
  out << "trace: " << (dir / (stem + ".trace.jsonl")).string() << "\n";
  return failed ? kPropertyFailure : kPass;
}

void print_counts(const std::map<std::string, VerdictCounts>& counts, std::ostream& out) {
  for (const auto& [name, c] : counts) {
    out << "  " << std::left << std::setw(26) << name << " pass " << c.pass << "  fail " << c.fail
        << "  vacuous " << c.vacuous << "  truncated " << c.truncated << "\n";
  }
}

int explore_and_report(const ScenarioSpec& spec, const std::string& file,
                       const std::string& out_dir, std::ostream& out) {
  const ExploreSummary s = explore_program(spec);
  out << "explore " << to_string(s.program) << " n=" << spec.cfg.n << " f=" << spec.cfg.f << ": "
      << s.input_vectors << " input vectors, " << s.totals.states << " states, "
      << s.totals.terminals << " maximal traces"
      << (s.totals.round_capped ? ", " + std::to_string(s.totals.round_capped) + " states past the round cap" : "")
      << (s.totals.partial ? " (PARTIAL: state budget exhausted)" : "") << "\n";
  print_counts(s.counts, out);
  const fs::path dir(out_dir);
  for (std::size_t k = 0; k < s.violations.size(); ++k) {
    const auto& v = s.violations[k];
    Trace t = v.trace;
    t.meta["schedule"] = k;
    const fs::path path = dir / ("violation-" + std::to_string(k) + ".jsonl");
    write_file(path, to_jsonl(t));
    out << "FAIL " << v.report.property << ": " << v.report.detail << " | reproduce: anonfd explore "
        << file << " (schedule " << k << "); replay: anonfd check " << path.string() << "\n";
  }
  write_file(dir / "explore.json", to_json(s).dump(2) + "\n");
  const bool failed = std::any_of(s.counts.begin(), s.counts.end(),
                                  [](const auto& kv) { return kv.second.fail > 0; });
  return failed ? kPropertyFailure : kPass;
}

int cmd_explore(const std::string& file, std::optional<std::size_t> max_states,
                const std::string& out_dir, std::ostream& out) {
  CampaignSpec c = load(file);
  if (c.scenario.cfg.n > 3) throw FormatError("n: explore is limited to n <= 3");
  if (max_states) c.scenario.max_states = *max_states;
  return explore_and_report(c.scenario, file, out_dir, out);
}

int cmd_campaign(const std::string& file, unsigned jobs, const Overrides& o,
                 const std::optional<std::size_t>& count, const std::string& out_path,
                 std::ostream& out) {
  CampaignSpec c = load(file);
  apply(c.scenario, o);
  if (o.seed) c.seed_from = *o.seed;
  if (count) {
    if (*count == 0) throw FormatError("--count: seed range is empty");
    c.seed_count = *count;
    if (c.mode == CampaignSpec::Mode::single) c.mode = CampaignSpec::Mode::sweep;
  }
  if (c.mode == CampaignSpec::Mode::explore) {
    return explore_and_report(c.scenario, file, out_path.empty() ? "." : parent_dir(out_path), out);
  }
  if (c.mode == CampaignSpec::Mode::single) c.seed_count = 1;

  const CampaignSummary s =
      run_campaign(c.scenario, c.seed_from, c.seed_count, jobs, file + repro_flags(o), c.checks);
  out << "campaign " << to_string(s.program) << " n=" << c.scenario.cfg.n << " f=" << c.scenario.cfg.f
      << ": seeds " << c.seed_from << ".." << (c.seed_from + c.seed_count - 1) << ", " << s.runs
      << " runs, " << s.failed_runs << " with failures, " << std::fixed << std::setprecision(1)
      << s.seconds << " s\n";
  out.unsetf(std::ios::fixed);
  print_counts(s.counts, out);

  nlohmann::json summary = to_json(s);
  if (c.scenario.program == Program::random_theta) {
    auto it = s.counts.find("emulated-Theta");
    const std::size_t ok = it == s.counts.end() ? 0 : it->second.pass;
    const double rate = s.runs ? static_cast<double>(ok) / static_cast<double>(s.runs) : 0.0;
    const bool bound = 3 * ok >= 2 * s.runs;
    out << "theta success rate: " << ok << "/" << s.runs << " = " << std::setprecision(4) << rate
        << " (bound 2/3: " << (bound ? "met" : "NOT met") << ")\n";
    summary["theta_success"] = {{"successes", ok}, {"runs", s.runs}, {"rate", rate}, {"bound_met", bound}};
  }
  for (const auto& f : s.failures) {
    out << "FAIL seed " << f.seed << " " << f.report.property << ": " << f.report.detail
        << " | reproduce: " << f.reproduce << "\n";
  }
  if (!out_path.empty()) write_file(out_path, summary.dump(2) + "\n");
  return s.failed_runs ? kPropertyFailure : kPass;
}

int cmd_check(const std::string& file, const std::optional<std::string>& algorithm,
              const std::string& out_path, std::ostream& out) {
  std::ifstream f(file, std::ios::binary);
  if (!f) throw FormatError("trace: cannot open " + file);
  std::stringstream buf;
  buf << f.rdbuf();
  const Trace trace = [&] {
    try {
      return trace_from_jsonl(buf.str());
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("trace: " + std::string(e.what()));
    } catch (const SimulationError& e) {
      throw FormatError("trace: " + std::string(e.what()));
    }
  }();
  std::string name;
  if (algorithm) {
    name = *algorithm;
  } else if (trace.meta.contains("algorithm") && trace.meta["algorithm"].is_string()) {
    name = trace.meta["algorithm"].get<std::string>();
  } else {
    throw FormatError("--algorithm: trace has no recorded algorithm");
  }
  Program program;
  try {
    program = parse_program(name);
  } catch (const std::invalid_argument& e) {
    throw FormatError("--algorithm: " + std::string(e.what()));
  }
  std::vector<CheckReport> reports;
  try {
    reports = check_all(trace, program);
  } catch (const std::invalid_argument& e) {
    throw FormatError("--algorithm: " + std::string(e.what()));
  }
  std::string repro = "anonfd check " + file;
  if (algorithm) repro += " --algorithm " + *algorithm;
  nlohmann::json rj = nlohmann::json::array();
  bool failed = false;
  for (const auto& r : reports) {
    rj.push_back(to_json(r));
    out << verdict_tag(r.verdict) << " " << r.property;
    if (r.failed()) {
      failed = true;
      out << ": " << r.detail << " | reproduce: " << repro;
    }
    out << "\n";
  }
  if (!out_path.empty()) write_file(out_path, rj.dump(2) + "\n");
  return failed ? kPropertyFailure : kPass;
}

int cmd_validate_history(const std::string& file, const std::optional<std::string>& kind_name,
                         const std::optional<std::string>& pattern_arg, std::ostream& out) {
  const HistoryFile h = history_from_json(read_json_file(file));
  std::optional<DetectorKind> kind = h.kind;
  if (kind_name) {
    try {
      kind = parse_detector_kind(*kind_name);
    } catch (const std::invalid_argument& e) {
      throw FormatError("--kind: " + std::string(e.what()));
    }
  }
  if (!kind) throw FormatError("kind: history names no detector and --kind is not given");
  if (range_of(*kind) != h.history.range()) {
    throw FormatError("--kind: " + to_string(*kind) + " outputs " + to_string(range_of(*kind)) +
                      ", the history holds " + to_string(h.history.range()));
  }

  FailurePattern pattern(h.history.n(), {});
  if (pattern_arg) {
    nlohmann::json pj;
    if (!pattern_arg->empty() && pattern_arg->front() == '{') {
      try {
        pj = nlohmann::json::parse(*pattern_arg);
      } catch (const nlohmann::json::exception& e) {
        throw FormatError("--pattern: " + std::string(e.what()));
      }
    } else {
      pj = read_json_file(*pattern_arg);
    }
    PatternFile pf = pattern_from_json(pj);
    if (pf.cfg.n != h.history.n()) throw FormatError("--pattern: n differs from the history");
    pattern = pf.pattern;
  }
  const CheckReport r = check_history(*kind, h.history, pattern);
  out << verdict_tag(r.verdict) << " " << r.property;
  if (r.failed()) {
    out << ": " << r.detail << " | reproduce: anonfd validate-history " << file << " --kind "
        << to_string(*kind);
    if (pattern_arg) out << " --pattern '" << *pattern_arg << "'";
  }
  out << "\n";
  return r.failed() ? kPropertyFailure : kPass;
}

}  // namespace

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Failure-detector and consensus simulation harness", "anonfd"};
  app.require_subcommand(1);

  std::string file;
  std::string out_dir = ".";
  std::string out_path;
  Overrides o;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  std::optional<std::size_t> count;
  std::optional<std::size_t> max_states;
  std::optional<std::string> algorithm;
  std::optional<std::string> kind;
  std::optional<std::string> pattern;

  auto* run = app.add_subcommand("run", "Run one seed of a scenario and check the trace");
  run->add_option("scenario", file, "Scenario or campaign JSON file")->required();
  run->add_option("--seed", o.seed, "Seed (default: the file's seed)");
  run->add_option("--horizon", o.horizon, "Step budget");
  run->add_option("--policy", o.policy, "fifo, random or crash-adjacent");
  run->add_option("--out", out_dir, "Directory for the trace and report");

  auto* campaign = app.add_subcommand("campaign", "Run a seed sweep and aggregate verdicts");
  campaign->add_option("campaign", file, "Campaign or scenario JSON file")->required();
  campaign->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  campaign->add_option("--seed", o.seed, "First seed");
  campaign->add_option("--count", count, "Number of seeds");
  campaign->add_option("--horizon", o.horizon, "Step budget");
  campaign->add_option("--policy", o.policy, "fifo, random or crash-adjacent");
  campaign->add_option("--out", out_path, "Summary JSON file");

  auto* explore = app.add_subcommand("explore", "Enumerate every schedule of a small instance");
  explore->add_option("scenario", file, "Scenario JSON file (n <= 3)")->required();
  explore->add_option("--max-states", max_states, "State budget");
  explore->add_option("--out", out_dir, "Directory for the summary and violating traces");

  auto* check = app.add_subcommand("check", "Re-run the checkers on a saved trace");
  check->add_option("trace", file, "Trace JSONL file")->required();
  check->add_option("--algorithm", algorithm, "Program that produced the trace");
  check->add_option("--out", out_path, "Report JSON file");

  auto* validate = app.add_subcommand("validate-history", "Validate a detector history");
  validate->add_option("history", file, "History JSON file")->required();
  validate->add_option("--kind", kind, "N, DiamondN, Theta, P, DiamondP or Omega");
  validate->add_option("--pattern", pattern, "Failure pattern JSON file or inline object");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kPass : kUsageError;
  }

  try {
    if (*run) return cmd_run(file, o, out_dir, out);
    if (*campaign) return cmd_campaign(file, jobs, o, count, out_path, out);
    if (*explore) return cmd_explore(file, max_states, out_dir, out);
    if (*check) return cmd_check(file, algorithm, out_path, out);
    if (*validate) return cmd_validate_history(file, kind, pattern, out);
  } catch (const FormatError& e) {
    err << "anonfd: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    err << "anonfd: internal error: " << e.what() << "\n";
    return kInternalError;
  }
  return kUsageError;
}

}  // namespace anonfd::cli
