#include <sstream>

#include "anonfd/io.hpp"
#include "anonfd/simulator.hpp"

namespace anonfd {

namespace {

constexpr const char* kEventNames[] = {"send",   "deliver", "crash",  "oracle",    "decide",
                                       "halt",   "round",   "output", "random-id", "converge"};

}  // namespace

std::string to_string(EventKind kind) { return kEventNames[static_cast<int>(kind)]; }

EventKind parse_event_kind(const std::string& text) {
  for (int i = 0; i < static_cast<int>(std::size(kEventNames)); ++i) {
    if (text == kEventNames[i]) return static_cast<EventKind>(i);
  }
  throw FormatError("unknown event kind '" + text + "'");
}

std::string to_string(TraceStatus status) {
  switch (status) {
    case TraceStatus::complete: return "complete";
    case TraceStatus::quiescent: return "quiescent";
    case TraceStatus::truncated: return "truncated";
  }
  return "?";
}

TraceStatus parse_trace_status(const std::string& text) {
  if (text == "complete") return TraceStatus::complete;
  if (text == "quiescent") return TraceStatus::quiescent;
  if (text == "truncated") return TraceStatus::truncated;
  throw FormatError("unknown trace status '" + text + "'");
}

nlohmann::json to_json(const Event& e) {
  nlohmann::json j = {{"step", e.step}, {"ev", to_string(e.kind)}, {"p", e.process.index()}};
  switch (e.kind) {
    case EventKind::send: j["msg"] = to_json(e.message); break;
    case EventKind::deliver:
      j["msg"] = to_json(e.message);
      if (e.peer) j["from"] = e.peer->index();
      break;
    case EventKind::crash:
    case EventKind::halt: break;
    case EventKind::oracle:
    case EventKind::output: j["value"] = value_to_json(e.reading); break;
    case EventKind::decide:
      j["value"] = e.value;
      j["round"] = e.round;
      break;
    case EventKind::round:
      j["round"] = e.round;
      j["v"] = e.value;
      break;
    case EventKind::random_id: j["id"] = std::to_string(e.id); break;
    case EventKind::converge: j["leader"] = e.value; break;
  }
  return j;
}

Event event_from_json(const nlohmann::json& j) {
  try {
    Event e;
    e.step = j.at("step").get<Time>();
    e.kind = parse_event_kind(j.at("ev").get<std::string>());
    e.process = ProcessId(j.at("p").get<int>());
    switch (e.kind) {
      case EventKind::send: e.message = message_from_json(j.at("msg")); break;
      case EventKind::deliver:
        e.message = message_from_json(j.at("msg"));
        if (j.contains("from")) e.peer = ProcessId(j.at("from").get<int>());
        break;
      case EventKind::crash:
      case EventKind::halt: break;
      case EventKind::oracle:
      case EventKind::output: e.reading = value_from_json(j.at("value")); break;
      case EventKind::decide:
        e.value = j.at("value").get<int>();
        e.round = j.at("round").get<int>();
        break;
      case EventKind::round:
        e.round = j.at("round").get<int>();
        e.value = j.at("v").get<int>();
        break;
      case EventKind::random_id: e.id = std::stoull(j.at("id").get<std::string>()); break;
      case EventKind::converge: e.value = j.at("leader").get<int>(); break;
    }
    return e;
  } catch (const FormatError&) {
    throw;
  } catch (const std::exception& ex) {
    throw FormatError(std::string("malformed event: ") + ex.what());
  }
}

std::string to_jsonl(const Trace& trace) {
  std::string out;
  nlohmann::json header = {{"scenario", pattern_to_json(trace.cfg, trace.pattern)},
                           {"mode", to_string(trace.mode)},
                           {"inputs", trace.inputs},
                           {"meta", trace.meta}};
  out += header.dump();
  out += '\n';
  for (const Event& e : trace.events) {
    out += to_json(e).dump();
    out += '\n';
  }
  nlohmann::json end = {{"end", to_string(trace.status)},
                        {"step", trace.end_step},
                        {"pending", trace.pending},
                        {"final_states", trace.final_states}};
  out += end.dump();
  out += '\n';
  return out;
}

Trace trace_from_jsonl(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  Trace trace;
  bool have_header = false;
  bool have_end = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError("trace line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!have_header) {
      if (!j.contains("scenario")) throw FormatError("trace line 1: missing 'scenario' header");
      PatternFile pf = pattern_from_json(j.at("scenario"));
      trace.cfg = pf.cfg;
      trace.pattern = pf.pattern;
      trace.mode = parse_delivery_mode(j.value("mode", std::string("anonymous")));
      trace.inputs = j.at("inputs").get<std::vector<int>>();
      trace.meta = j.value("meta", nlohmann::json::object());
      have_header = true;
    } else if (j.contains("end")) {
      trace.status = parse_trace_status(j.at("end").get<std::string>());
      trace.end_step = j.at("step").get<Time>();
      trace.pending = j.value("pending", std::size_t{0});
      trace.final_states = j.value("final_states", std::vector<nlohmann::json>{});
      have_end = true;
    } else {
      try {
        trace.events.push_back(event_from_json(j));
      } catch (const FormatError& e) {
        throw FormatError("trace line " + std::to_string(lineno) + ": " + e.what());
      }
    }
  }
  if (!have_header) throw FormatError("empty trace");
  if (!have_end) throw FormatError("trace has no 'end' line");
  return trace;
}

std::vector<std::optional<int>> Trace::decisions() const {
  std::vector<std::optional<int>> out(static_cast<std::size_t>(cfg.n));
  for (const Event& e : events) {
    if (e.kind == EventKind::decide && !out[e.process.slot()]) out[e.process.slot()] = e.value;
  }
  return out;
}

}  // namespace anonfd
