#include "anonfd/io.hpp"

#include <fstream>
#include <sstream>

namespace anonfd {

namespace {

const nlohmann::json& field(const nlohmann::json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) {
    throw FormatError(std::string("missing field '") + name + "'");
  }
  return j.at(name);
}

int int_field(const nlohmann::json& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_number_integer()) throw FormatError(std::string("field '") + name + "' must be an integer");
  return v.get<int>();
}

}  // namespace

nlohmann::json value_to_json(const DetectorValue& value) {
  if (const int* i = std::get_if<int>(&value)) return *i;
  if (const bool* b = std::get_if<bool>(&value)) return *b;
  nlohmann::json arr = nlohmann::json::array();
  for (ProcessId p : std::get<ProcessSet>(value).members()) arr.push_back(p.index());
  return arr;
}

DetectorValue value_from_json(const nlohmann::json& j, ValueRange range) {
  switch (range) {
    case ValueRange::count:
    case ValueRange::process_id:
      if (!j.is_number_integer()) throw FormatError("expected an integer detector value");
      return j.get<int>();
    case ValueRange::boolean:
      if (!j.is_boolean()) throw FormatError("expected a boolean detector value");
      return j.get<bool>();
    case ValueRange::process_set: {
      if (!j.is_array()) throw FormatError("expected an array of process indices");
      ProcessSet s;
      for (const auto& x : j) {
        if (!x.is_number_integer() || x.get<int>() < 1 || x.get<int>() > 64) {
          throw FormatError("bad process index in set value");
        }
        s.insert(ProcessId(x.get<int>()));
      }
      return s;
    }
  }
  throw FormatError("unknown range");
}

DetectorValue value_from_json(const nlohmann::json& j) {
  if (j.is_boolean()) return value_from_json(j, ValueRange::boolean);
  if (j.is_array()) return value_from_json(j, ValueRange::process_set);
  return value_from_json(j, ValueRange::count);
}

nlohmann::json pattern_to_json(const SystemConfig& cfg, const FailurePattern& pattern) {
  nlohmann::json crash = nlohmann::json::object();
  for (const auto& [p, t] : pattern.crash_times()) crash[std::to_string(p.index())] = t;
  return {{"n", cfg.n}, {"f", cfg.f}, {"crash", crash}};
}

std::map<ProcessId, Time> crash_map_from_json(const nlohmann::json& j, int n) {
  if (!j.is_object()) throw FormatError("field 'crash' must be an object");
  std::map<ProcessId, Time> out;
  for (const auto& [key, value] : j.items()) {
    int idx = 0;
    try {
      std::size_t used = 0;
      idx = std::stoi(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw FormatError("field 'crash' has non-numeric key '" + key + "'");
    }
    if (idx < 1 || idx > n) throw FormatError("field 'crash' names process " + key + " outside 1..n");
    if (!value.is_number_integer() || value.get<Time>() < 0) {
      throw FormatError("field 'crash." + key + "' must be a non-negative integer");
    }
    out[ProcessId(idx)] = value.get<Time>();
  }
  return out;
}

PatternFile pattern_from_json(const nlohmann::json& j) {
  SystemConfig cfg{int_field(j, "n"), int_field(j, "f")};
  try {
    cfg.validate();
  } catch (const ModelError& e) {
    throw FormatError(std::string("fields 'n'/'f': ") + e.what());
  }
  std::map<ProcessId, Time> crash;
  if (j.contains("crash")) crash = crash_map_from_json(j.at("crash"), cfg.n);
  FailurePattern pattern(cfg.n, std::move(crash));
  try {
    pattern.validate(cfg);
  } catch (const ModelError& e) {
    throw FormatError(std::string("field 'crash': ") + e.what());
  }
  return {cfg, pattern};
}

nlohmann::json history_to_json(const DetectorHistory& history, std::optional<DetectorKind> kind,
                               const nlohmann::json& emulated_from) {
  nlohmann::json out = nlohmann::json::array();
  for (int i = 1; i <= history.n(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Time t = 0; t <= history.horizon(); ++t) row.push_back(value_to_json(history.at(ProcessId(i), t)));
    out.push_back(std::move(row));
  }
  nlohmann::json j = {{"range", to_string(history.range())},
                      {"horizon", history.horizon()},
                      {"out", std::move(out)}};
  if (kind) j["kind"] = to_string(*kind);
  if (history.convergence) j["convergence"] = *history.convergence;
  if (!emulated_from.is_null()) j["emulated_from"] = emulated_from;
  return j;
}

HistoryFile history_from_json(const nlohmann::json& j) {
  ValueRange range;
  std::optional<DetectorKind> kind;
  try {
    if (j.is_object() && j.contains("kind")) {
      kind = parse_detector_kind(field(j, "kind").get<std::string>());
    }
    range = j.is_object() && j.contains("range")
                ? parse_value_range(field(j, "range").get<std::string>())
                : (kind ? range_of(*kind) : throw FormatError("missing field 'range'"));
  } catch (const FormatError&) {
    throw;
  } catch (const std::exception& e) {
    throw FormatError(std::string("field 'range'/'kind': ") + e.what());
  }
  if (kind && range_of(*kind) != range) throw FormatError("field 'range' does not match 'kind'");
  const Time horizon = int_field(j, "horizon");
  if (horizon < 0) throw FormatError("field 'horizon' must be non-negative");
  const auto& rows = field(j, "out");
  if (!rows.is_array() || rows.empty() || rows.size() > 64) {
    throw FormatError("field 'out' must hold one row per process");
  }
  const int n = static_cast<int>(rows.size());
  DetectorValue fill = range == ValueRange::boolean      ? DetectorValue(false)
                       : range == ValueRange::process_set ? DetectorValue(ProcessSet{})
                       : range == ValueRange::process_id  ? DetectorValue(1)
                                                          : DetectorValue(0);
  DetectorHistory h(range, n, horizon, fill);
  for (int i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Time>(row.size()) != horizon + 1) {
      throw FormatError("field 'out[" + std::to_string(i) + "]' must have horizon+1 entries");
    }
    for (Time t = 0; t <= horizon; ++t) {
      try {
        h.set(ProcessId(i + 1), t, value_from_json(row[static_cast<std::size_t>(t)], range));
      } catch (const FormatError& e) {
        throw FormatError("field 'out[" + std::to_string(i) + "][" + std::to_string(t) +
                          "]': " + e.what());
      } catch (const ModelError& e) {
        throw FormatError("field 'out[" + std::to_string(i) + "][" + std::to_string(t) +
                          "]': " + e.what());
      }
    }
  }
  if (j.contains("convergence")) h.convergence = int_field(j, "convergence");
  HistoryFile file{std::move(h), kind, nullptr};
  if (j.contains("emulated_from")) file.emulated_from = j.at("emulated_from");
  return file;
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return nlohmann::json::parse(buffer.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("'" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace anonfd
