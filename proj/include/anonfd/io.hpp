#pragma once

// JSON forms of patterns and histories.
//
//   pattern: {"n": 3, "f": 1, "crash": {"2": 5}}
//   history: {"range": "count", "horizon": 40, "out": [[...], ...],
//             "kind": "N", "convergence": 12, "emulated_from": {...}}
//
// Counts are numbers, booleans are booleans, process sets are arrays of
// indices and process ids are indices.

#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "anonfd/detectors.hpp"
#include "anonfd/model.hpp"

namespace anonfd {

/// Malformed input; the message names the offending field.
class FormatError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

nlohmann::json value_to_json(const DetectorValue& value);
DetectorValue value_from_json(const nlohmann::json& j, ValueRange range);
/// Infers the range from the JSON type (number -> count, array -> set).
DetectorValue value_from_json(const nlohmann::json& j);

nlohmann::json pattern_to_json(const SystemConfig& cfg, const FailurePattern& pattern);
struct PatternFile {
  SystemConfig cfg;
  FailurePattern pattern;
};
PatternFile pattern_from_json(const nlohmann::json& j);
std::map<ProcessId, Time> crash_map_from_json(const nlohmann::json& j, int n);

struct HistoryFile {
  DetectorHistory history;
  std::optional<DetectorKind> kind;
  nlohmann::json emulated_from;
};

nlohmann::json history_to_json(const DetectorHistory& history,
                               std::optional<DetectorKind> kind = std::nullopt,
                               const nlohmann::json& emulated_from = nullptr);
HistoryFile history_from_json(const nlohmann::json& j);

/// Reads and parses a JSON file; throws FormatError with the path on failure.
nlohmann::json read_json_file(const std::string& path);

}  // namespace anonfd
