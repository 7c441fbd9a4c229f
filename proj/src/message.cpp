#include "anonfd/message.hpp"

#include <stdexcept>

namespace anonfd {

namespace {

nlohmann::json value_json(int v) {
  if (v == kUnset) return "?";
  return v;
}

int value_from(const nlohmann::json& j) {
  if (j.is_string() && j.get<std::string>() == "?") return kUnset;
  return j.get<int>();
}

}  // namespace

nlohmann::json to_json(const Message& m) {
  using nlohmann::json;
  switch (m.type) {
    case MsgType::propose: return json::array({"Propose", m.round, value_json(m.value)});
    case MsgType::lock:
      return json::array({"Lock", m.round, value_json(m.value), value_json(m.extra)});
    case MsgType::leader: return json::array({"Leader", m.round, value_json(m.value)});
    case MsgType::report: return json::array({"Report", m.round, value_json(m.value)});
    case MsgType::vote: return json::array({"Vote", m.round, value_json(m.value)});
    case MsgType::decide: return json::array({"Decide", value_json(m.value)});
    case MsgType::alive: return json::array({"ALIVE", m.round});
    // 64-bit ids are written as strings: JSON readers commonly lose precision
    // above 2^53.
    case MsgType::heartbeat: return json::array({"HB", m.round, std::to_string(m.id)});
    case MsgType::trust: return json::array({"Trust", m.round, m.value != 0});
  }
  throw std::logic_error("unknown message type");
}

Message message_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_string()) {
    throw std::invalid_argument("message must be a JSON array starting with its type");
  }
  const std::string tag = j[0].get<std::string>();
  if (tag == "Propose") return Message::propose(j.at(1).get<int>(), value_from(j.at(2)));
  if (tag == "Lock") {
    return Message::lock(j.at(1).get<int>(), value_from(j.at(2)), value_from(j.at(3)));
  }
  if (tag == "Leader") return Message::leader(j.at(1).get<int>(), value_from(j.at(2)));
  if (tag == "Report") return Message::report(j.at(1).get<int>(), value_from(j.at(2)));
  if (tag == "Vote") return Message::vote(j.at(1).get<int>(), value_from(j.at(2)));
  if (tag == "Decide") return Message::decide(value_from(j.at(1)));
  if (tag == "ALIVE") return Message::alive(j.at(1).get<int>());
  if (tag == "HB") {
    return Message::heartbeat(j.at(1).get<int>(), std::stoull(j.at(2).get<std::string>()));
  }
  if (tag == "Trust") return Message::trust(j.at(1).get<int>(), j.at(2).get<bool>());
  throw std::invalid_argument("unknown message type '" + tag + "'");
}

std::string to_string(const Message& m) { return to_json(m).dump(); }

void encode(const Message& m, std::string& out) {
  out.push_back(static_cast<char>(m.type));
  auto put = [&out](std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  put(static_cast<std::uint32_t>(m.round), 4);
  put(static_cast<std::uint8_t>(m.value), 1);
  put(static_cast<std::uint8_t>(m.extra), 1);
  put(m.id, 8);
}

}  // namespace anonfd
