#pragma once

#include <compare>
#include <cstdint>
#include <string>

#include <json.hpp>

namespace anonfd {

/// Binary consensus values; kUnset encodes the "?" of locks and votes.
inline constexpr int kUnset = -1;

enum class MsgType : std::uint8_t {
  propose,    // ["Propose", r, v]
  lock,       // ["Lock", r, lock, v]
  leader,     // ["Leader", r, v]
  report,     // ["Report", r, v]
  vote,       // ["Vote", r, aux]
  decide,     // ["Decide", v]
  alive,      // ["ALIVE", r]
  heartbeat,  // ["HB", r, id]
  trust,      // ["Trust", r, b]
};

/// Payload of one broadcast. Which fields are meaningful depends on `type`.
struct Message {
  MsgType type = MsgType::propose;
  int round = 0;
  int value = 0;
  int extra = 0;
  std::uint64_t id = 0;

  static Message propose(int r, int v) { return {MsgType::propose, r, v, 0, 0}; }
  static Message lock(int r, int lock, int v) { return {MsgType::lock, r, lock, v, 0}; }
  static Message leader(int r, int v) { return {MsgType::leader, r, v, 0, 0}; }
  static Message report(int r, int v) { return {MsgType::report, r, v, 0, 0}; }
  static Message vote(int r, int aux) { return {MsgType::vote, r, aux, 0, 0}; }
  static Message decide(int v) { return {MsgType::decide, 0, v, 0, 0}; }
  static Message alive(int r) { return {MsgType::alive, r, 0, 0, 0}; }
  static Message heartbeat(int r, std::uint64_t id) { return {MsgType::heartbeat, r, 0, 0, id}; }
  static Message trust(int r, bool b) { return {MsgType::trust, r, b ? 1 : 0, 0, 0}; }

  auto operator<=>(const Message&) const = default;
};

/// Wire encoding, e.g. ["Lock", 3, "?", 1].
nlohmann::json to_json(const Message& m);
Message message_from_json(const nlohmann::json& j);
std::string to_string(const Message& m);

/// Compact fixed-width bytes used for state hashing.
void encode(const Message& m, std::string& out);

}  // namespace anonfd
