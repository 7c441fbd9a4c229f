#include "anonfd/transforms.hpp"

#include <algorithm>
#include <random>

namespace anonfd {

namespace {

int alive_view(StepContext& ctx) {
  DetectorValue v = ctx.oracle();
  const int* crashed = std::get_if<int>(&v);
  if (!crashed) throw SimulationError("alive view needs a count-valued oracle");
  return ctx.config().n - *crashed;
}

void push_int(std::string& out, int v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void push_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

nlohmann::json set_json(ProcessSet s) {
  nlohmann::json out = nlohmann::json::array();
  for (ProcessId p : s.members()) out.push_back(p.index());
  return out;
}

bool reached_limit(const RoundLimit& limit, int completed_round) {
  return limit.max_rounds && completed_round >= *limit.max_rounds;
}

void require_identified(DeliveryMode mode, const char* what) {
  if (mode != DeliveryMode::identified) {
    throw TransformError(std::string(what) + " needs identified delivery");
  }
}

}  // namespace

// ---------------------------------------------------------------------------

void SenderInbox::add(int round, ProcessId sender, bool flag) {
  auto item = std::make_tuple(round, sender.index(), flag);
  items_.insert(std::upper_bound(items_.begin(), items_.end(), item), item);
}

void SenderInbox::discard_before(int round) {
  std::erase_if(items_, [round](const auto& item) { return std::get<0>(item) < round; });
}

ProcessSet SenderInbox::senders(int round) const {
  ProcessSet s;
  for (const auto& [r, p, flag] : items_) {
    if (r == round) s.insert(ProcessId(p));
  }
  return s;
}

ProcessSet SenderInbox::flagged(int round) const {
  ProcessSet s;
  for (const auto& [r, p, flag] : items_) {
    if (r == round && flag) s.insert(ProcessId(p));
  }
  return s;
}

void SenderInbox::encode(std::string& out) const {
  out.push_back(static_cast<char>(items_.size()));
  for (const auto& [r, p, flag] : items_) {
    push_int(out, r);
    out.push_back(static_cast<char>(p));
    out.push_back(flag ? '1' : '0');
  }
}

// ---------------------------------------------------------------------------
// Algorithm 4

Alg4::Alg4(const SystemConfig& cfg, RoundLimit limit) : cfg_(cfg), limit_(limit) {}

void Alg4::receive(const Message& m, std::optional<ProcessId> from) {
  if (!from) throw SimulationError("Alg4 received an unattributed message");
  if (m.type == MsgType::alive && m.round >= r_) inbox_.add(m.round, *from);
}

void Alg4::step(StepContext& ctx) {
  if (!started_) {
    started_ = true;
    ctx.output(suspect_);
  }
  while (!halted_) {
    if (!waiting_) {
      ++r_;
      ctx.enter_round(r_, kUnset);
      ctx.broadcast(Message::alive(r_));
      waiting_ = true;
    }
    ProcessSet al = inbox_.senders(r_);
    if (al.size() < alive_view(ctx)) return;
    suspect_ = cfg_.all() - al;
    ctx.output(suspect_);
    waiting_ = false;
    inbox_.discard_before(r_ + 1);
    if (reached_limit(limit_, r_)) {
      ctx.halt();
      halted_ = true;
    }
  }
}

void Alg4::encode(std::string& out) const {
  push_int(out, r_);
  out.push_back(waiting_ ? 'w' : '-');
  out.push_back(halted_ ? 'h' : '-');
  push_u64(out, suspect_.bits());
  inbox_.encode(out);
}

nlohmann::json Alg4::describe() const {
  return {{"algorithm", "alg4"}, {"r", r_}, {"suspect", set_json(suspect_)}, {"halted", halted_}};
}

// ---------------------------------------------------------------------------
// Algorithm 5

Alg5::Alg5(const SystemConfig& cfg, RoundLimit limit, Mutation mutation)
    : cfg_(cfg), limit_(limit), mutation_(mutation) {}

void Alg5::receive(const Message& m, std::optional<ProcessId> from) {
  if (!from) throw SimulationError("Alg5 received an unattributed message");
  if (m.type == MsgType::alive && m.round >= r_) inbox_.add(m.round, *from);
}

void Alg5::step(StepContext& ctx) {
  if (!started_) {
    started_ = true;
    ctx.output(suspect_);
  }
  while (!halted_) {
    if (!waiting_) {
      ctx.enter_round(r_, kUnset);
      ctx.broadcast(Message::alive(r_));
      waiting_ = true;
    }
    ProcessSet al = inbox_.senders(r_);
    const int needed = mutation_ == Mutation::alg5_wait_one ? 1 : alive_view(ctx);
    if (al.size() < needed) return;
    const int guard = mutation_ == Mutation::alg5_no_guard ? 0 : cfg_.f + 2;
    if (al != earlier_) {
      lastchange_ = r_;
    } else if (r_ >= lastchange_ + guard) {
      suspect_ = cfg_.all() - al;
      ctx.output(suspect_);
    }
    earlier_ = al;
    waiting_ = false;
    const int completed = r_;
    ++r_;
    inbox_.discard_before(r_);
    if (reached_limit(limit_, completed)) {
      ctx.halt();
      halted_ = true;
    }
  }
}

void Alg5::encode(std::string& out) const {
  push_int(out, r_);
  out.push_back(waiting_ ? 'w' : '-');
  out.push_back(halted_ ? 'h' : '-');
  push_u64(out, suspect_.bits());
  push_u64(out, earlier_.bits());
  push_int(out, lastchange_);
  inbox_.encode(out);
}

nlohmann::json Alg5::describe() const {
  return {{"algorithm", "alg5"},        {"r", r_},
          {"suspect", set_json(suspect_)}, {"earlieralive", set_json(earlier_)},
          {"lastchange", lastchange_},  {"halted", halted_}};
}

// ---------------------------------------------------------------------------
// Theta -> Omega

ThetaToOmega::ThetaToOmega(const SystemConfig& cfg, ProcessId self, RoundLimit limit)
    : cfg_(cfg), self_(self), limit_(limit), leader_(self) {}

void ThetaToOmega::receive(const Message& m, std::optional<ProcessId> from) {
  if (!from) throw SimulationError("Theta->Omega received an unattributed message");
  if (m.type != MsgType::trust) return;
  if (m.value != 0 && (m.round > leader_round_ ||
                       (m.round == leader_round_ && from->index() < leader_.index()))) {
    leader_ = *from;
    leader_round_ = m.round;
  }
  if (m.round >= r_) inbox_.add(m.round, *from, m.value != 0);
}

void ThetaToOmega::step(StepContext& ctx) {
  while (!halted_) {
    ctx.output(leader_.index());
    if (!waiting_) {
      ++r_;
      ctx.enter_round(r_, kUnset);
      DetectorValue reading = ctx.oracle();
      const bool* trusts = std::get_if<bool>(&reading);
      if (!trusts) throw SimulationError("Theta->Omega needs a boolean oracle");
      ctx.broadcast(Message::trust(r_, *trusts));
      waiting_ = true;
    }
    if (inbox_.senders(r_).size() < cfg_.n - cfg_.f) return;
    waiting_ = false;
    inbox_.discard_before(r_ + 1);
    if (reached_limit(limit_, r_)) {
      ctx.output(leader_.index());
      ctx.halt();
      halted_ = true;
    }
  }
}

void ThetaToOmega::encode(std::string& out) const {
  push_int(out, r_);
  out.push_back(waiting_ ? 'w' : '-');
  out.push_back(halted_ ? 'h' : '-');
  out.push_back(static_cast<char>(leader_.index()));
  push_int(out, leader_round_);
  inbox_.encode(out);
}

nlohmann::json ThetaToOmega::describe() const {
  return {{"algorithm", "theta-omega"}, {"r", r_}, {"leader", leader_.index()},
          {"leader_round", leader_round_}, {"halted", halted_}};
}

// ---------------------------------------------------------------------------
// Randomized N -> Theta

std::uint64_t draw_random_id(std::uint64_t seed, int bits) {
  if (bits < 1 || bits > 64) throw TransformError("id_bits must be in 1..64");
  std::mt19937_64 rng(seed);
  std::uint64_t id = rng();
  return bits == 64 ? id : (id & ((std::uint64_t{1} << bits) - 1));
}

RandomTheta::RandomTheta(const SystemConfig& cfg, std::uint64_t id, RoundLimit limit)
    : cfg_(cfg), id_(id), limit_(limit) {}

void RandomTheta::receive(const Message& m, std::optional<ProcessId>) {
  if (m.type == MsgType::heartbeat && m.round >= r_) inbox_.emplace(m.round, m.id);
}

void RandomTheta::step(StepContext& ctx) {
  if (!announced_) {
    announced_ = true;
    ctx.random_id(id_);
    ctx.output(trusted_);
  }
  while (!halted_) {
    if (!waiting_) {
      ++r_;
      ctx.enter_round(r_, kUnset);
      ctx.broadcast(Message::heartbeat(r_, id_));
      waiting_ = true;
    }
    auto first = inbox_.lower_bound({r_, 0});
    auto last = inbox_.lower_bound({r_ + 1, 0});
    if (static_cast<int>(std::distance(first, last)) < alive_view(ctx)) return;
    std::uint64_t best = 0;
    int own = 0;
    for (auto it = first; it != last; ++it) {
      best = std::max(best, it->second);
      if (it->second == id_) ++own;
    }
    if (own > 1) collision_ = true;
    trusted_ = first != last && best == id_;
    ctx.output(trusted_);
    waiting_ = false;
    inbox_.erase(inbox_.begin(), last);
    if (reached_limit(limit_, r_)) {
      ctx.halt();
      halted_ = true;
    }
  }
}

void RandomTheta::encode(std::string& out) const {
  push_u64(out, id_);
  push_int(out, r_);
  out.push_back(waiting_ ? 'w' : '-');
  out.push_back(halted_ ? 'h' : '-');
  out.push_back(trusted_ ? 't' : 'f');
  out.push_back(static_cast<char>(inbox_.size()));
  for (const auto& [r, id] : inbox_) {
    push_int(out, r);
    push_u64(out, id);
  }
}

nlohmann::json RandomTheta::describe() const {
  return {{"algorithm", "random-theta"}, {"r", r_},           {"id", std::to_string(id_)},
          {"trusted", trusted_},         {"collision", collision_}, {"halted", halted_}};
}

// ---------------------------------------------------------------------------

AutomatonFactory diamond_n_to_diamond_p(const SystemConfig& cfg, DeliveryMode mode,
                                        RoundLimit limit) {
  cfg.validate();
  require_identified(mode, "DiamondN->DiamondP");
  return [cfg, limit](const ProcessInit&) { return std::make_unique<Alg4>(cfg, limit); };
}

AutomatonFactory n_to_p(const SystemConfig& cfg, DeliveryMode mode, RoundLimit limit,
                        Mutation mutation) {
  cfg.validate();
  require_identified(mode, "N->P");
  if (mutation != Mutation::none && mutation != Mutation::alg5_wait_one &&
      mutation != Mutation::alg5_no_guard) {
    throw TransformError("mutation " + to_string(mutation) + " does not apply to alg5");
  }
  return [cfg, limit, mutation](const ProcessInit&) {
    return std::make_unique<Alg5>(cfg, limit, mutation);
  };
}

AutomatonFactory theta_to_omega(const SystemConfig& cfg, DeliveryMode mode, RoundLimit limit) {
  cfg.validate();
  require_identified(mode, "Theta->Omega");
  return [cfg, limit](const ProcessInit& init) {
    if (!init.identity) throw SimulationError("Theta->Omega needs its own identity");
    return std::make_unique<ThetaToOmega>(cfg, *init.identity, limit);
  };
}

AutomatonFactory randomized_n_to_theta(const SystemConfig& cfg, DeliveryMode mode,
                                       RoundLimit limit, int id_bits,
                                       std::vector<std::optional<std::uint64_t>> forced_ids) {
  cfg.validate();
  if (mode != DeliveryMode::anonymous) {
    throw TransformError("the randomized N->Theta reduction runs in anonymous mode");
  }
  draw_random_id(0, id_bits);
  return [cfg, limit, id_bits, forced_ids](const ProcessInit& init) {
    std::uint64_t id = draw_random_id(init.seed, id_bits);
    if (init.slot.slot() < forced_ids.size() && forced_ids[init.slot.slot()]) {
      id = *forced_ids[init.slot.slot()];
    }
    return std::make_unique<RandomTheta>(cfg, id, limit);
  };
}

// ---------------------------------------------------------------------------

DetectorHistory suspects_to_count(const DetectorHistory& suspects) {
  if (suspects.range() != ValueRange::process_set) {
    throw TransformError("suspects_to_count needs a set-valued history");
  }
  DetectorHistory out(ValueRange::count, suspects.n(), suspects.horizon(), 0);
  for (int i = 1; i <= suspects.n(); ++i) {
    for (Time t = 0; t <= suspects.horizon(); ++t) {
      out.set(ProcessId(i), t, std::get<ProcessSet>(suspects.at(ProcessId(i), t)).size());
    }
  }
  out.convergence = suspects.convergence;
  return out;
}

DetectorHistory omega_to_theta(const DetectorHistory& omega) {
  if (omega.range() != ValueRange::process_id) {
    throw TransformError("omega_to_theta needs a process-valued history");
  }
  DetectorHistory out(ValueRange::boolean, omega.n(), omega.horizon(), false);
  for (int i = 1; i <= omega.n(); ++i) {
    for (Time t = 0; t <= omega.horizon(); ++t) {
      out.set(ProcessId(i), t, std::get<int>(omega.at(ProcessId(i), t)) == i);
    }
  }
  out.convergence = omega.convergence;
  return out;
}

DetectorHistory n_to_diamond_n(const DetectorHistory& n) {
  if (n.range() != ValueRange::count) throw TransformError("n_to_diamond_n needs a count history");
  return n;
}

DetectorHistory assemble_output_history(const Trace& trace, ValueRange range,
                                        const DetectorValue& initial) {
  DetectorHistory out(range, trace.cfg.n, trace.end_step, initial);
  for (const Event& e : trace.events) {
    if (e.kind == EventKind::output) out.set_from(e.process, e.step, e.reading);
  }
  return out;
}

std::vector<std::uint64_t> drawn_ids(const Trace& trace) {
  std::vector<std::uint64_t> ids(static_cast<std::size_t>(trace.cfg.n), 0);
  for (const Event& e : trace.events) {
    if (e.kind == EventKind::random_id) ids[e.process.slot()] = e.id;
  }
  return ids;
}

bool id_collision(const Trace& trace) {
  auto ids = drawn_ids(trace);
  std::sort(ids.begin(), ids.end());
  return std::adjacent_find(ids.begin(), ids.end()) != ids.end();
}

nlohmann::json emulated_from(DetectorKind source, const std::string& transformation,
                             std::uint64_t seed) {
  return {{"source", to_string(source)},
          {"transformation", transformation},
          {"seed", std::to_string(seed)}};
}

}  // namespace anonfd
