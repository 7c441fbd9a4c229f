#include "anonfd/consensus.hpp"

#include <algorithm>

namespace anonfd {

namespace {

int alive_view(StepContext& ctx) {
  DetectorValue v = ctx.oracle();
  const int* crashed = std::get_if<int>(&v);
  if (!crashed) throw SimulationError("alive view needs a count-valued oracle");
  return ctx.config().n - *crashed;
}

bool trusts_self(StepContext& ctx) {
  DetectorValue v = ctx.oracle();
  const bool* b = std::get_if<bool>(&v);
  if (!b) throw SimulationError("Theta wait needs a boolean oracle");
  return *b;
}

void check_binary(int input) {
  if (input != 0 && input != 1) throw ConsensusError("inputs must be 0 or 1");
}

char tag(int v) { return static_cast<char>(v + 2); }

nlohmann::json value_json(int v) { return v == kUnset ? nlohmann::json("?") : nlohmann::json(v); }

}  // namespace

// ---------------------------------------------------------------------------

void Inbox::add(const Message& m) {
  items_.insert(std::upper_bound(items_.begin(), items_.end(), m), m);
}

void Inbox::discard_before(int round) {
  std::erase_if(items_, [round](const Message& m) { return m.round < round; });
}

std::vector<Message> Inbox::of(MsgType type, int round) const {
  std::vector<Message> out;
  for (const Message& m : items_) {
    if (m.type == type && m.round == round) out.push_back(m);
  }
  return out;
}

std::size_t Inbox::count(MsgType type, int round) const {
  return static_cast<std::size_t>(std::count_if(items_.begin(), items_.end(), [&](const Message& m) {
    return m.type == type && m.round == round;
  }));
}

void Inbox::encode(std::string& out) const {
  out.push_back(static_cast<char>(items_.size()));
  for (const Message& m : items_) anonfd::encode(m, out);
}

// ---------------------------------------------------------------------------
// Algorithm 1

Alg1::Alg1(const SystemConfig& cfg, int input, Mutation mutation)
    : cfg_(cfg), mutation_(mutation), v_(input) {
  check_binary(input);
}

void Alg1::receive(const Message& m, std::optional<ProcessId>) {
  if (m.type == MsgType::propose && m.round >= r_) inbox_.add(m);
}

void Alg1::step(StepContext& ctx) {
  while (!halted_) {
    if (!waiting_) {
      if (r_ > cfg_.f + 1) {
        ctx.decide(v_, cfg_.f + 1);
        ctx.halt();
        halted_ = true;
        return;
      }
      ctx.enter_round(r_, v_);
      ctx.broadcast(Message::propose(r_, v_));
      waiting_ = true;
    }
    // Counts round-r proposals of either value.
    auto got = inbox_.of(MsgType::propose, r_);
    if (static_cast<int>(got.size()) < alive_view(ctx)) return;
    int next = v_;
    for (const Message& m : got) {
      next = mutation_ == Mutation::alg1_min ? std::min(next, m.value) : std::max(next, m.value);
    }
    v_ = next;
    estimates_.push_back(v_);
    ++r_;
    inbox_.discard_before(r_);
    waiting_ = false;
  }
}

void Alg1::encode(std::string& out) const {
  out.push_back(tag(v_));
  out.push_back(static_cast<char>(r_));
  out.push_back(waiting_ ? 'w' : halted_ ? 'h' : 's');
  for (int e : estimates_) out.push_back(tag(e));
  out.push_back(';');
  inbox_.encode(out);
}

nlohmann::json Alg1::describe() const {
  return {{"algorithm", "alg1"}, {"v", v_},       {"r", r_},
          {"halted", halted_},   {"estimates", estimates_}};
}

// ---------------------------------------------------------------------------
// Algorithm 2

Alg2::Alg2(const SystemConfig& cfg, int input, Mutation mutation)
    : cfg_(cfg), mutation_(mutation), v_(input) {
  check_binary(input);
}

void Alg2::receive(const Message& m, std::optional<ProcessId>) {
  if ((m.type == MsgType::propose || m.type == MsgType::lock) && m.round >= r_) inbox_.add(m);
}

void Alg2::step(StepContext& ctx) {
  while (!halted_) {
    switch (phase_) {
      case Phase::start:
        ctx.enter_round(r_, v_);
        ctx.broadcast(Message::propose(r_, v_));
        phase_ = Phase::propose_wait;
        break;
      case Phase::propose_wait: {
        auto got = inbox_.of(MsgType::propose, r_);
        if (static_cast<int>(got.size()) < alive_view(ctx)) return;
        int lo = 1;
        int hi = 0;
        for (const Message& m : got) {
          lo = std::min(lo, m.value);
          hi = std::max(hi, m.value);
        }
        // With a zero alive view nothing may have arrived; keep the estimate.
        if (got.empty()) lo = hi = v_;
        v_ = lo;
        lock_ = (lo == hi || mutation_ == Mutation::alg2_lock_always) ? v_ : kUnset;
        ctx.broadcast(Message::lock(r_, lock_, v_));
        if (decided_round_) {
          ctx.halt();
          halted_ = true;
          return;
        }
        phase_ = Phase::lock_wait;
        break;
      }
      case Phase::lock_wait: {
        auto got = inbox_.of(MsgType::lock, r_);
        if (static_cast<int>(got.size()) < alive_view(ctx)) return;
        std::optional<int> min_tag;
        for (const Message& m : got) {
          if (m.value != kUnset) min_tag = std::min(min_tag.value_or(m.value), m.value);
        }
        if (min_tag) {
          v_ = *min_tag;
          bool all_equal = std::all_of(got.begin(), got.end(),
                                       [&](const Message& m) { return m.value == v_; });
          if (mutation_ == Mutation::alg2_decide_any) all_equal = true;
          if (all_equal && !decided_round_) {
            ctx.decide(v_, r_);
            decided_round_ = r_;
          }
        } else if (!got.empty()) {
          int lo = 1;
          for (const Message& m : got) lo = std::min(lo, m.extra);
          v_ = lo;
        }
        ++r_;
        inbox_.discard_before(r_);
        phase_ = Phase::start;
        break;
      }
    }
  }
}

void Alg2::encode(std::string& out) const {
  out.push_back(tag(v_));
  out.push_back(tag(lock_));
  out.push_back(static_cast<char>(r_));
  out.push_back(static_cast<char>(phase_));
  out.push_back(halted_ ? 'h' : '-');
  out.push_back(static_cast<char>(decided_round_ ? *decided_round_ + 1 : 0));
  inbox_.encode(out);
}

nlohmann::json Alg2::describe() const {
  nlohmann::json j = {{"algorithm", "alg2"}, {"v", v_}, {"lock", value_json(lock_)},
                      {"r", r_},             {"halted", halted_}};
  j["decided_round"] = decided_round_ ? nlohmann::json(*decided_round_) : nlohmann::json(nullptr);
  return j;
}

// ---------------------------------------------------------------------------
// Algorithm 3

Alg3::Alg3(const SystemConfig& cfg, int input, Mutation mutation)
    : cfg_(cfg), mutation_(mutation), v_(input) {
  check_binary(input);
}

void Alg3::receive(const Message& m, std::optional<ProcessId>) {
  if (m.type == MsgType::decide) {
    if (!decide_received_) decide_received_ = m.value;
    return;
  }
  if (m.round >= r_) inbox_.add(m);
}

void Alg3::step(StepContext& ctx) {
  const int quorum = cfg_.n - cfg_.f;
  while (!halted_) {
    if (decide_received_) {
      ctx.broadcast(Message::decide(*decide_received_));
      ctx.decide(*decide_received_, r_);
      ctx.halt();
      halted_ = true;
      return;
    }
    switch (phase_) {
      case Phase::start:
        ctx.enter_round(r_, v_);
        phase_ = Phase::leader_wait;
        break;
      case Phase::leader_wait: {
        auto leaders = inbox_.of(MsgType::leader, r_);
        if (!leaders.empty()) {
          v_ = leaders.front().value;
        } else if (trusts_self(ctx)) {
          ctx.broadcast(Message::leader(r_, v_));
        } else {
          return;
        }
        ctx.broadcast(Message::report(r_, v_));
        phase_ = Phase::report_wait;
        break;
      }
      case Phase::report_wait: {
        auto reports = inbox_.of(MsgType::report, r_);
        if (static_cast<int>(reports.size()) < quorum) return;
        int ones = 0;
        for (const Message& m : reports) ones += m.value;
        const int zeros = static_cast<int>(reports.size()) - ones;
        aux_ = 2 * ones > cfg_.n ? 1 : 2 * zeros > cfg_.n ? 0 : kUnset;
        if (mutation_ == Mutation::alg3_no_majority) aux_ = v_;
        ctx.broadcast(Message::vote(r_, aux_));
        phase_ = Phase::vote_wait;
        break;
      }
      case Phase::vote_wait: {
        auto votes = inbox_.of(MsgType::vote, r_);
        if (static_cast<int>(votes.size()) < quorum) return;
        int definite = 0;
        for (const Message& m : votes) {
          if (m.value != kUnset) {
            v_ = m.value;
            ++definite;
          }
        }
        if (definite >= quorum) ctx.broadcast(Message::decide(v_));
        ++r_;
        inbox_.discard_before(r_);
        phase_ = Phase::start;
        break;
      }
    }
  }
}

void Alg3::encode(std::string& out) const {
  out.push_back(tag(v_));
  out.push_back(tag(aux_));
  out.push_back(static_cast<char>(r_));
  out.push_back(static_cast<char>(phase_));
  out.push_back(halted_ ? 'h' : '-');
  out.push_back(decide_received_ ? tag(*decide_received_) : '_');
  inbox_.encode(out);
}

nlohmann::json Alg3::describe() const {
  return {{"algorithm", "alg3"}, {"v", v_},           {"aux", value_json(aux_)},
          {"r", r_},             {"halted", halted_}};
}

// ---------------------------------------------------------------------------

std::string to_string(ConsensusAlgorithm a) {
  switch (a) {
    case ConsensusAlgorithm::alg1: return "alg1";
    case ConsensusAlgorithm::alg2: return "alg2";
    case ConsensusAlgorithm::alg3: return "alg3";
  }
  return "?";
}

ConsensusAlgorithm parse_consensus_algorithm(const std::string& text) {
  if (text == "alg1") return ConsensusAlgorithm::alg1;
  if (text == "alg2") return ConsensusAlgorithm::alg2;
  if (text == "alg3") return ConsensusAlgorithm::alg3;
  throw ConsensusError("unknown consensus algorithm '" + text + "'");
}

DetectorKind required_oracle(ConsensusAlgorithm a) {
  switch (a) {
    case ConsensusAlgorithm::alg1: return DetectorKind::n;
    case ConsensusAlgorithm::alg2: return DetectorKind::diamond_n;
    case ConsensusAlgorithm::alg3: return DetectorKind::theta;
  }
  return DetectorKind::n;
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConsensusError(what);
}

}  // namespace

AutomatonFactory alg1_automaton(const SystemConfig& cfg, Mutation mutation) {
  cfg.validate();
  require(cfg.n > cfg.f, "alg1 needs n > f");
  require(mutation == Mutation::none || mutation == Mutation::alg1_min,
          "mutation " + to_string(mutation) + " does not apply to alg1");
  return [cfg, mutation](const ProcessInit& init) {
    return std::make_unique<Alg1>(cfg, init.input, mutation);
  };
}

AutomatonFactory alg2_automaton(const SystemConfig& cfg, Mutation mutation) {
  cfg.validate();
  require(cfg.n > 2 * cfg.f, "alg2 needs n > 2f");
  require(mutation == Mutation::none || mutation == Mutation::alg2_lock_always ||
              mutation == Mutation::alg2_decide_any,
          "mutation " + to_string(mutation) + " does not apply to alg2");
  return [cfg, mutation](const ProcessInit& init) {
    return std::make_unique<Alg2>(cfg, init.input, mutation);
  };
}

AutomatonFactory alg3_automaton(const SystemConfig& cfg, Mutation mutation) {
  cfg.validate();
  require(cfg.n > 2 * cfg.f, "alg3 needs n > 2f");
  require(mutation == Mutation::none || mutation == Mutation::alg3_no_majority,
          "mutation " + to_string(mutation) + " does not apply to alg3");
  return [cfg, mutation](const ProcessInit& init) {
    return std::make_unique<Alg3>(cfg, init.input, mutation);
  };
}

AutomatonFactory consensus_automaton(ConsensusAlgorithm a, const SystemConfig& cfg,
                                     Mutation mutation) {
  switch (a) {
    case ConsensusAlgorithm::alg1: return alg1_automaton(cfg, mutation);
    case ConsensusAlgorithm::alg2: return alg2_automaton(cfg, mutation);
    case ConsensusAlgorithm::alg3: return alg3_automaton(cfg, mutation);
  }
  throw ConsensusError("unknown algorithm");
}

}  // namespace anonfd
