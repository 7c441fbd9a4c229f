#include "world.hpp"

#include <algorithm>

namespace anonfd::detail {

DetectorValue ExploreOracle::read(ProcessId p, ProcessSet crashed, ProcessId self) const {
  (void)self;
  switch (kind) {
    case DetectorKind::n: return crashed.size();
    case DetectorKind::diamond_n: return converged ? crashed.size() : 0;
    case DetectorKind::theta: return converged && leader == p;
    case DetectorKind::p: return crashed;
    case DetectorKind::diamond_p: return converged ? crashed : ProcessSet{};
    case DetectorKind::omega: return converged ? leader->index() : p.index();
  }
  return 0;
}

class Context final : public StepContext {
 public:
  Context(World& world, ProcessId self) : world_(world), self_(self) {}

  const SystemConfig& config() const override { return world_.cfg_; }

  DetectorValue oracle() override {
    DetectorValue v = world_.read_oracle(self_);
    auto& last = world_.last_read_[self_.slot()];
    if (!last || *last != v) {
      Event e;
      e.kind = EventKind::oracle;
      e.process = self_;
      e.reading = v;
      world_.record(e);
      last = v;
    }
    return v;
  }

  void broadcast(const Message& m) override {
    Event e;
    e.kind = EventKind::send;
    e.process = self_;
    e.message = m;
    world_.record(e);
    for (int i = 1; i <= world_.cfg_.n; ++i) {
      ProcessId q(i);
      if (world_.crashed(q) || (q != self_ && world_.halted(q))) continue;
      world_.pool_.push_back({m, self_, q, world_.now_, world_.next_seq_++});
    }
    if (world_.track_sent_) {
      auto it = std::lower_bound(world_.sent_.begin(), world_.sent_.end(), m);
      if (it == world_.sent_.end() || *it != m) world_.sent_.insert(it, m);
    }
  }

  void decide(int value, int round) override {
    Event e;
    e.kind = EventKind::decide;
    e.process = self_;
    e.value = value;
    e.round = round;
    world_.record(e);
  }

  void halt() override {
    Event e;
    e.kind = EventKind::halt;
    e.process = self_;
    world_.record(e);
  }

  void enter_round(int round, int value) override {
    Event e;
    e.kind = EventKind::round;
    e.process = self_;
    e.round = round;
    e.value = value;
    world_.record(e);
  }

  void output(const DetectorValue& value) override {
    auto& current = world_.output_[self_.slot()];
    if (current && *current == value) return;
    current = value;
    Event e;
    e.kind = EventKind::output;
    e.process = self_;
    e.reading = value;
    world_.record(e);
  }

  void random_id(std::uint64_t id) override {
    Event e;
    e.kind = EventKind::random_id;
    e.process = self_;
    e.id = id;
    world_.record(e);
  }

 private:
  World& world_;
  ProcessId self_;
};

World::World(const SystemConfig& cfg, DeliveryMode mode, std::vector<int> inputs,
             const AutomatonFactory& factory, std::uint64_t seed, std::vector<Event>* log)
    : cfg_(cfg),
      mode_(mode),
      inputs_(std::move(inputs)),
      crashed_(static_cast<std::size_t>(cfg.n), false),
      last_read_(static_cast<std::size_t>(cfg.n)),
      output_(static_cast<std::size_t>(cfg.n)),
      log_(log) {
  for (int i = 1; i <= cfg.n; ++i) {
    ProcessInit init;
    init.input = inputs_.at(static_cast<std::size_t>(i - 1));
    init.slot = ProcessId(i);
    if (mode == DeliveryMode::identified) init.identity = ProcessId(i);
    init.seed = derive_seed(seed, 1000 + static_cast<std::uint64_t>(i));
    procs_.push_back(factory(init));
  }
}

World::World(const World& other)
    : cfg_(other.cfg_),
      mode_(other.mode_),
      inputs_(other.inputs_),
      crashed_(other.crashed_),
      last_read_(other.last_read_),
      output_(other.output_),
      pool_(other.pool_),
      sent_(other.sent_),
      track_sent_(other.track_sent_),
      now_(other.now_),
      next_seq_(other.next_seq_),
      log_(other.log_),
      runtime_(other.runtime_),
      explore_oracle_(other.explore_oracle_),
      relabel_(other.relabel_) {
  procs_.reserve(other.procs_.size());
  for (const auto& p : other.procs_) procs_.push_back(p->clone());
}

ProcessSet World::crashed_set() const {
  ProcessSet s;
  for (int i = 1; i <= cfg_.n; ++i) {
    if (crashed_[static_cast<std::size_t>(i - 1)]) s.insert(ProcessId(i));
  }
  return s;
}

bool World::all_halted() const {
  for (int i = 1; i <= cfg_.n; ++i) {
    if (live(ProcessId(i))) return false;
  }
  return true;
}

DetectorValue World::read_oracle(ProcessId p) const {
  if (runtime_) return runtime_->query(p, now_);
  return explore_oracle_.read(p, crashed_set(), p);
}

void World::record(Event e) {
  e.step = now_;
  log_->push_back(std::move(e));
}

void World::start() {
  for (int i = 1; i <= cfg_.n; ++i) {
    ProcessId p(i);
    if (!crashed(p)) step_process(p);
  }
}

void World::step_process(ProcessId p) {
  if (crashed(p) || halted(p)) return;
  Context ctx(*this, p);
  procs_[p.slot()]->step(ctx);
  if (halted(p)) drop_pending_to(p);
}

void World::drop_pending_to(ProcessId p) {
  std::erase_if(pool_, [p](const InFlight& m) { return m.receiver == p; });
}

void World::crash(ProcessId p) {
  if (crashed(p)) throw SimulationError("double crash of " + to_string(p));
  crashed_[p.slot()] = true;
  Event e;
  e.kind = EventKind::crash;
  e.process = p;
  record(e);
  drop_pending_to(p);
}

void World::deliver(std::size_t index) {
  InFlight m = pool_.at(index);
  pool_.erase(pool_.begin() + static_cast<std::ptrdiff_t>(index));
  Event e;
  e.kind = EventKind::deliver;
  e.process = m.receiver;
  e.peer = relabel_ ? (*relabel_)(m.sender) : m.sender;
  e.message = m.msg;
  record(e);
  std::optional<ProcessId> from;
  if (mode_ == DeliveryMode::identified) from = m.sender;
  procs_[m.receiver.slot()]->receive(m.msg, from);
  step_process(m.receiver);
}

void World::poll_changed() {
  for (int i = 1; i <= cfg_.n; ++i) {
    ProcessId p(i);
    if (!live(p)) continue;
    const auto& last = last_read_[p.slot()];
    if (last && *last != read_oracle(p)) step_process(p);
  }
}

void World::log_converge() {
  Event e;
  e.kind = EventKind::converge;
  e.process = explore_oracle_.leader.value_or(ProcessId(1));
  e.value = explore_oracle_.leader ? explore_oracle_.leader->index() : 0;
  record(e);
}

std::string World::key() const {
  std::string out;
  out.reserve(256);
  for (int i = 1; i <= cfg_.n; ++i) {
    ProcessId p(i);
    out.push_back(crashed(p) ? 'X' : 'L');
    procs_[p.slot()]->encode(out);
    out.push_back('|');
  }
  std::vector<std::string> pending;
  pending.reserve(pool_.size());
  for (const InFlight& m : pool_) {
    std::string item;
    item.push_back(static_cast<char>(m.receiver.index()));
    if (mode_ == DeliveryMode::identified) item.push_back(static_cast<char>(m.sender.index()));
    encode(m.msg, item);
    pending.push_back(std::move(item));
  }
  std::sort(pending.begin(), pending.end());
  for (const auto& item : pending) out += item;
  out.push_back('#');
  out.push_back(explore_oracle_.converged ? 'C' : 'c');
  out.push_back(static_cast<char>(explore_oracle_.leader ? explore_oracle_.leader->index() : 0));
  for (const Message& m : sent_) encode(m, out);
  return out;
}

std::vector<ProcessView> World::views() const {
  std::vector<ProcessView> out;
  for (int i = 1; i <= cfg_.n; ++i) {
    ProcessId p(i);
    ProcessView v;
    v.round = procs_[p.slot()]->round();
    v.crashed = crashed(p);
    v.halted = halted(p);
    v.output = output_[p.slot()];
    out.push_back(std::move(v));
  }
  return out;
}

Trace World::snapshot_trace(const FailurePattern& pattern, TraceStatus status) const {
  Trace t;
  t.cfg = cfg_;
  t.mode = mode_;
  t.inputs = inputs_;
  t.pattern = pattern;
  t.events = *log_;
  t.status = status;
  t.end_step = now_;
  t.pending = pool_.size();
  for (const auto& p : procs_) t.final_states.push_back(p->describe());
  return t;
}

}  // namespace anonfd::detail
