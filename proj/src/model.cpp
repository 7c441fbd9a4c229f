#include "anonfd/model.hpp"

#include <algorithm>
#include <bit>
#include <numeric>
#include <sstream>

namespace anonfd {

std::string to_string(ProcessId p) { return "p" + std::to_string(p.index()); }

ProcessSet ProcessSet::all(int n) {
  if (n >= 64) return from_bits(~std::uint64_t{0});
  return from_bits((std::uint64_t{1} << n) - 1);
}

ProcessSet ProcessSet::of(std::initializer_list<int> indices) {
  ProcessSet s;
  for (int i : indices) s.insert(ProcessId(i));
  return s;
}

int ProcessSet::size() const { return std::popcount(bits_); }

int ProcessSet::max_index() const {
  return bits_ == 0 ? 0 : 64 - std::countl_zero(bits_);
}

std::vector<ProcessId> ProcessSet::members() const {
  std::vector<ProcessId> out;
  for (std::uint64_t b = bits_; b != 0; b &= b - 1) {
    out.push_back(ProcessId::from_slot(static_cast<std::size_t>(std::countr_zero(b))));
  }
  return out;
}

std::string to_string(ProcessSet s) {
  std::string out = "{";
  bool first = true;
  for (ProcessId p : s.members()) {
    if (!first) out += ",";
    out += to_string(p);
    first = false;
  }
  return out + "}";
}

void SystemConfig::validate() const {
  if (n < 1 || n > kMaxProcesses) {
    throw ModelError("n must be in [1, 64], got " + std::to_string(n));
  }
  if (f < 0 || f >= n) {
    throw ModelError("f must satisfy 0 <= f < n, got n=" + std::to_string(n) +
                     " f=" + std::to_string(f));
  }
}

// ---------------------------------------------------------------------------

FailurePattern::FailurePattern(int n) : n_(n) {}

FailurePattern::FailurePattern(int n, std::map<ProcessId, Time> crash_times)
    : n_(n), crash_(std::move(crash_times)) {
  for (const auto& [p, t] : crash_) {
    if (p.index() < 1 || p.index() > n_) {
      throw ModelError("crash entry for " + to_string(p) + " outside system of size " +
                       std::to_string(n_));
    }
    if (t < 0) throw ModelError("negative crash time for " + to_string(p));
  }
}

std::optional<Time> FailurePattern::crash_time(ProcessId p) const {
  auto it = crash_.find(p);
  if (it == crash_.end()) return std::nullopt;
  return it->second;
}

ProcessSet FailurePattern::at(Time t) const {
  ProcessSet s;
  for (const auto& [p, ct] : crash_) {
    if (ct <= t) s.insert(p);
  }
  return s;
}

ProcessSet FailurePattern::crashed() const {
  ProcessSet s;
  for (const auto& entry : crash_) s.insert(entry.first);
  return s;
}

bool FailurePattern::alive_at(ProcessId p, Time t) const {
  auto ct = crash_time(p);
  return !ct || t < *ct;
}

Time FailurePattern::last_crash() const {
  Time last = 0;
  for (const auto& entry : crash_) last = std::max(last, entry.second);
  return last;
}

void FailurePattern::validate(const SystemConfig& cfg) const {
  cfg.validate();
  if (n_ != cfg.n) {
    throw ModelError("failure pattern is over " + std::to_string(n_) +
                     " processes but the system has " + std::to_string(cfg.n));
  }
  if (static_cast<int>(crash_.size()) > cfg.f) {
    throw ModelError("failure pattern crashes " + std::to_string(crash_.size()) +
                     " processes, more than f=" + std::to_string(cfg.f));
  }
}

ProcessSet crashed_set(const FailurePattern& pattern) { return pattern.crashed(); }

ProcessSet correct_set(const FailurePattern& pattern, const SystemConfig& cfg) {
  if (pattern.n() != cfg.n) throw ModelError("failure pattern / system size mismatch");
  ProcessSet correct = cfg.all() - pattern.crashed();
  if (correct.empty()) throw ModelError("at least one process must be correct");
  return correct;
}

// ---------------------------------------------------------------------------

Permutation::Permutation(std::vector<ProcessId> images) : images_(std::move(images)) {
  const int n = static_cast<int>(images_.size());
  std::vector<bool> seen(images_.size(), false);
  for (ProcessId p : images_) {
    if (p.index() < 1 || p.index() > n || seen[p.slot()]) {
      throw ModelError("permutation images are not a bijection on {1.." + std::to_string(n) +
                       "}");
    }
    seen[p.slot()] = true;
  }
}

Permutation Permutation::identity(int n) {
  std::vector<ProcessId> images;
  for (int i = 1; i <= n; ++i) images.emplace_back(i);
  return Permutation(std::move(images));
}

Permutation Permutation::swap(int n, ProcessId a, ProcessId b) {
  auto images = identity(n).images_;
  std::swap(images.at(a.slot()), images.at(b.slot()));
  return Permutation(std::move(images));
}

Permutation Permutation::cycle(int n, const std::vector<int>& indices) {
  auto images = identity(n).images_;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    int from = indices[k];
    int to = indices[(k + 1) % indices.size()];
    images.at(ProcessId(from).slot()) = ProcessId(to);
  }
  return Permutation(std::move(images));
}

Permutation Permutation::random(int n, std::mt19937_64& rng) {
  auto images = identity(n).images_;
  // Fisher-Yates with an explicit draw so the sequence is stdlib-independent.
  for (int i = n - 1; i > 0; --i) {
    auto j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(images[static_cast<std::size_t>(i)], images[static_cast<std::size_t>(j)]);
  }
  return Permutation(std::move(images));
}

std::vector<Permutation> Permutation::all(int n) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 1);
  std::vector<Permutation> out;
  do {
    std::vector<ProcessId> images;
    for (int i : idx) images.emplace_back(i);
    out.emplace_back(std::move(images));
  } while (std::next_permutation(idx.begin(), idx.end()));
  return out;
}

ProcessSet Permutation::operator()(ProcessSet s) const {
  ProcessSet out;
  for (ProcessId p : s.members()) out.insert((*this)(p));
  return out;
}

Permutation Permutation::inverse() const {
  std::vector<ProcessId> inv(images_.size());
  for (std::size_t i = 0; i < images_.size(); ++i) {
    inv[images_[i].slot()] = ProcessId::from_slot(i);
  }
  return Permutation(std::move(inv));
}

Permutation Permutation::after(const Permutation& inner) const {
  if (inner.n() != n()) throw ModelError("composing permutations of different sizes");
  std::vector<ProcessId> images;
  for (ProcessId p : inner.images_) images.push_back((*this)(p));
  return Permutation(std::move(images));
}

std::string to_string(const Permutation& perm) {
  std::string out = "[";
  for (std::size_t i = 0; i < perm.images().size(); ++i) {
    if (i) out += " ";
    out += to_string(ProcessId::from_slot(i)) + "->" + to_string(perm.images()[i]);
  }
  return out + "]";
}

std::vector<Permutation> permutation_source(int n, std::size_t samples, std::uint64_t seed) {
  if (n <= 4) return Permutation::all(n);
  std::mt19937_64 rng(seed);
  std::vector<Permutation> out;
  out.reserve(samples);
  for (std::size_t i = 0; i < samples; ++i) out.push_back(Permutation::random(n, rng));
  return out;
}

FailurePattern permute_pattern(const Permutation& perm, const FailurePattern& pattern) {
  if (perm.n() != pattern.n()) throw ModelError("permutation / pattern size mismatch");
  std::map<ProcessId, Time> crash;
  for (const auto& [p, t] : pattern.crash_times()) crash[perm(p)] = t;
  return FailurePattern(pattern.n(), std::move(crash));
}

// ---------------------------------------------------------------------------

void ReceiveLog::record(ProcessId receiver, ProcessId sender, Time t, std::string value) {
  values_[{receiver, sender, t}] = std::move(value);
}

std::optional<std::string> ReceiveLog::get(ProcessId receiver, ProcessId sender, Time t) const {
  auto it = values_.find({receiver, sender, t});
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string> anonymous_receive(const ReceiveLog& log, const Permutation& perm,
                                             ProcessId receiver, ProcessId j, Time t) {
  return log.get(receiver, perm(j), t);
}

// ---------------------------------------------------------------------------

std::string to_string(ValueRange range) {
  switch (range) {
    case ValueRange::count: return "count";
    case ValueRange::boolean: return "boolean";
    case ValueRange::process_set: return "process_set";
    case ValueRange::process_id: return "process_id";
  }
  return "?";
}

ValueRange parse_value_range(const std::string& text) {
  if (text == "count") return ValueRange::count;
  if (text == "boolean") return ValueRange::boolean;
  if (text == "process_set") return ValueRange::process_set;
  if (text == "process_id") return ValueRange::process_id;
  throw ModelError("unknown history range '" + text + "'");
}

std::string to_string(const DetectorValue& value) {
  struct Visitor {
    std::string operator()(int v) const { return std::to_string(v); }
    std::string operator()(bool v) const { return v ? "true" : "false"; }
    std::string operator()(ProcessSet s) const { return to_string(s); }
  };
  return std::visit(Visitor{}, value);
}

namespace {

bool fits(ValueRange range, const DetectorValue& value) {
  switch (range) {
    case ValueRange::count:
    case ValueRange::process_id: return std::holds_alternative<int>(value);
    case ValueRange::boolean: return std::holds_alternative<bool>(value);
    case ValueRange::process_set: return std::holds_alternative<ProcessSet>(value);
  }
  return false;
}

}  // namespace

DetectorHistory::DetectorHistory(ValueRange range, int n, Time horizon, DetectorValue fill)
    : range_(range), n_(n), horizon_(horizon) {
  if (!fits(range, fill)) throw ModelError("history value does not match its range");
  if (n < 1 || n > kMaxProcesses) throw ModelError("history size out of range");
  if (horizon < 0) throw ModelError("history horizon must be non-negative");
  out_.assign(static_cast<std::size_t>(n),
              std::vector<DetectorValue>(static_cast<std::size_t>(horizon + 1), fill));
}

const DetectorValue& DetectorHistory::at(ProcessId p, Time t) const {
  if (p.index() < 1 || p.index() > n_) throw ModelError("history lookup for unknown process");
  if (t < 0) throw ModelError("history lookup at negative time");
  return out_[p.slot()][static_cast<std::size_t>(std::min(t, horizon_))];
}

void DetectorHistory::set(ProcessId p, Time t, DetectorValue value) {
  if (p.index() < 1 || p.index() > n_ || t < 0 || t > horizon_) {
    throw ModelError("history write outside the table");
  }
  if (!fits(range_, value)) throw ModelError("history value does not match its range");
  out_[p.slot()][static_cast<std::size_t>(t)] = std::move(value);
}

void DetectorHistory::set_from(ProcessId p, Time t, const DetectorValue& value) {
  for (Time u = std::max<Time>(t, 0); u <= horizon_; ++u) set(p, u, value);
}

DetectorHistory permute_history(const Permutation& perm, const DetectorHistory& history) {
  if (perm.n() != history.n()) throw ModelError("permutation / history size mismatch");
  DetectorHistory out(history.range(), history.n(), history.horizon(), history.at(ProcessId(1), 0));
  for (int i = 1; i <= history.n(); ++i) {
    ProcessId p(i);
    for (Time t = 0; t <= history.horizon(); ++t) out.set(p, t, history.at(perm(p), t));
  }
  out.convergence = history.convergence;
  return out;
}

AnonymityVerdict is_anonymous(const HistoryValidator& validates, const FailurePattern& pattern,
                              const DetectorHistory& history,
                              const std::vector<Permutation>& perms,
                              AnonymityConvention convention) {
  if (!validates(history, pattern)) {
    throw ModelError("is_anonymous: input history is not valid for the failure pattern");
  }
  AnonymityVerdict verdict;
  for (const Permutation& perm : perms) {
    ++verdict.checked;
    DetectorHistory relabeled = permute_history(perm, history);
    FailurePattern relabeled_pattern = convention == AnonymityConvention::consistent
                                           ? permute_pattern(perm.inverse(), pattern)
                                           : permute_pattern(perm, pattern);
    if (!validates(relabeled, relabeled_pattern)) {
      verdict.anonymous = false;
      verdict.violating = perm;
      return verdict;
    }
  }
  return verdict;
}

}  // namespace anonfd
