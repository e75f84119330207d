#include "rac/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace rac {

namespace {

[[noreturn]] void empty_cache(const char* who) {
  throw UsageError(std::string(who) + ": choose_victim on an empty cache");
}

std::size_t at_least_one(double x) { return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(x))); }

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

// --- shared containers -------------------------------------------------------

void RecencyList::push_front(EntryId id) {
  order_.push_front(id);
  pos_[id] = order_.begin();
}

void RecencyList::touch(EntryId id) {
  auto it = pos_.find(id);
  if (it == pos_.end()) return;
  order_.splice(order_.begin(), order_, it->second);
}

bool RecencyList::erase(EntryId id) {
  auto it = pos_.find(id);
  if (it == pos_.end()) return false;
  order_.erase(it->second);
  pos_.erase(it);
  return true;
}

EntryId RecencyList::pop_back() {
  const EntryId id = order_.back();
  erase(id);
  return id;
}

void GhostList::push(std::int64_t key) {
  erase(key);
  order_.push_front(key);
  pos_[key] = order_.begin();
  while (order_.size() > cap_) pop_oldest();
}

bool GhostList::erase(std::int64_t key) {
  auto it = pos_.find(key);
  if (it == pos_.end()) return false;
  order_.erase(it->second);
  pos_.erase(it);
  return true;
}

std::int64_t GhostList::pop_oldest() {
  const std::int64_t k = order_.back();
  erase(k);
  return k;
}

void GhostList::set_capacity(std::size_t cap) {
  cap_ = cap;
  while (order_.size() > cap_) pop_oldest();
}

// --- FIFO / LRU ----------------------------------------------------------------

EntryId FifoPolicy::choose_victim(const Access&) {
  if (queue_.empty()) empty_cache("fifo");
  return queue_.pop_back();
}

EntryId LruPolicy::choose_victim(const Access&) {
  if (list_.empty()) empty_cache("lru");
  return list_.pop_back();
}

// --- CLOCK ---------------------------------------------------------------------

void ClockPolicy::on_hit(const Access& a) {
  auto it = slot_of_.find(a.id);
  if (it != slot_of_.end()) slots_[it->second].ref = true;
}

void ClockPolicy::on_miss_insert(const Access& a) {
  std::size_t s;
  if (!free_.empty()) {
    s = free_.back();
    free_.pop_back();
  } else {
    s = slots_.size();
    slots_.push_back({});
  }
  slots_[s] = Slot{a.id, false, true};
  slot_of_[a.id] = s;
}

EntryId ClockPolicy::choose_victim(const Access&) {
  if (slot_of_.empty()) empty_cache("clock");
  const std::size_t n = slots_.size();
  for (;;) {
    hand_ %= n;
    Slot& s = slots_[hand_];
    if (s.used && !s.ref) break;
    s.ref = false;
    ++hand_;
  }
  Slot& victim = slots_[hand_];
  victim.used = false;
  slot_of_.erase(victim.id);
  free_.push_back(hand_);
  ++hand_;
  return victim.id;
}

// --- TTL -----------------------------------------------------------------------

TtlPolicy::TtlPolicy(Step lifetime) : lifetime_(std::max<Step>(1, lifetime)) {}

std::string TtlPolicy::config() const { return "lifetime=" + std::to_string(lifetime_); }

void TtlPolicy::on_miss_insert(const Access& a) {
  by_expiry_.emplace_back(a.t + lifetime_, a.id);
  live_[a.id] = a.t + lifetime_;
}

EntryId TtlPolicy::choose_victim(const Access&) {
  while (!by_expiry_.empty()) {
    auto [exp, id] = by_expiry_.front();
    by_expiry_.pop_front();
    if (live_.erase(id)) return id;
  }
  empty_cache("ttl");
}

std::vector<EntryId> TtlPolicy::expire(Step t) {
  std::vector<EntryId> out;
  while (!by_expiry_.empty() && by_expiry_.front().first <= t) {
    const EntryId id = by_expiry_.front().second;
    by_expiry_.pop_front();
    if (live_.erase(id)) out.push_back(id);
  }
  return out;
}

// --- 2Q ------------------------------------------------------------------------

TwoQPolicy::TwoQPolicy(std::size_t capacity)
    : kin_(at_least_one(0.25 * static_cast<double>(capacity))),
      a1out_(at_least_one(0.5 * static_cast<double>(capacity))) {}

std::string TwoQPolicy::config() const {
  return "kin=" + std::to_string(kin_) + ";kout=" + std::to_string(a1out_.capacity());
}

void TwoQPolicy::on_hit(const Access& a) {
  if (am_.contains(a.id)) am_.touch(a.id);
  // Hits in A1in leave it in place: correlated references.
}

void TwoQPolicy::on_miss_insert(const Access& a) {
  key_of_[a.id] = a.key;
  if (a1out_.erase(a.key)) {
    am_.push_front(a.id);
  } else {
    a1in_.push_front(a.id);
  }
}

EntryId TwoQPolicy::choose_victim(const Access&) {
  if (size() == 0) empty_cache("2q");
  EntryId victim;
  if (a1in_.size() > kin_ || am_.empty()) {
    victim = a1in_.pop_back();
    a1out_.push(key_of_.at(victim));
  } else {
    victim = am_.pop_back();
  }
  key_of_.erase(victim);
  return victim;
}

// --- ARC -----------------------------------------------------------------------

ArcPolicy::ArcPolicy(std::size_t capacity)
    : c_(capacity), b1_(std::numeric_limits<std::size_t>::max()),
      b2_(std::numeric_limits<std::size_t>::max()) {}

std::string ArcPolicy::config() const { return "c=" + std::to_string(c_) + ";adaptive_p=1"; }

void ArcPolicy::on_hit(const Access& a) {
  if (t1_.erase(a.id)) {
    t2_.push_front(a.id);
  } else {
    t2_.touch(a.id);
  }
}

EntryId ArcPolicy::replace(bool incoming_in_b2) {
  const double t1 = static_cast<double>(t1_.size());
  EntryId victim;
  if (!t1_.empty() && ((incoming_in_b2 && t1 == p_) || t1 > p_ || t2_.empty())) {
    victim = t1_.pop_back();
    b1_.push(key_of_.at(victim));
  } else {
    victim = t2_.pop_back();
    b2_.push(key_of_.at(victim));
  }
  key_of_.erase(victim);
  return victim;
}

EntryId ArcPolicy::choose_victim(const Access& incoming) {
  if (size() == 0) empty_cache("arc");
  const auto cd = static_cast<double>(c_);
  if (b1_.contains(incoming.key)) {
    const double delta = std::max(1.0, static_cast<double>(b2_.size()) / static_cast<double>(b1_.size()));
    p_ = std::min(cd, p_ + delta);
    return replace(false);
  }
  if (b2_.contains(incoming.key)) {
    const double delta = std::max(1.0, static_cast<double>(b1_.size()) / static_cast<double>(b2_.size()));
    p_ = std::max(0.0, p_ - delta);
    return replace(true);
  }
  // Brand-new item with a full cache.
  if (t1_.size() + b1_.size() >= c_) {
    if (t1_.size() < c_) {
      b1_.pop_oldest();
      return replace(false);
    }
    const EntryId victim = t1_.pop_back();
    key_of_.erase(victim);
    return victim;
  }
  if (t1_.size() + t2_.size() + b1_.size() + b2_.size() >= 2 * c_ && b2_.size() > 0) b2_.pop_oldest();
  return replace(false);
}

void ArcPolicy::on_miss_insert(const Access& a) {
  key_of_[a.id] = a.key;
  if (b1_.erase(a.key) || b2_.erase(a.key)) {
    t2_.push_front(a.id);
  } else {
    t1_.push_front(a.id);
  }
}

// --- TinyLFU -------------------------------------------------------------------

CountMinSketch::CountMinSketch(std::size_t width, std::size_t sample_size)
    : width_(std::max<std::size_t>(width, 4)), sample_size_(std::max<std::size_t>(sample_size, 1)) {
  for (auto& r : rows_) r.assign(width_, 0);
}

std::size_t CountMinSketch::index(std::size_t row, std::int64_t key) const {
  return mix64(static_cast<std::uint64_t>(key) ^ (0x5bd1e995ULL * (row + 1))) % width_;
}

void CountMinSketch::increment(std::int64_t key) {
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    auto& c = rows_[r][index(r, key)];
    if (c < 15) ++c;
  }
  if (++additions_ >= sample_size_) {
    for (auto& row : rows_) {
      for (auto& c : row) c >>= 1;
    }
    additions_ /= 2;
  }
}

std::uint32_t CountMinSketch::estimate(std::int64_t key) const {
  std::uint32_t m = 15;
  for (std::size_t r = 0; r < rows_.size(); ++r) m = std::min<std::uint32_t>(m, rows_[r][index(r, key)]);
  return m;
}

TinyLfuPolicy::TinyLfuPolicy(std::size_t capacity)
    : window_cap_(capacity < 2 ? capacity : at_least_one(0.01 * static_cast<double>(capacity))),
      main_cap_(capacity - window_cap_),
      protected_cap_(static_cast<std::size_t>(0.8 * static_cast<double>(main_cap_))),
      sketch_(4 * capacity, 10 * capacity) {}

std::string TinyLfuPolicy::config() const {
  std::ostringstream os;
  os << "window=" << window_cap_ << ";main=" << main_cap_ << ";protected=" << protected_cap_
     << ";cms_rows=4;doorkeeper=0";
  return os.str();
}

void TinyLfuPolicy::record(const Access& a) {
  if (recorded_t_ == a.t) return;
  recorded_t_ = a.t;
  sketch_.increment(a.key);
}

void TinyLfuPolicy::on_hit(const Access& a) {
  record(a);
  if (window_.contains(a.id)) {
    window_.touch(a.id);
  } else if (probation_.erase(a.id)) {
    protected_.push_front(a.id);
    while (protected_.size() > protected_cap_) probation_.push_front(protected_.pop_back());
  } else {
    protected_.touch(a.id);
  }
}

EntryId TinyLfuPolicy::main_victim() const {
  return probation_.empty() ? protected_.back() : probation_.back();
}

EntryId TinyLfuPolicy::choose_victim(const Access& incoming) {
  if (size() == 0) empty_cache("tinylfu");
  record(incoming);
  EntryId victim;
  const bool main_empty = probation_.empty() && protected_.empty();
  if (window_.size() < window_cap_ && !main_empty) {
    victim = main_victim();
    probation_.erase(victim) || protected_.erase(victim);
  } else if (main_cap_ == 0 || main_empty) {
    victim = window_.pop_back();
  } else {
    const EntryId candidate = window_.back();
    const EntryId incumbent = main_victim();
    if (sketch_.estimate(key_of_.at(candidate)) > sketch_.estimate(key_of_.at(incumbent))) {
      probation_.erase(incumbent) || protected_.erase(incumbent);
      window_.erase(candidate);
      probation_.push_front(candidate);
      victim = incumbent;
    } else {
      victim = window_.pop_back();
    }
  }
  key_of_.erase(victim);
  return victim;
}

void TinyLfuPolicy::on_miss_insert(const Access& a) {
  record(a);
  key_of_[a.id] = a.key;
  window_.push_front(a.id);
  while (window_.size() > window_cap_) probation_.push_front(window_.pop_back());
}

// --- S3-FIFO -------------------------------------------------------------------

S3FifoPolicy::S3FifoPolicy(std::size_t capacity)
    : small_cap_(at_least_one(0.1 * static_cast<double>(capacity))), ghost_(capacity) {}

std::string S3FifoPolicy::config() const {
  return "small=" + std::to_string(small_cap_) + ";ghost=main_capacity;max_freq=3";
}

void S3FifoPolicy::on_hit(const Access& a) {
  auto& f = meta_.at(a.id).second;
  f = std::min(f + 1, 3);
}

void S3FifoPolicy::on_miss_insert(const Access& a) {
  meta_[a.id] = {a.key, 0};
  if (ghost_.erase(a.key)) {
    main_.push_front(a.id);
  } else {
    small_.push_front(a.id);
  }
}

EntryId S3FifoPolicy::choose_victim(const Access&) {
  if (size() == 0) empty_cache("s3fifo");
  for (;;) {
    if (!small_.empty() && (small_.size() >= small_cap_ || main_.empty())) {
      const EntryId tail = small_.pop_back();
      auto& [key, freq] = meta_.at(tail);
      if (freq > 0) {
        freq = 0;
        main_.push_front(tail);
        continue;
      }
      ghost_.push(key);
      meta_.erase(tail);
      return tail;
    }
    const EntryId tail = main_.pop_back();
    auto& freq = meta_.at(tail).second;
    if (freq > 0) {
      --freq;
      main_.push_front(tail);
      continue;
    }
    meta_.erase(tail);
    return tail;
  }
}

// --- SIEVE ---------------------------------------------------------------------

void SievePolicy::on_hit(const Access& a) { pos_.at(a.id)->visited = true; }

void SievePolicy::on_miss_insert(const Access& a) {
  queue_.push_front(Node{a.id, false});
  pos_[a.id] = queue_.begin();
}

EntryId SievePolicy::choose_victim(const Access&) {
  if (queue_.empty()) empty_cache("sieve");
  auto toward_head = [this](std::list<Node>::iterator it) {
    return it == queue_.begin() ? std::prev(queue_.end()) : std::prev(it);
  };
  auto it = hand_ ? *hand_ : std::prev(queue_.end());
  while (it->visited) {
    it->visited = false;
    it = toward_head(it);
  }
  const EntryId victim = it->id;
  if (it == queue_.begin()) {
    hand_.reset();
  } else {
    hand_ = std::prev(it);
  }
  pos_.erase(victim);
  queue_.erase(it);
  return victim;
}

// --- LHD -----------------------------------------------------------------------

LhdPolicy::LhdPolicy(std::size_t capacity)
    : capacity_(std::max<std::size_t>(capacity, 1)),
      granularity_(std::max<Step>(1, static_cast<Step>(capacity_ / 8))) {}

std::string LhdPolicy::config() const {
  return "classes=16;granularity=" + std::to_string(granularity_) +
         ";rerank_every=" + std::to_string(capacity_) + ";decay=0.9";
}

std::size_t LhdPolicy::age_class(Step age) const {
  const Step coarse = age / granularity_;
  std::size_t c = 0;
  for (Step v = coarse; v > 0; v >>= 1) ++c;  // log2 buckets
  return std::min(c, kClasses - 1);
}

void LhdPolicy::tick() {
  if (++since_rerank_ >= capacity_) {
    since_rerank_ = 0;
    rerank();
  }
}

void LhdPolicy::rerank() {
  // Representative age of each class, in steps.
  std::array<double, kClasses> age{};
  for (std::size_t c = 0; c < kClasses; ++c) {
    const double lo = c == 0 ? 0.0 : std::ldexp(1.0, static_cast<int>(c) - 1);
    const double hi = std::ldexp(1.0, static_cast<int>(c));
    age[c] = 0.5 * (lo + hi) * static_cast<double>(granularity_);
  }
  for (std::size_t a = 0; a < kClasses; ++a) {
    double hits = 0.0, lifetime = 0.0;
    for (std::size_t y = a; y < kClasses; ++y) {
      hits += hits_[y];
      lifetime += (hits_[y] + evictions_[y]) * (age[y] - age[a] + 1.0);
    }
    density_[a] = lifetime > 0.0 ? hits / lifetime : 0.0;
  }
  for (std::size_t c = 0; c < kClasses; ++c) {
    hits_[c] *= 0.9;
    evictions_[c] *= 0.9;
  }
  ranked_ = true;
}

void LhdPolicy::on_hit(const Access& a) {
  auto& last = last_.at(a.id);
  hits_[age_class(a.t - last)] += 1.0;
  last = a.t;
  tick();
}

void LhdPolicy::on_miss_insert(const Access& a) {
  last_[a.id] = a.t;
  tick();
}

EntryId LhdPolicy::choose_victim(const Access& incoming) {
  if (last_.empty()) empty_cache("lhd");
  EntryId victim = 0;
  double best = std::numeric_limits<double>::infinity();
  Step best_last = 0;
  for (const auto& [id, last] : last_) {
    const Step age = incoming.t - last;
    // Before the first ranking, fall back to recency.
    const double d = ranked_ ? density_[age_class(age)] : 1.0 / static_cast<double>(age + 1);
    if (d < best || (d == best && (last < best_last || (last == best_last && id < victim)))) {
      best = d;
      best_last = last;
      victim = id;
    }
  }
  evictions_[age_class(incoming.t - best_last)] += 1.0;
  last_.erase(victim);
  return victim;
}

// --- LeCaR ---------------------------------------------------------------------

LeCarPolicy::LeCarPolicy(std::size_t capacity, std::uint64_t seed, double learning_rate)
    : capacity_(std::max<std::size_t>(capacity, 1)),
      learning_rate_(learning_rate),
      discount_(std::pow(0.005, 1.0 / static_cast<double>(capacity_))),
      rng_(seed) {}

std::string LeCarPolicy::config() const {
  std::ostringstream os;
  os << "learning_rate=" << learning_rate_ << ";discount=" << discount_ << ";history=" << capacity_;
  return os.str();
}

double LeCarPolicy::uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

void LeCarPolicy::remember(History& h, std::int64_t key, Step t) {
  auto it = h.pos.find(key);
  if (it != h.pos.end()) {
    h.order.erase(it->second);
    h.pos.erase(it);
  }
  h.order.emplace_front(key, t);
  h.pos[key] = h.order.begin();
  while (h.order.size() > capacity_) {
    h.pos.erase(h.order.back().first);
    h.order.pop_back();
  }
}

void LeCarPolicy::learn(const Access& a) {
  if (learned_t_ == a.t) return;
  learned_t_ = a.t;
  double w_lfu = 1.0 - w_lru_;
  auto penalise = [&](History& h, double& w) {
    auto it = h.pos.find(a.key);
    if (it == h.pos.end()) return;
    const double regret = std::pow(discount_, static_cast<double>(a.t - it->second->second));
    w *= std::exp(-learning_rate_ * regret);
    h.order.erase(it->second);
    h.pos.erase(it);
  };
  penalise(h_lru_, w_lru_);
  penalise(h_lfu_, w_lfu);
  w_lru_ = w_lru_ / (w_lru_ + w_lfu);
}

void LeCarPolicy::on_hit(const Access& a) {
  auto& m = meta_.at(a.id);
  lfu_.erase({m.freq, m.last, a.id});
  m.freq += 1;
  m.last = a.t;
  lfu_.insert({m.freq, m.last, a.id});
  lru_.touch(a.id);
}

void LeCarPolicy::on_miss_insert(const Access& a) {
  learn(a);
  meta_[a.id] = Meta{a.key, 1, a.t};
  lfu_.insert({1, a.t, a.id});
  lru_.push_front(a.id);
}

EntryId LeCarPolicy::choose_victim(const Access& incoming) {
  if (meta_.empty()) empty_cache("lecar");
  learn(incoming);
  const bool use_lru = uniform() < w_lru_;
  const EntryId victim = use_lru ? lru_.back() : std::get<2>(*lfu_.begin());
  const Meta m = meta_.at(victim);
  remember(use_lru ? h_lru_ : h_lfu_, m.key, incoming.t);
  lfu_.erase({m.freq, m.last, victim});
  lru_.erase(victim);
  meta_.erase(victim);
  return victim;
}

// --- factory -------------------------------------------------------------------

const std::vector<std::string>& baseline_names() {
  static const std::vector<std::string> names = {"fifo",    "lru",    "clock", "ttl", "2q",   "arc",
                                                 "tinylfu", "s3fifo", "sieve", "lhd", "lecar"};
  return names;
}

std::unique_ptr<Policy> make_baseline(const std::string& name, const BaselineParams& p) {
  if (p.capacity == 0) throw UsageError("capacity must be >= 1");
  if (name == "fifo") return std::make_unique<FifoPolicy>();
  if (name == "lru") return std::make_unique<LruPolicy>();
  if (name == "clock") return std::make_unique<ClockPolicy>();
  if (name == "ttl") return std::make_unique<TtlPolicy>(p.capacity);
  if (name == "2q") return std::make_unique<TwoQPolicy>(p.capacity);
  if (name == "arc") return std::make_unique<ArcPolicy>(p.capacity);
  if (name == "tinylfu") return std::make_unique<TinyLfuPolicy>(p.capacity);
  if (name == "s3fifo") return std::make_unique<S3FifoPolicy>(p.capacity);
  if (name == "sieve") return std::make_unique<SievePolicy>();
  if (name == "lhd") return std::make_unique<LhdPolicy>(p.capacity);
  if (name == "lecar") return std::make_unique<LeCarPolicy>(p.capacity, p.seed);
  throw UsageError("unknown policy '" + name + "'");
}

}  // namespace rac
