#include "rac/sim.hpp"

#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "rac/baselines.hpp"
#include "rac/belady.hpp"
#include "rac/gen.hpp"

namespace rac {

namespace {

// Never evicts; used for HR_full.
class UnboundedPolicy final : public CachePolicy {
 public:
  std::string name() const override { return "unbounded"; }
  std::string config() const override { return ""; }
  std::vector<EntryId> on_request(const Request&, std::optional<EntryId>, EntryId, std::int64_t) override {
    return {};
  }
};

std::uint64_t fnv(std::uint64_t h, std::uint64_t x) {
  for (int i = 0; i < 8; ++i) {
    h ^= (x >> (8 * i)) & 0xff;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t digest_of(std::vector<EntryId> residents, std::uint64_t hits, std::uint64_t misses) {
  std::sort(residents.begin(), residents.end());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = fnv(h, hits);
  h = fnv(h, misses);
  for (EntryId id : residents) h = fnv(h, id);
  return h;
}

class Residents {
 public:
  void add(EntryId id, const Request& r, std::int64_t key) {
    index_[id] = items_.size();
    items_.push_back(Item{id, &r.embedding, key});
    by_key_[key] = id;
  }
  void remove(EntryId id) {
    auto it = index_.find(id);
    if (it == index_.end()) throw std::logic_error("policy evicted non-resident entry " + std::to_string(id));
    const std::size_t i = it->second;
    auto kit = by_key_.find(items_[i].key);
    if (kit != by_key_.end() && kit->second == id) by_key_.erase(kit);
    items_[i] = items_.back();
    index_[items_[i].id] = i;
    items_.pop_back();
    index_.erase(id);
  }
  std::size_t size() const { return items_.size(); }
  bool contains(EntryId id) const { return index_.contains(id); }

  std::optional<std::pair<EntryId, double>> nearest(const EmbeddingVector& q) const {
    std::optional<std::pair<EntryId, double>> best;
    for (const Item& it : items_) consider(best, it, q);
    return best;
  }
  std::optional<std::pair<EntryId, double>> nearest(const EmbeddingVector& q,
                                                   const std::vector<EntryId>& scope) const {
    std::optional<std::pair<EntryId, double>> best;
    for (EntryId id : scope) {
      auto it = index_.find(id);
      if (it != index_.end()) consider(best, items_[it->second], q);
    }
    return best;
  }
  std::optional<EntryId> by_key(std::int64_t key) const {
    auto it = by_key_.find(key);
    if (it == by_key_.end()) return std::nullopt;
    return it->second;
  }
  std::vector<EntryId> ids() const {
    std::vector<EntryId> out;
    for (const Item& it : items_) out.push_back(it.id);
    return out;
  }

 private:
  struct Item {
    EntryId id;
    const EmbeddingVector* embedding;
    std::int64_t key;
  };
  static void consider(std::optional<std::pair<EntryId, double>>& best, const Item& it,
                       const EmbeddingVector& q) {
    const double s = unit_dot(q, *it.embedding);
    if (!best || s > best->second || (s == best->second && it.id < best->first)) best = {it.id, s};
  }

  std::vector<Item> items_;
  std::unordered_map<EntryId, std::size_t> index_;
  std::unordered_map<std::int64_t, EntryId> by_key_;
};

std::string fmt_sim(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9f", s);
  return buf;
}

SimResult simulate(const Trace& trace, CachePolicy& policy, const SimOptions& opts, bool bounded) {
  trace.validate();
  for (const Request& r : trace.requests) {
    if (r.embedding.dim() != trace.dim) {
      throw ValidationError("request " + std::to_string(r.id) + " has dimension " +
                            std::to_string(r.embedding.dim()) + ", trace declares " + std::to_string(trace.dim));
    }
  }
  if (opts.exact_keys && !trace.has_exact_keys()) throw UsageError("exact-key mode needs a key on every request");
  if (bounded && opts.capacity == 0) throw UsageError("capacity must be >= 1");

  const auto start = std::chrono::steady_clock::now();
  SimResult res;
  res.config_echo = "policy=" + policy.name() + ";" + policy.config() + ";hit_tau=" + fmt_sim(opts.tau) +
                    ";exact_keys=" + (opts.exact_keys ? "1" : "0");
  auto* rac = dynamic_cast<RacPolicy*>(&policy);
  Residents residents;

  for (const Request& q : trace.requests) {
    for (EntryId id : policy.expire(q.t)) {
      residents.remove(id);
      if (opts.record_steps) res.steps.push_back("EVICT " + std::to_string(id) + " " + std::to_string(q.t));
    }
    const std::int64_t key = request_key(q);
    std::optional<EntryId> hit;
    double sim = 0.0;
    if (opts.exact_keys) {
      hit = residents.by_key(key);
      sim = 1.0;
    } else {
      auto scope = policy.hit_scope(q);
      auto best = scope ? residents.nearest(q.embedding, *scope) : residents.nearest(q.embedding);
      if (best && best->second >= opts.tau) {
        hit = best->first;
        sim = best->second;
      }
    }

    const EntryId fresh = q.t;
    const auto evicted = policy.on_request(q, hit, fresh, key);
    if (hit) {
      ++res.hits;
      if (opts.record_steps) {
        res.steps.push_back("HIT " + std::to_string(*hit) + " " + std::to_string(q.t) + " " + fmt_sim(sim));
      }
    } else {
      ++res.misses;
      residents.add(fresh, q, key);
      if (opts.record_steps) {
        res.steps.push_back("MISS " + std::to_string(q.t));
        res.steps.push_back("INSERT " + std::to_string(fresh) + " " + std::to_string(q.t));
      }
    }
    if (rac && opts.record_steps) {
      if (auto link = rac->last_link()) {
        res.steps.push_back(format_event(DepEvent{DepEventKind::kLink, link->first, link->second, q.t}));
      }
    }
    for (EntryId v : evicted) {
      residents.remove(v);
      if (opts.record_steps) res.steps.push_back("EVICT " + std::to_string(v) + " " + std::to_string(q.t));
    }
    if (bounded && residents.size() > opts.capacity) {
      throw std::logic_error(policy.name() + " exceeded capacity at t=" + std::to_string(q.t));
    }
  }

  const auto n = static_cast<double>(trace.size());
  res.hr = n > 0 ? static_cast<double>(res.hits) / n : 0.0;
  res.final_digest = digest_of(residents.ids(), res.hits, res.misses);
  res.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return res;
}

}  // namespace

std::int64_t request_key(const Request& r) { return r.exact_key ? *r.exact_key : embedding_key(r.embedding); }

SimResult run_sim(const Trace& trace, CachePolicy& policy, const SimOptions& opts) {
  return simulate(trace, policy, opts, true);
}

double hr_full(const Trace& trace, double tau, bool exact_keys) {
  UnboundedPolicy unbounded;
  SimOptions opts;
  opts.tau = tau;
  opts.exact_keys = exact_keys;
  return simulate(trace, unbounded, opts, false).hr;
}

double normalize_hr(double hr, double full) { return full > 0.0 ? hr / full : 1.0; }

std::size_t unique_footprint(const Trace& trace, double tau) {
  if (trace.has_exact_keys()) {
    std::unordered_set<std::int64_t> keys;
    for (const Request& r : trace.requests) keys.insert(*r.exact_key);
    return keys.size();
  }
  UnboundedPolicy unbounded;
  SimOptions opts;
  opts.tau = tau;
  return simulate(trace, unbounded, opts, false).misses;
}

std::size_t capacity_from_fraction(double fraction, std::size_t footprint) {
  if (!(fraction > 0.0) || !std::isfinite(fraction)) throw UsageError("capacity fraction must be > 0");
  const double c = std::round(fraction * static_cast<double>(footprint));
  return std::max<std::size_t>(1, static_cast<std::size_t>(c));
}

std::uint64_t replay_digest(const std::vector<std::string>& steps) {
  std::unordered_set<EntryId> residents;
  std::uint64_t hits = 0, misses = 0;
  for (const std::string& line : steps) {
    std::istringstream in(line);
    std::string kind;
    in >> kind;
    EntryId id = 0;
    if (kind == "HIT") {
      ++hits;
    } else if (kind == "MISS") {
      ++misses;
    } else if (kind == "INSERT") {
      in >> id;
      residents.insert(id);
    } else if (kind == "EVICT") {
      in >> id;
      residents.erase(id);
    }
  }
  return digest_of({residents.begin(), residents.end()}, hits, misses);
}

const std::vector<std::string>& policy_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n = baseline_names();
    n.insert(n.end(), {"rac", "rac-notp", "rac-notsi", "belady"});
    return n;
  }();
  return names;
}

std::unique_ptr<CachePolicy> make_policy(const std::string& name, const PolicyParams& params,
                                         const Trace* trace) {
  if (params.capacity == 0) throw UsageError("capacity must be >= 1");
  if (name == "rac" || name == "rac-notp" || name == "rac-notsi") {
    RacConfig cfg = params.rac;
    cfg.capacity = params.capacity;
    if (name == "rac-notp") cfg.use_tp = false;
    if (name == "rac-notsi") cfg.use_tsi = false;
    return std::make_unique<RacPolicy>(cfg);
  }
  if (name == "belady") {
    if (!trace) throw UsageError("belady needs the trace it will be run on");
    return std::make_unique<BeladyPolicy>(*trace, params.capacity);
  }
  const auto& base = baseline_names();
  if (std::find(base.begin(), base.end(), name) != base.end()) {
    return std::make_unique<BaselinePolicy>(make_baseline(name, BaselineParams{params.capacity, params.seed}),
                                            params.capacity);
  }
  std::string valid;
  for (const auto& n : policy_names()) valid += (valid.empty() ? "" : "|") + n;
  throw UsageError("unknown policy '" + name + "' (valid: " + valid + ")");
}

}  // namespace rac
