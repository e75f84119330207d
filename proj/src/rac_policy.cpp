#include "rac/rac_policy.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace rac {

void RacConfig::validate() const {
  if (capacity == 0) throw UsageError("capacity must be >= 1");
  if (!(tau > 0.0 && tau <= 1.0)) throw UsageError("tau must be in (0, 1]");
  if (!(route_tau > -1.0 && route_tau <= 1.0)) throw UsageError("route_tau must be in (-1, 1]");
  if (shortlist_k == 0) throw UsageError("shortlist_k must be >= 1");
  if (alpha) TpConfig{*alpha}.validate();
  tsi.validate();
  if (use_structural_rank) rank.validate();
}

TpConfig RacConfig::tp() const { return alpha ? TpConfig{*alpha} : TpConfig::for_capacity(capacity); }

std::string RacConfig::describe() const {
  std::ostringstream os;
  os.precision(9);
  os << "capacity=" << capacity << ";tau=" << tau << ";route_tau=" << route_tau
     << ";alpha=" << tp().alpha << ";lambda=" << tsi.lambda << ";lookback=" << tsi.lookback
     << ";tau_edge=" << tsi.tau_edge << ";shortlist_k=" << shortlist_k
     << ";inherit_tau=";
  if (inherit_tau) {
    os << *inherit_tau;
  } else {
    os << "off";
  }
  os << ";structural_rank=" << use_structural_rank << ";use_tp=" << use_tp << ";use_tsi=" << use_tsi
     << ";topic_local_hits=" << topic_local_hits;
  return os.str();
}

RacPolicy::RacPolicy(RacConfig cfg, DepEventLog* log)
    : cfg_(cfg), tp_cfg_(cfg.tp()), tracker_(cfg.tsi, log) {
  cfg_.validate();
}

std::string RacPolicy::name() const {
  if (!cfg_.use_tp) return "rac-notp";
  if (!cfg_.use_tsi) return "rac-notsi";
  return "rac";
}

const EmbeddingVector& RacPolicy::embedding(EntryId id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw UsageError("entry " + std::to_string(id) + " is not resident");
  return it->second.embedding;
}

TopicId RacPolicy::topic_of(EntryId id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw UsageError("entry " + std::to_string(id) + " is not resident");
  return it->second.topic;
}

std::vector<EntryId> RacPolicy::residents() const {
  std::vector<EntryId> out;
  out.reserve(entries_.size());
  for (const auto& [id, e] : entries_) out.push_back(id);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<ParentCandidate> RacPolicy::candidates(TopicId s) const {
  std::vector<ParentCandidate> out;
  if (!topics_.contains(s)) return out;
  for (EntryId m : topics_.state(s).members) {
    out.push_back(ParentCandidate{m, tracker_.last_access(m), tracker_.insert_time(m), &entries_.at(m).embedding});
  }
  return out;
}

double RacPolicy::value(EntryId id, Step t) const {
  const double tp = cfg_.use_tp ? topics_.tp_value(topic_of(id), t, tp_cfg_) : 1.0;
  const double tsi = cfg_.use_tsi ? tracker_.tsi(id) : 1.0;
  return tp * tsi;
}

std::optional<std::vector<EntryId>> RacPolicy::hit_scope(const Request& q) {
  if (!cfg_.topic_local_hits) return std::nullopt;
  auto s = topics_.route_topic(q.embedding, cfg_.route_tau, cfg_.shortlist_k, *this);
  if (!s) return std::vector<EntryId>{};
  return topics_.state(*s).members;
}

std::vector<EntryId> RacPolicy::on_request(const Request& q, std::optional<EntryId> hit, EntryId fresh,
                                           std::int64_t) {
  const Step t = q.t;
  last_link_.reset();
  auto note = [&](EntryId child, const TsiUpdate& u) {
    if (u.new_link) last_link_ = {child, *u.parent};
  };
  if (hit) {
    const TopicId s = topic_of(*hit);
    topics_.tp_hit(s, t, tp_cfg_);
    note(*hit, tracker_.access(*hit, t, q.embedding, [&] { return candidates(s); }));
    return {};
  }

  const auto routed = topics_.route_topic(q.embedding, cfg_.route_tau, cfg_.shortlist_k, *this);
  tracker_.insert(fresh, t);
  if (routed) {
    topics_.tp_hit(*routed, t, tp_cfg_);
    note(fresh, tracker_.access(fresh, t, q.embedding, [&] { return candidates(*routed); }));
    entries_.emplace(fresh, Entry{q.embedding, *routed});
    topics_.on_insert_member(*routed, fresh, *this);
  } else {
    tracker_.access(fresh, t, q.embedding, nullptr);
    entries_.emplace(fresh, Entry{q.embedding, 0});
    entries_.at(fresh).topic = topics_.create_topic(q.embedding, fresh, t, tp_cfg_, cfg_.inherit_tau);
  }

  std::vector<EntryId> evicted;
  const auto keep = cfg_.protect_incoming ? std::optional<EntryId>(fresh) : std::nullopt;
  while (entries_.size() > cfg_.capacity) evicted.push_back(evict_one(t, keep));
  return evicted;
}

void RacPolicy::refresh_all() {
  std::vector<TopicId> stale;
  for (const auto& [s, st] : topics_.topics()) {
    if (!st.anchor) stale.push_back(s);
  }
  for (TopicId s : stale) topics_.refresh_topic(s, *this);
}

std::unordered_map<EntryId, double> RacPolicy::rank_multipliers() const {
  std::unordered_map<EntryId, double> out;
  for (const auto& [s, st] : topics_.topics()) {
    DependencyDag dag;
    std::vector<EntryId> nodes = st.members;
    std::sort(nodes.begin(), nodes.end(), [&](EntryId a, EntryId b) {
      const Step ia = tracker_.insert_time(a), ib = tracker_.insert_time(b);
      return ia < ib || (ia == ib && a < b);
    });
    dag.nodes = nodes;
    std::unordered_map<EntryId, bool> in_topic;
    for (EntryId m : nodes) in_topic[m] = true;
    for (EntryId m : nodes) {
      auto p = tracker_.parent(m);
      if (p && in_topic.contains(*p)) dag.edges.emplace_back(*p, m);
    }
    const auto r = structural_rank(dag, cfg_.rank);
    const auto n = static_cast<double>(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) out[nodes[i]] = r[i] * n;
  }
  return out;
}

EntryId RacPolicy::evict_one(Step t, std::optional<EntryId> keep) {
  refresh_all();
  std::unordered_map<EntryId, double> mult;
  if (cfg_.use_structural_rank) mult = rank_multipliers();

  // Topic TP is shared by all members; evaluate it once per topic.
  std::unordered_map<TopicId, double> tp_cache;
  auto val = [&](EntryId id, const Entry& e) {
    double tp = 1.0;
    if (cfg_.use_tp) {
      auto [it, fresh] = tp_cache.try_emplace(e.topic, 0.0);
      if (fresh) it->second = topics_.tp_value(e.topic, t, tp_cfg_);
      tp = it->second;
    }
    double v = tp * (cfg_.use_tsi ? tracker_.tsi(id) : 1.0);
    if (cfg_.use_structural_rank) v *= mult.at(id);
    return v;
  };

  EntryId victim = 0;
  double best = std::numeric_limits<double>::infinity();
  Step best_last = 0;
  bool found = false;
  for (const auto& [id, e] : entries_) {
    if (keep && id == *keep && entries_.size() > 1) continue;
    const double v = val(id, e);
    const Step last = tracker_.last_access(id);
    if (!found || v < best || (v == best && (last < best_last || (last == best_last && id < victim)))) {
      victim = id;
      best = v;
      best_last = last;
      found = true;
    }
  }

  if (cfg_.check_evictions && on_eviction_audit) {
    double survivor_min = std::numeric_limits<double>::infinity();
    for (const auto& [id, e] : entries_) {
      if (id != victim) survivor_min = std::min(survivor_min, val(id, e));
    }
    on_eviction_audit(best, survivor_min);
  }

  const TopicId s = entries_.at(victim).topic;
  tracker_.evict(victim, t);
  topics_.on_evict_member(s, victim);
  entries_.erase(victim);
  return victim;
}

}  // namespace rac
