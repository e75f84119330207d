#include "rac/topics.hpp"

#include <algorithm>
#include <string>

namespace rac {

void ExactScanIndex::upsert(TopicId id, const EmbeddingVector& rep) { reps_[id] = rep; }

void ExactScanIndex::erase(TopicId id) { reps_.erase(id); }

std::vector<TopicId> ExactScanIndex::shortlist(const EmbeddingVector& q, std::size_t k) const {
  std::vector<std::pair<double, TopicId>> scored;
  scored.reserve(reps_.size());
  for (const auto& [id, rep] : reps_) scored.emplace_back(unit_dot(q, rep), id);
  const std::size_t n = std::min(k, scored.size());
  auto order = [](const auto& a, const auto& b) {
    return a.first > b.first || (a.first == b.first && a.second < b.second);
  };
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(),
                    order);
  std::vector<TopicId> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(scored[i].second);
  return out;
}

TopicIndex::TopicIndex(std::unique_ptr<RepresentativeIndex> index) : index_(std::move(index)) {}

const TopicState& TopicIndex::state(TopicId s) const {
  auto it = topics_.find(s);
  if (it == topics_.end()) throw UsageError("topic " + std::to_string(s) + " is not in the index");
  return it->second;
}

TopicState& TopicIndex::mut(TopicId s) { return const_cast<TopicState&>(state(s)); }

void TopicIndex::set_anchor(TopicState& st, EntryId entry, const MemberInfo& info) {
  st.anchor = entry;
  st.rep = info.embedding(entry);
  index_->upsert(st.id, st.rep);
}

std::optional<TopicId> TopicIndex::route_topic(const EmbeddingVector& q, double tau, std::size_t k,
                                               const MemberInfo& info) {
  std::optional<TopicId> best;
  double best_sim = 0.0;
  for (TopicId s : index_->shortlist(q, k)) {
    if (stale(s)) refresh_topic(s, info);
    const double sim = unit_dot(q, state(s).rep);
    if (sim < tau) continue;
    if (!best || sim > best_sim || (sim == best_sim && s < *best)) {
      best = s;
      best_sim = sim;
    }
  }
  return best;
}

TopicId TopicIndex::create_topic(const EmbeddingVector& q, EntryId entry, Step t,
                                 const TpConfig& tp_cfg, std::optional<double> inherit_tau) {
  const TopicId id = next_id_++;
  TpState tp;
  if (inherit_tau && !dormant_.empty()) {
    std::size_t best = dormant_.size();
    double best_sim = *inherit_tau;
    for (std::size_t i = 0; i < dormant_.size(); ++i) {
      const double sim = unit_dot(q, dormant_[i].rep);
      if (sim >= best_sim && (best == dormant_.size() || sim > best_sim)) {
        best = i;
        best_sim = sim;
      }
    }
    if (best != dormant_.size()) {
      tp = tp_history_.at(dormant_[best].id);
      dormant_.erase(dormant_.begin() + static_cast<std::ptrdiff_t>(best));
    }
  }
  TopicState st;
  st.id = id;
  st.members.push_back(entry);
  st.rep = q;
  st.anchor = entry;
  st.tp = tp_on_hit(tp, t, tp_cfg);
  tp_history_[id] = st.tp;
  index_->upsert(id, st.rep);
  topics_.emplace(id, std::move(st));
  return id;
}

void TopicIndex::on_insert_member(TopicId s, EntryId entry, const MemberInfo& info) {
  TopicState& st = mut(s);
  st.members.push_back(entry);
  if (!st.anchor || info.tsi(entry) > info.tsi(*st.anchor)) set_anchor(st, entry, info);
}

void TopicIndex::on_evict_member(TopicId s, EntryId entry) {
  TopicState& st = mut(s);
  auto it = std::find(st.members.begin(), st.members.end(), entry);
  if (it == st.members.end()) {
    throw UsageError("entry " + std::to_string(entry) + " is not a member of topic " +
                     std::to_string(s));
  }
  st.members.erase(it);
  if (st.members.empty()) {
    index_->erase(s);
    dormant_.push_back(Dormant{s, st.rep});
    topics_.erase(s);
    return;
  }
  if (st.anchor == entry) st.anchor.reset();
}

void TopicIndex::refresh_topic(TopicId s, const MemberInfo& info) {
  TopicState& st = mut(s);
  if (st.anchor) return;
  EntryId best = st.members.front();
  for (EntryId m : st.members) {
    const double a = info.tsi(m), b = info.tsi(best);
    if (a > b || (a == b && (info.last_access(m) > info.last_access(best) ||
                             (info.last_access(m) == info.last_access(best) && m < best)))) {
      best = m;
    }
  }
  set_anchor(st, best, info);
}

void TopicIndex::tp_hit(TopicId s, Step t, const TpConfig& cfg) {
  TopicState& st = mut(s);
  st.tp = tp_on_hit(st.tp, t, cfg);
  tp_history_[s] = st.tp;
}

double TopicIndex::tp_value(TopicId s, Step t, const TpConfig& cfg) const {
  return rac::tp_value(state(s).tp, t, cfg);
}

const TpState& TopicIndex::tp_state(TopicId s) const {
  auto it = tp_history_.find(s);
  if (it == tp_history_.end()) throw UsageError("topic " + std::to_string(s) + " never existed");
  return it->second;
}

}  // namespace rac
