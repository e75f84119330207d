// Relation-aware eviction: Value(q) = TP(topic of q) * TSI(q).
//
// Misses are routed to an existing topic (or open a new one) and admitted;
// hits are absorbed by the matched entry. While the cache holds more than C
// entries, the resident with the smallest value is evicted, which may be the
// entry that was just admitted.

#ifndef RAC_RAC_POLICY_HPP
#define RAC_RAC_POLICY_HPP

#include <functional>
#include <unordered_map>

#include "rac/policy.hpp"
#include "rac/topics.hpp"
#include "rac/tp.hpp"
#include "rac/tsi.hpp"

namespace rac {

struct RacConfig {
  std::size_t capacity = 1;
  double tau = 0.85;        // hit threshold, used only for the topic-local hit scope
  double route_tau = 0.4;   // similarity a miss needs to join an existing topic
  std::optional<double> alpha;  // TP decay; unset means 1/C
  TsiConfig tsi;
  std::size_t shortlist_k = kDefaultShortlist;
  std::optional<double> inherit_tau = 0.4;  // TP inheritance for re-created topics
  bool use_structural_rank = false;
  RankConfig rank;
  bool use_tp = true;   // false pins TP to 1
  bool use_tsi = true;  // false pins TSI to 1
  bool topic_local_hits = false;
  bool protect_incoming = false;  // never pick the entry admitted in the same step
  bool check_evictions = false;  // full-scan audit of every eviction

  void validate() const;
  TpConfig tp() const;
  std::string describe() const;
};

class RacPolicy final : public CachePolicy, public MemberInfo {
 public:
  explicit RacPolicy(RacConfig cfg, DepEventLog* log = nullptr);

  std::string name() const override;
  std::string config() const override { return cfg_.describe(); }
  std::vector<EntryId> on_request(const Request& q, std::optional<EntryId> hit, EntryId fresh,
                                  std::int64_t key) override;
  std::optional<std::vector<EntryId>> hit_scope(const Request& q) override;

  double tsi(EntryId id) const override { return tracker_.tsi(id); }
  Step last_access(EntryId id) const override { return tracker_.last_access(id); }
  const EmbeddingVector& embedding(EntryId id) const override;

  /// Eviction value of a resident entry at t (anchors must be fresh).
  double value(EntryId id, Step t) const;
  TopicId topic_of(EntryId id) const;
  std::size_t size() const { return entries_.size(); }
  std::vector<EntryId> residents() const;
  const TopicIndex& topics() const { return topics_; }
  const DependencyTracker& tracker() const { return tracker_; }
  /// (child, parent) of the link created by the most recent on_request, if any.
  std::optional<std::pair<EntryId, EntryId>> last_link() const { return last_link_; }

  /// Called with (victim value, min surviving value) when check_evictions is on.
  std::function<void(double, double)> on_eviction_audit;

 private:
  struct Entry {
    EmbeddingVector embedding;
    TopicId topic = 0;
  };

  std::vector<ParentCandidate> candidates(TopicId s) const;
  EntryId evict_one(Step t, std::optional<EntryId> keep = std::nullopt);
  void refresh_all();
  std::unordered_map<EntryId, double> rank_multipliers() const;

  RacConfig cfg_;
  TpConfig tp_cfg_;
  DependencyTracker tracker_;
  TopicIndex topics_;
  std::unordered_map<EntryId, Entry> entries_;
  std::optional<std::pair<EntryId, EntryId>> last_link_;
};

}  // namespace rac

#endif  // RAC_RAC_POLICY_HPP
