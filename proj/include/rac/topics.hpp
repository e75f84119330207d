// Topic routing over a representative index. Every topic's representative is
// the embedding of one resident member (its anchor, the TSI-max member at the
// time it was chosen). Evicting the anchor leaves the topic stale until the
// next time it is touched, when the anchor is recomputed.

#ifndef RAC_TOPICS_HPP
#define RAC_TOPICS_HPP

#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "rac/core.hpp"
#include "rac/tp.hpp"

namespace rac {

inline constexpr std::size_t kDefaultShortlist = 8;

/// Per-entry signals the index needs but does not own.
class MemberInfo {
 public:
  virtual ~MemberInfo() = default;
  virtual double tsi(EntryId id) const = 0;
  virtual Step last_access(EntryId id) const = 0;
  virtual const EmbeddingVector& embedding(EntryId id) const = 0;
};

/// Nearest-representative lookup. The exact scan below is the reference;
/// an approximate index can replace it behind this interface.
class RepresentativeIndex {
 public:
  virtual ~RepresentativeIndex() = default;
  virtual void upsert(TopicId id, const EmbeddingVector& rep) = 0;
  virtual void erase(TopicId id) = 0;
  /// Up to k topics ordered by decreasing similarity, ties by smaller id.
  virtual std::vector<TopicId> shortlist(const EmbeddingVector& q, std::size_t k) const = 0;
  virtual std::size_t size() const = 0;
};

class ExactScanIndex final : public RepresentativeIndex {
 public:
  void upsert(TopicId id, const EmbeddingVector& rep) override;
  void erase(TopicId id) override;
  std::vector<TopicId> shortlist(const EmbeddingVector& q, std::size_t k) const override;
  std::size_t size() const override { return reps_.size(); }

 private:
  std::map<TopicId, EmbeddingVector> reps_;
};

struct TopicState {
  TopicId id = 0;
  std::vector<EntryId> members;  // insertion order
  EmbeddingVector rep;
  std::optional<EntryId> anchor;  // unset while stale
  TpState tp;
};

class TopicIndex {
 public:
  explicit TopicIndex(std::unique_ptr<RepresentativeIndex> index = std::make_unique<ExactScanIndex>());

  /// Gated routing over the k nearest representatives. Stale topics that make
  /// the shortlist are refreshed before their similarity is compared; ties go
  /// to the smaller topic id.
  std::optional<TopicId> route_topic(const EmbeddingVector& q, double tau, std::size_t k,
                                     const MemberInfo& info);

  /// New topic anchored at `entry`, with TP already credited for the hit at t.
  /// When a deleted topic's last representative is within `inherit_tau` of q,
  /// the new topic inherits that topic's TP history (ids are never reused).
  TopicId create_topic(const EmbeddingVector& q, EntryId entry, Step t, const TpConfig& tp_cfg,
                       std::optional<double> inherit_tau = std::nullopt);

  /// An anchorless topic adopts the newcomer as anchor; otherwise the newcomer
  /// replaces the anchor only with strictly higher TSI.
  void on_insert_member(TopicId s, EntryId entry, const MemberInfo& info);
  void on_evict_member(TopicId s, EntryId entry);
  void refresh_topic(TopicId s, const MemberInfo& info);

  void tp_hit(TopicId s, Step t, const TpConfig& cfg);
  double tp_value(TopicId s, Step t, const TpConfig& cfg) const;
  /// TP scalars survive topic deletion.
  const TpState& tp_state(TopicId s) const;

  bool contains(TopicId s) const { return topics_.contains(s); }
  bool stale(TopicId s) const { return !state(s).anchor; }
  const TopicState& state(TopicId s) const;
  const std::map<TopicId, TopicState>& topics() const { return topics_; }
  std::size_t topic_count() const { return topics_.size(); }
  TopicId next_topic_id() const { return next_id_; }

 private:
  TopicState& mut(TopicId s);
  void set_anchor(TopicState& st, EntryId entry, const MemberInfo& info);

  struct Dormant {
    TopicId id;
    EmbeddingVector rep;
  };

  std::unique_ptr<RepresentativeIndex> index_;
  std::map<TopicId, TopicState> topics_;
  std::map<TopicId, TpState> tp_history_;
  std::vector<Dormant> dormant_;
  TopicId next_id_ = 1;
};

}  // namespace rac

#endif  // RAC_TOPICS_HPP
