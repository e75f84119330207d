// Replacement-policy interfaces.
//
// `Policy` is the id-level contract used by the classic baselines: the
// harness decides hit vs miss, and the policy only tracks metadata and names
// victims. `CachePolicy` is what the simulator drives; it sees the full
// request so that relation-aware policies can use embeddings.

#ifndef RAC_POLICY_HPP
#define RAC_POLICY_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "rac/core.hpp"

namespace rac {

// One access as seen by an id-level policy. `key` identifies the underlying
// item across evictions (exact key, or a hash of the embedding) so that ghost
// lists and frequency sketches can recognise returning items.
struct Access {
  EntryId id = 0;
  std::int64_t key = 0;
  Step t = 0;
};

class Policy {
 public:
  virtual ~Policy() = default;

  virtual std::string name() const = 0;
  /// Effective parameters as `k=v` pairs separated by ';'.
  virtual std::string config() const = 0;

  virtual void on_hit(const Access& a) = 0;
  virtual void on_miss_insert(const Access& a) = 0;
  /// Called when the cache is full and `incoming` is about to be inserted.
  /// Removes the victim from the policy's metadata and returns it. Throws
  /// UsageError when nothing is resident.
  virtual EntryId choose_victim(const Access& incoming) = 0;
  /// Entries that stop being valid at t (e.g. TTL expiry), removed from metadata.
  virtual std::vector<EntryId> expire(Step /*t*/) { return {}; }
  virtual std::size_t size() const = 0;
};

/// Applies one harness verdict to an id-level policy with capacity `capacity`.
/// Returns the victim when a miss arrives at a full cache.
std::optional<EntryId> policy_step(Policy& policy, const Access& a, bool hit, std::size_t capacity);

class CachePolicy {
 public:
  virtual ~CachePolicy() = default;
  virtual std::string name() const = 0;
  virtual std::string config() const = 0;

  /// `hit` is the resident entry matched by the harness, if any; on a miss the
  /// policy admits `fresh`. Returns the entries evicted by this step.
  virtual std::vector<EntryId> on_request(const Request& q, std::optional<EntryId> hit,
                                          EntryId fresh, std::int64_t key) = 0;
  virtual std::vector<EntryId> expire(Step /*t*/) { return {}; }
  /// Restricts hit detection to a subset of residents; nullopt = all residents.
  virtual std::optional<std::vector<EntryId>> hit_scope(const Request& /*q*/) { return std::nullopt; }
};

/// Drives an id-level policy through the CachePolicy interface.
class BaselinePolicy final : public CachePolicy {
 public:
  BaselinePolicy(std::unique_ptr<Policy> policy, std::size_t capacity);

  std::string name() const override { return policy_->name(); }
  std::string config() const override;
  std::vector<EntryId> on_request(const Request& q, std::optional<EntryId> hit, EntryId fresh,
                                  std::int64_t key) override;
  std::vector<EntryId> expire(Step t) override;

  Policy& inner() { return *policy_; }

 private:
  std::unique_ptr<Policy> policy_;
  std::size_t capacity_;
  std::unordered_map<EntryId, std::int64_t> keys_;
};

}  // namespace rac

#endif  // RAC_POLICY_HPP
