// Offline optimum under exact-key hits.
//
// belady_min is demand MIN: every miss is admitted and, when the cache is
// full, the resident whose next use is farthest away is evicted. The bypass
// variant may also decline to admit the incoming item, which is the optimum
// for policies that can evict the entry they just inserted.

#ifndef RAC_BELADY_HPP
#define RAC_BELADY_HPP

#include <set>
#include <unordered_map>

#include "rac/policy.hpp"

namespace rac {

struct BeladyStep {
  bool hit = false;
  bool admitted = false;
  std::optional<std::int64_t> victim;  // evicted key
};

struct BeladyResult {
  std::uint64_t hits = 0;
  std::vector<BeladyStep> steps;
};

/// Throws UsageError when a request has no exact key or capacity is 0.
BeladyResult belady_min(const Trace& trace, std::size_t capacity);
BeladyResult belady_min_bypass(const Trace& trace, std::size_t capacity);
BeladyResult belady_min(std::span<const std::int64_t> keys, std::size_t capacity, bool allow_bypass = false);

/// For each position, the next position holding the same key (keys.size() if none).
std::vector<std::size_t> next_use(std::span<const std::int64_t> keys);

/// Demand MIN driven by the simulator. Eviction looks up each resident's next
/// use in the trace, so the policy must be built from the trace it will see.
class BeladyPolicy final : public CachePolicy {
 public:
  BeladyPolicy(const Trace& trace, std::size_t capacity);

  std::string name() const override { return "belady"; }
  std::string config() const override { return "capacity=" + std::to_string(capacity_) + ";admission=demand"; }
  std::vector<EntryId> on_request(const Request& q, std::optional<EntryId> hit, EntryId fresh,
                                  std::int64_t key) override;

 private:
  std::size_t capacity_;
  std::vector<std::size_t> next_;
  std::unordered_map<EntryId, std::size_t> next_of_;
  std::set<std::pair<std::size_t, EntryId>> by_next_;
};

}  // namespace rac

#endif  // RAC_BELADY_HPP
