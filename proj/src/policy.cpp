#include "rac/policy.hpp"

namespace rac {

std::optional<EntryId> policy_step(Policy& policy, const Access& a, bool hit, std::size_t capacity) {
  if (hit) {
    policy.on_hit(a);
    return std::nullopt;
  }
  std::optional<EntryId> victim;
  if (policy.size() >= capacity) victim = policy.choose_victim(a);
  policy.on_miss_insert(a);
  return victim;
}

BaselinePolicy::BaselinePolicy(std::unique_ptr<Policy> policy, std::size_t capacity)
    : policy_(std::move(policy)), capacity_(capacity) {
  if (capacity_ == 0) throw UsageError("capacity must be >= 1");
}

std::string BaselinePolicy::config() const {
  std::string c = "capacity=" + std::to_string(capacity_);
  const std::string inner = policy_->config();
  if (!inner.empty()) c += ";" + inner;
  return c;
}

std::vector<EntryId> BaselinePolicy::on_request(const Request& q, std::optional<EntryId> hit,
                                                EntryId fresh, std::int64_t key) {
  std::vector<EntryId> evicted;
  if (hit) {
    policy_step(*policy_, Access{*hit, keys_.at(*hit), q.t}, true, capacity_);
    return evicted;
  }
  if (auto v = policy_step(*policy_, Access{fresh, key, q.t}, false, capacity_)) {
    keys_.erase(*v);
    evicted.push_back(*v);
  }
  keys_[fresh] = key;
  return evicted;
}

std::vector<EntryId> BaselinePolicy::expire(Step t) {
  auto gone = policy_->expire(t);
  for (EntryId id : gone) keys_.erase(id);
  return gone;
}

}  // namespace rac
