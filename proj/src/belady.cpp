#include "rac/belady.hpp"

namespace rac {

namespace {

std::vector<std::int64_t> trace_keys(const Trace& trace) {
  std::vector<std::int64_t> keys;
  keys.reserve(trace.size());
  for (const Request& r : trace.requests) {
    if (!r.exact_key) throw UsageError("belady requires exact keys (request " + std::to_string(r.id) + ")");
    keys.push_back(*r.exact_key);
  }
  return keys;
}

}  // namespace

std::vector<std::size_t> next_use(std::span<const std::int64_t> keys) {
  std::vector<std::size_t> next(keys.size(), keys.size());
  std::unordered_map<std::int64_t, std::size_t> seen;
  for (std::size_t i = keys.size(); i-- > 0;) {
    auto it = seen.find(keys[i]);
    if (it != seen.end()) next[i] = it->second;
    seen[keys[i]] = i;
  }
  return next;
}

BeladyResult belady_min(std::span<const std::int64_t> keys, std::size_t capacity, bool allow_bypass) {
  if (capacity == 0) throw UsageError("capacity must be >= 1");
  const auto next = next_use(keys);
  BeladyResult out;
  out.steps.reserve(keys.size());
  std::unordered_map<std::int64_t, std::size_t> resident;  // key -> next use
  std::set<std::pair<std::size_t, std::int64_t>> order;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    BeladyStep step;
    const std::int64_t k = keys[i];
    auto it = resident.find(k);
    if (it != resident.end()) {
      step.hit = true;
      ++out.hits;
      order.erase({it->second, k});
      it->second = next[i];
      order.insert({next[i], k});
      out.steps.push_back(step);
      continue;
    }
    if (resident.size() >= capacity) {
      auto far = std::prev(order.end());
      if (allow_bypass && next[i] >= far->first) {
        out.steps.push_back(step);
        continue;
      }
      step.victim = far->second;
      resident.erase(far->second);
      order.erase(far);
    }
    step.admitted = true;
    resident[k] = next[i];
    order.insert({next[i], k});
    out.steps.push_back(step);
  }
  return out;
}

BeladyResult belady_min(const Trace& trace, std::size_t capacity) {
  return belady_min(trace_keys(trace), capacity, false);
}

BeladyResult belady_min_bypass(const Trace& trace, std::size_t capacity) {
  return belady_min(trace_keys(trace), capacity, true);
}

BeladyPolicy::BeladyPolicy(const Trace& trace, std::size_t capacity)
    : capacity_(capacity), next_(next_use(trace_keys(trace))) {
  if (capacity_ == 0) throw UsageError("capacity must be >= 1");
}

std::vector<EntryId> BeladyPolicy::on_request(const Request& q, std::optional<EntryId> hit,
                                              EntryId fresh, std::int64_t) {
  const std::size_t pos = q.t - 1;
  if (pos >= next_.size()) throw UsageError("belady: request beyond the trace it was built for");
  std::vector<EntryId> evicted;
  if (hit) {
    by_next_.erase({next_of_.at(*hit), *hit});
    next_of_[*hit] = next_[pos];
    by_next_.insert({next_[pos], *hit});
    return evicted;
  }
  if (next_of_.size() >= capacity_) {
    auto far = std::prev(by_next_.end());
    evicted.push_back(far->second);
    next_of_.erase(far->second);
    by_next_.erase(far);
  }
  next_of_[fresh] = next_[pos];
  by_next_.insert({next_[pos], fresh});
  return evicted;
}

}  // namespace rac
