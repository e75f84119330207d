// Comparison roster: FIFO, LRU, CLOCK, TTL, 2Q, ARC, TinyLFU, S3-FIFO, SIEVE,
// LHD and LeCaR behind the id-level Policy interface.

#ifndef RAC_BASELINES_HPP
#define RAC_BASELINES_HPP

#include <array>
#include <deque>
#include <list>
#include <map>
#include <random>
#include <set>
#include <unordered_map>
#include <vector>

#include "rac/policy.hpp"

namespace rac {

/// Ordered set of ids with O(1) touch/remove; front is the most recent.
class RecencyList {
 public:
  void push_front(EntryId id);
  void touch(EntryId id);  // move to front
  bool erase(EntryId id);
  bool contains(EntryId id) const { return pos_.contains(id); }
  EntryId back() const { return order_.back(); }
  EntryId pop_back();
  bool empty() const { return order_.empty(); }
  std::size_t size() const { return order_.size(); }

 private:
  std::list<EntryId> order_;
  std::unordered_map<EntryId, std::list<EntryId>::iterator> pos_;
};

/// Bounded FIFO of item keys remembered after eviction.
class GhostList {
 public:
  explicit GhostList(std::size_t cap) : cap_(cap) {}
  void push(std::int64_t key);
  bool erase(std::int64_t key);
  bool contains(std::int64_t key) const { return pos_.contains(key); }
  std::int64_t pop_oldest();
  std::size_t size() const { return order_.size(); }
  std::size_t capacity() const { return cap_; }
  void set_capacity(std::size_t cap);

 private:
  std::size_t cap_;
  std::list<std::int64_t> order_;  // front = newest
  std::unordered_map<std::int64_t, std::list<std::int64_t>::iterator> pos_;
};

class FifoPolicy final : public Policy {
 public:
  std::string name() const override { return "fifo"; }
  std::string config() const override { return ""; }
  void on_hit(const Access&) override {}
  void on_miss_insert(const Access& a) override { queue_.push_front(a.id); }
  EntryId choose_victim(const Access&) override;
  std::size_t size() const override { return queue_.size(); }

 private:
  RecencyList queue_;
};

class LruPolicy final : public Policy {
 public:
  std::string name() const override { return "lru"; }
  std::string config() const override { return ""; }
  void on_hit(const Access& a) override { list_.touch(a.id); }
  void on_miss_insert(const Access& a) override { list_.push_front(a.id); }
  EntryId choose_victim(const Access&) override;
  std::size_t size() const override { return list_.size(); }

 private:
  RecencyList list_;
};

/// One-bit second chance.
class ClockPolicy final : public Policy {
 public:
  std::string name() const override { return "clock"; }
  std::string config() const override { return "bits=1"; }
  void on_hit(const Access& a) override;
  void on_miss_insert(const Access& a) override;
  EntryId choose_victim(const Access&) override;
  std::size_t size() const override { return slot_of_.size(); }

 private:
  struct Slot {
    EntryId id = 0;
    bool ref = false;
    bool used = false;
  };
  std::vector<Slot> slots_;
  std::unordered_map<EntryId, std::size_t> slot_of_;
  std::vector<std::size_t> free_;
  std::size_t hand_ = 0;
};

/// Fixed lifetime from insertion; hits do not extend it.
class TtlPolicy final : public Policy {
 public:
  explicit TtlPolicy(Step lifetime);
  std::string name() const override { return "ttl"; }
  std::string config() const override;
  void on_hit(const Access&) override {}
  void on_miss_insert(const Access& a) override;
  EntryId choose_victim(const Access&) override;
  std::vector<EntryId> expire(Step t) override;
  std::size_t size() const override { return live_.size(); }

 private:
  Step lifetime_;
  std::deque<std::pair<Step, EntryId>> by_expiry_;  // insertion order == expiry order
  std::unordered_map<EntryId, Step> live_;
};

/// Full 2Q: A1in FIFO, A1out ghost, Am LRU.
class TwoQPolicy final : public Policy {
 public:
  explicit TwoQPolicy(std::size_t capacity);
  std::string name() const override { return "2q"; }
  std::string config() const override;
  void on_hit(const Access& a) override;
  void on_miss_insert(const Access& a) override;
  EntryId choose_victim(const Access& incoming) override;
  std::size_t size() const override { return a1in_.size() + am_.size(); }

 private:
  std::size_t kin_;
  RecencyList a1in_;
  RecencyList am_;
  GhostList a1out_;
  std::unordered_map<EntryId, std::int64_t> key_of_;
};

class ArcPolicy final : public Policy {
 public:
  explicit ArcPolicy(std::size_t capacity);
  std::string name() const override { return "arc"; }
  std::string config() const override;
  void on_hit(const Access& a) override;
  void on_miss_insert(const Access& a) override;
  EntryId choose_victim(const Access& incoming) override;
  std::size_t size() const override { return t1_.size() + t2_.size(); }
  double target_t1() const { return p_; }

 private:
  EntryId replace(bool incoming_in_b2);

  std::size_t c_;
  double p_ = 0.0;
  RecencyList t1_, t2_;
  GhostList b1_, b2_;
  std::unordered_map<EntryId, std::int64_t> key_of_;
};

/// Count-min sketch with 4-bit saturating counters and periodic halving.
class CountMinSketch {
 public:
  CountMinSketch(std::size_t width, std::size_t sample_size);
  void increment(std::int64_t key);
  std::uint32_t estimate(std::int64_t key) const;

 private:
  std::size_t index(std::size_t row, std::int64_t key) const;
  std::size_t width_;
  std::size_t sample_size_;
  std::size_t additions_ = 0;
  std::array<std::vector<std::uint8_t>, 4> rows_;
};

/// W-TinyLFU: LRU window in front of a segmented-LRU main space, with a
/// frequency-sketch duel deciding admission from the window into main.
class TinyLfuPolicy final : public Policy {
 public:
  explicit TinyLfuPolicy(std::size_t capacity);
  std::string name() const override { return "tinylfu"; }
  std::string config() const override;
  void on_hit(const Access& a) override;
  void on_miss_insert(const Access& a) override;
  EntryId choose_victim(const Access& incoming) override;
  std::size_t size() const override { return window_.size() + probation_.size() + protected_.size(); }

 private:
  void record(const Access& a);
  EntryId main_victim() const;

  std::size_t window_cap_, main_cap_, protected_cap_;
  CountMinSketch sketch_;
  RecencyList window_, probation_, protected_;
  std::unordered_map<EntryId, std::int64_t> key_of_;
  Step recorded_t_ = 0;
};

class S3FifoPolicy final : public Policy {
 public:
  explicit S3FifoPolicy(std::size_t capacity);
  std::string name() const override { return "s3fifo"; }
  std::string config() const override;
  void on_hit(const Access& a) override;
  void on_miss_insert(const Access& a) override;
  EntryId choose_victim(const Access& incoming) override;
  std::size_t size() const override { return small_.size() + main_.size(); }

 private:
  std::size_t small_cap_;
  RecencyList small_, main_;  // front = newest
  GhostList ghost_;
  std::unordered_map<EntryId, std::pair<std::int64_t, int>> meta_;  // key, freq (0..3)
};

class SievePolicy final : public Policy {
 public:
  std::string name() const override { return "sieve"; }
  std::string config() const override { return "hands=1"; }
  void on_hit(const Access& a) override;
  void on_miss_insert(const Access& a) override;
  EntryId choose_victim(const Access&) override;
  std::size_t size() const override { return pos_.size(); }

 private:
  struct Node {
    EntryId id;
    bool visited;
  };
  std::list<Node> queue_;  // front = newest (head), back = oldest (tail)
  std::unordered_map<EntryId, std::list<Node>::iterator> pos_;
  std::optional<std::list<Node>::iterator> hand_;
};

/// Hit-density ranking over 16 coarsened age classes, re-ranked every
/// `capacity` accesses with exponentially decayed statistics.
class LhdPolicy final : public Policy {
 public:
  static constexpr std::size_t kClasses = 16;

  explicit LhdPolicy(std::size_t capacity);
  std::string name() const override { return "lhd"; }
  std::string config() const override;
  void on_hit(const Access& a) override;
  void on_miss_insert(const Access& a) override;
  EntryId choose_victim(const Access& incoming) override;
  std::size_t size() const override { return last_.size(); }

 private:
  std::size_t age_class(Step age) const;
  void tick();
  void rerank();

  std::size_t capacity_;
  Step granularity_;
  std::array<double, kClasses> hits_{}, evictions_{}, density_{};
  std::unordered_map<EntryId, Step> last_;
  std::size_t since_rerank_ = 0;
  bool ranked_ = false;
};

/// Regret-weighted mix of LRU and LFU experts.
class LeCarPolicy final : public Policy {
 public:
  LeCarPolicy(std::size_t capacity, std::uint64_t seed, double learning_rate = 0.45);
  std::string name() const override { return "lecar"; }
  std::string config() const override;
  void on_hit(const Access& a) override;
  void on_miss_insert(const Access& a) override;
  EntryId choose_victim(const Access& incoming) override;
  std::size_t size() const override { return meta_.size(); }
  double lru_weight() const { return w_lru_; }

 private:
  struct Meta {
    std::int64_t key;
    std::uint64_t freq;
    Step last;
  };
  struct History {
    std::list<std::pair<std::int64_t, Step>> order;  // front = newest
    std::unordered_map<std::int64_t, std::list<std::pair<std::int64_t, Step>>::iterator> pos;
  };
  void learn(const Access& a);
  void remember(History& h, std::int64_t key, Step t);
  double uniform();

  std::size_t capacity_;
  double learning_rate_, discount_;
  double w_lru_ = 0.5;
  std::mt19937_64 rng_;
  RecencyList lru_;
  std::set<std::tuple<std::uint64_t, Step, EntryId>> lfu_;
  std::unordered_map<EntryId, Meta> meta_;
  History h_lru_, h_lfu_;
  Step learned_t_ = 0;
};

/// Names accepted by make_policy / the CLI (excluding "rac" variants and "belady").
const std::vector<std::string>& baseline_names();

struct BaselineParams {
  std::size_t capacity = 1;
  std::uint64_t seed = 1;
};

/// Throws UsageError for unknown names.
std::unique_ptr<Policy> make_baseline(const std::string& name, const BaselineParams& params);

}  // namespace rac

#endif  // RAC_BASELINES_HPP
