// Topic structural importance: TSI(q) = freq(q) + lambda * dep(q), where dep
// accumulates the access mass of entries linked to q as their dependency
// parent. Each entry has at most one parent, chosen among recent resident
// predecessors by score(k, t) = sim(q_k, q_t) / (t - k).

#ifndef RAC_TSI_HPP
#define RAC_TSI_HPP

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "rac/core.hpp"

namespace rac {

struct TsiConfig {
  double lambda = 1.0;
  Step lookback = 64;     // T
  double tau_edge = 0.6;  // minimum similarity for a parent candidate

  void validate() const;
};

struct ParentCandidate {
  EntryId id = 0;
  Step k = 0;  // most recent access of the candidate
  Step insert_time = 0;
  const EmbeddingVector* embedding = nullptr;
};

/// Returns the best-scoring candidate with 1 <= t - k <= lookback and
/// sim >= tau_edge. Ties go to the larger k, then the smaller id.
std::optional<EntryId> detect_parent(const EmbeddingVector& q,
                                     std::span<const ParentCandidate> residents, Step t,
                                     const TsiConfig& cfg);

// ---------------------------------------------------------------------------
// Event log: `ACCESS id t | LINK child parent t | INSERT id t | EVICT id t`

enum class DepEventKind { kAccess, kLink, kInsert, kEvict };

struct DepEvent {
  DepEventKind kind = DepEventKind::kAccess;
  EntryId id = 0;      // accessed / inserted / evicted entry, or the child of a link
  EntryId parent = 0;  // LINK only
  Step t = 0;

  bool operator==(const DepEvent&) const = default;
};

using DepEventLog = std::vector<DepEvent>;

std::string format_event(const DepEvent& e);
/// Throws ValidationError on a malformed line.
DepEvent parse_event(const std::string& line);
void write_event_log(const DepEventLog& log, std::ostream& out);
DepEventLog read_event_log(std::istream& in);

struct DepCounts {
  std::uint64_t freq = 0;
  std::uint64_t dep = 0;

  bool operator==(const DepCounts&) const = default;
};

/// Recomputes freq and dep for every entry that ever appeared in the log by
/// replaying the constant-time update rules from scratch. Throws
/// ValidationError on inconsistent logs (access of a non-resident entry,
/// duplicate insert, second link for one child, ...).
std::map<EntryId, DepCounts> replay_dep_oracle(const DepEventLog& log);

// ---------------------------------------------------------------------------

struct TsiUpdate {
  double tsi = 0.0;
  std::optional<EntryId> parent;  // resident parent whose dep changed
  std::optional<double> parent_tsi;
  bool new_link = false;
};

/// Incremental freq/dep bookkeeping for resident entries. Evicted entries keep
/// their final counters in a retired table so that runs can be audited.
class DependencyTracker {
 public:
  using CandidateSource = std::function<std::vector<ParentCandidate>()>;

  explicit DependencyTracker(TsiConfig cfg, DepEventLog* log = nullptr);

  void insert(EntryId id, Step t);
  /// One access to a resident entry. `candidates` is consulted only when the
  /// entry still needs a parent; candidates inserted at or after the entry are
  /// ignored so that links always point backwards in time.
  TsiUpdate access(EntryId id, Step t, const EmbeddingVector& q, const CandidateSource& candidates);
  void evict(EntryId id, Step t);

  bool resident(EntryId id) const { return live_.contains(id); }
  std::size_t size() const { return live_.size(); }
  double tsi(EntryId id) const;
  std::uint64_t freq(EntryId id) const;
  std::uint64_t dep(EntryId id) const;
  std::optional<EntryId> parent(EntryId id) const;
  Step insert_time(EntryId id) const;
  Step last_access(EntryId id) const;
  const TsiConfig& config() const { return cfg_; }

  /// freq/dep of every entry seen so far, resident or retired.
  std::map<EntryId, DepCounts> all_counts() const;

 private:
  struct Stats {
    std::uint64_t freq = 0;
    std::uint64_t dep = 0;
    std::optional<EntryId> parent;
    bool searching = true;  // parent not yet found and still eligible for detection
    Step insert_time = 0;
    Step last_access = 0;
  };

  const Stats& at(EntryId id) const;
  void record(DepEventKind kind, EntryId id, Step t, EntryId parent = 0);

  TsiConfig cfg_;
  DepEventLog* log_;
  std::unordered_map<EntryId, Stats> live_;
  std::unordered_map<EntryId, DepCounts> retired_;
};

// ---------------------------------------------------------------------------

/// Prerequisite graph of one topic. Nodes are listed in insertion order and
/// every edge points from an earlier node (the parent) to a later one.
struct DependencyDag {
  std::vector<EntryId> nodes;
  std::vector<std::pair<EntryId, EntryId>> edges;  // (parent, child)
  std::unordered_map<EntryId, std::uint64_t> freq;

  /// Throws ValidationError unless edges are forward in node order and every
  /// node has at most one parent.
  void validate() const;
  std::vector<EntryId> dependents(EntryId anchor) const;
};

/// Number of requests in `window` addressed to one-hop dependents of `anchor`.
/// Throws UsageError if the anchor is not a node of the dag.
std::size_t delta_t(std::span<const EntryId> window, EntryId anchor, const DependencyDag& dag);

struct RankConfig {
  double beta = 0.85;
  double tol = 1e-12;
  std::size_t max_iter = 1000;

  void validate() const;
};

class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(double residual, std::size_t iterations);
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Stationary distribution of the uniform-restart random walk on the reversed
/// dependency edges (dependents pass importance to prerequisites). Scores are
/// returned in dag.nodes order and sum to 1.
std::vector<double> structural_rank(const DependencyDag& dag, const RankConfig& cfg);

}  // namespace rac

#endif  // RAC_TSI_HPP
