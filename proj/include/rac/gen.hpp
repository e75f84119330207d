// Synthetic topic-episode workloads.
//
// Each topic owns a centroid and a pool of session templates. A template is a
// short ordered list of query vectors whose first query is one of the topic's
// shared context anchors; later queries hang off earlier ones in a small DAG.
// The trace is a sequence of complete episodes: fresh templates drawn by Zipf
// topic popularity, plus exact replays of earlier episodes whose placement
// controls how many reuses are longer than capacity_ref.

#ifndef RAC_GEN_HPP
#define RAC_GEN_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

#include "rac/core.hpp"

namespace rac {

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GenParams {
  std::size_t n_topics = 120;
  std::size_t sessions_per_topic = 40;
  std::size_t trace_len = 10000;
  double zipf_gamma = 1.0;
  double long_reuse_target = 0.5;
  std::size_t capacity_ref = 0;  // 0 means trace_len / 10
  std::size_t dim = kDefaultDim;
  double sigma = 0.105;       // per-component noise scale, applied per DAG hop
  double root_sigma = 0.072;  // spread of a topic's context roots around its centroid
  std::size_t anchors_per_topic = 3;   // context roots per topic
  std::size_t prereqs_per_anchor = 4;  // shared first-level follow-ups per root
  double share_prob = 0.3;
  double repeat_fraction = 0.35;
  std::size_t min_session = 4;
  std::size_t max_session = 12;
  double centroid_max_sim = 0.5;
  std::uint64_t seed = 1;

  void validate() const;
  std::size_t effective_capacity_ref() const;
  std::string describe() const;
};

Trace generate_trace(const GenParams& params);

/// Fraction of reuse events (by exact key, or by identical embedding when keys
/// are absent) whose distance to the previous occurrence exceeds capacity_ref.
double measure_long_reuse(const Trace& trace, std::size_t capacity_ref);
double measure_long_reuse(std::span<const std::int64_t> keys, std::size_t capacity_ref);

struct SeparationReport {
  double intra_p1 = 0.0;
  double intra_p99 = 0.0;
  double cross_p99 = 0.0;
  double link_p50 = 0.0;  // median parent-child similarity
  double route_accuracy = 0.0;  // share of queries whose own topic wins the gated argmax
  double route_tau = 0.0;
  double tau = 0.0;
  bool pass = false;
  std::string message;
};

/// Samples sessions and compares each query with every topic's context roots.
/// intra_p1 is the 1st percentile of the best own-topic root similarity,
/// cross_p99 the 99th percentile of the best foreign one, intra_p99 the 99th
/// percentile over distinct-key pairs inside a session. Passes when at least
/// 95% of queries clear route_tau on an own-topic root that beats every
/// foreign root, and intra_p99 < tau.
SeparationReport validate_separation(const GenParams& params, double tau = 0.85, double route_tau = 0.4,
                                     std::size_t samples = 400);

/// A 24-request two-topic trace: six queries on
/// topic a, six on topic b, then follow-ups on a and on b. Only a0 and b2 are
/// asked again verbatim; the other follow-ups are new queries that depend on
/// them. Carries exact keys.
Trace make_two_topic_trace();

/// Stable 64-bit key for an embedding, for traces without exact keys.
std::int64_t embedding_key(const EmbeddingVector& v);

}  // namespace rac

#endif  // RAC_GEN_HPP
