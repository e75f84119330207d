// Random inputs shared by the unit tests and the acceptance suite.

#ifndef RAC_TESTS_WORKLOADS_HPP
#define RAC_TESTS_WORKLOADS_HPP

#include <map>
#include <memory>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "rac/topics.hpp"
#include "rac/tsi.hpp"

namespace workload {

// Drives a DependencyTracker with random inserts, accesses and evictions over
// clustered embeddings and returns the tracker's own event log.
struct DepRun {
  rac::DepEventLog log;
  std::map<rac::EntryId, rac::DepCounts> counts;
};

inline DepRun random_dep_run(std::mt19937_64& rng, std::size_t max_events, double lambda = 1.0) {
  const std::size_t dim = 6;
  std::vector<rac::EmbeddingVector> centers;
  for (int c = 0; c < 3; ++c) centers.push_back(oracle::random_unit(rng, dim));
  std::uniform_real_distribution<double> sim(0.55, 0.95);

  DepRun run;
  rac::TsiConfig cfg;
  cfg.lambda = lambda;
  cfg.lookback = 1 + rng() % 24;
  rac::DependencyTracker tracker(cfg, &run.log);
  std::map<rac::EntryId, rac::EmbeddingVector> emb;
  std::vector<rac::EntryId> live;
  rac::EntryId next_id = 1;
  rac::Step t = 0;
  const std::size_t cap = 2 + rng() % 10;

  auto candidates = [&]() {
    std::vector<rac::ParentCandidate> out;
    for (rac::EntryId id : live) {
      out.push_back(rac::ParentCandidate{id, tracker.last_access(id), tracker.insert_time(id), &emb.at(id)});
    }
    return out;
  };

  while (run.log.size() < max_events) {
    ++t;
    const auto roll = rng() % 10;
    if (live.empty() || roll < 4) {
      const rac::EntryId id = next_id++;
      emb.emplace(id, oracle::at_similarity(centers[rng() % centers.size()], sim(rng), rng));
      tracker.insert(id, t);
      live.push_back(id);
      tracker.access(id, t, emb.at(id), candidates);
      if (live.size() > cap) {
        const std::size_t v = rng() % live.size();
        tracker.evict(live[v], t);
        live.erase(live.begin() + static_cast<std::ptrdiff_t>(v));
      }
    } else {
      const rac::EntryId id = live[rng() % live.size()];
      tracker.access(id, t, emb.at(id), candidates);
    }
  }
  run.counts = tracker.all_counts();
  return run;
}

// Per-entry signals for a hand-built topic index.
class StubInfo final : public rac::MemberInfo {
 public:
  double tsi(rac::EntryId id) const override { return tsi_.at(id); }
  rac::Step last_access(rac::EntryId id) const override { return last_.at(id); }
  const rac::EmbeddingVector& embedding(rac::EntryId id) const override { return emb_.at(id); }

  void add(rac::EntryId id, rac::EmbeddingVector v, double tsi, rac::Step last) {
    emb_[id] = std::move(v);
    tsi_[id] = tsi;
    last_[id] = last;
  }

 private:
  std::map<rac::EntryId, rac::EmbeddingVector> emb_;
  std::map<rac::EntryId, double> tsi_;
  std::map<rac::EntryId, rac::Step> last_;
};

struct TopicWorld {
  std::unique_ptr<StubInfo> info = std::make_unique<StubInfo>();
  rac::TopicIndex index;
  std::vector<rac::EmbeddingVector> queries;
  std::vector<double> taus;
};

// Up to max_topics topics with 1-4 members each; some members (anchors
// included) are evicted so that part of the index is stale. Rebuilding from
// the same seed yields an identical world.
inline TopicWorld random_topic_world(std::uint64_t seed, std::size_t max_topics, std::size_t n_queries) {
  std::mt19937_64 rng(seed);
  TopicWorld w;
  const std::size_t dim = 8;
  const std::size_t n_topics = 1 + rng() % max_topics;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  rac::EntryId next = 1;
  rac::Step t = 0;
  std::vector<std::pair<rac::TopicId, rac::EntryId>> members;
  for (std::size_t s = 0; s < n_topics; ++s) {
    const auto center = oracle::random_unit(rng, dim);
    const std::size_t m = 1 + rng() % 4;
    rac::TopicId topic = 0;
    for (std::size_t j = 0; j < m; ++j) {
      const rac::EntryId id = next++;
      auto v = j == 0 ? center : oracle::at_similarity(center, 0.6 + 0.4 * unit(rng), rng);
      // Small integer TSI values make ties between members common.
      w.info->add(id, v, static_cast<double>(1 + rng() % 4), ++t);
      if (j == 0) {
        topic = w.index.create_topic(v, id, t, rac::TpConfig{0.1});
      } else {
        w.index.on_insert_member(topic, id, *w.info);
      }
      members.emplace_back(topic, id);
    }
  }
  for (const auto& [topic, id] : members) {
    const auto& st = w.index.state(topic);
    if (st.members.size() > 1 && unit(rng) < 0.3) w.index.on_evict_member(topic, id);
  }
  for (std::size_t i = 0; i < n_queries; ++i) {
    w.queries.push_back(oracle::random_unit(rng, dim));
    w.taus.push_back(-0.2 + 1.1 * unit(rng));
  }
  return w;
}

// Exhaustive gated argmax over every topic, each refreshed first; ties go to
// the smaller id.
inline std::optional<rac::TopicId> route_exhaustive(TopicWorld& w, const rac::EmbeddingVector& q, double tau) {
  std::vector<rac::TopicId> ids;
  for (const auto& [id, st] : w.index.topics()) ids.push_back(id);
  std::optional<rac::TopicId> best;
  double best_sim = 0.0;
  for (rac::TopicId id : ids) {
    w.index.refresh_topic(id, *w.info);
    const auto& rep = w.index.state(id).rep;
    double sim = 0.0;
    for (std::size_t i = 0; i < q.dim(); ++i) sim += q[i] * rep[i];
    if (sim >= tau && (!best || sim > best_sim)) {
      best = id;
      best_sim = sim;
    }
  }
  return best;
}

// Random forest in insertion order: each node picks at most one earlier parent.
inline rac::DependencyDag random_dag(std::mt19937_64& rng, std::size_t max_nodes) {
  rac::DependencyDag dag;
  const std::size_t n = 1 + rng() % max_nodes;
  for (std::size_t i = 0; i < n; ++i) {
    const rac::EntryId id = 100 + 7 * i + rng() % 5;
    dag.nodes.push_back(id);
    dag.freq[id] = 1 + rng() % 5;
    if (i > 0 && rng() % 4 != 0) dag.edges.emplace_back(dag.nodes[rng() % i], id);
  }
  return dag;
}

}  // namespace workload

#endif  // RAC_TESTS_WORKLOADS_HPP
