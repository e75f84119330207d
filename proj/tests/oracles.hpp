// Reference implementations used only by the tests. Each one recomputes a
// quantity from its definition, with no shared code beyond the data types.

#ifndef RAC_TESTS_ORACLES_HPP
#define RAC_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "rac/core.hpp"
#include "rac/tsi.hpp"

namespace oracle {

inline rac::EmbeddingVector random_unit(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(dim);
  for (double& x : v) x = n(rng);
  return rac::EmbeddingVector::normalized(std::move(v));
}

// Unit vector at similarity `sim` to the unit vector `base`.
inline rac::EmbeddingVector at_similarity(const rac::EmbeddingVector& base, double sim, std::mt19937_64& rng) {
  const std::size_t d = base.dim();
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> g(d);
  double dot = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    g[i] = n(rng);
    dot += g[i] * base[i];
  }
  double norm = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    g[i] -= dot * base[i];
    norm += g[i] * g[i];
  }
  norm = std::sqrt(norm);
  const double off = std::sqrt(std::max(0.0, 1.0 - sim * sim));
  std::vector<double> v(d);
  for (std::size_t i = 0; i < d; ++i) v[i] = sim * base[i] + off * g[i] / norm;
  return rac::EmbeddingVector::normalized(std::move(v));
}

// Sum over hit times i <= t of (1/2)^(alpha * (t - i)).
inline double tp_direct(const std::vector<rac::Step>& hits, rac::Step t, double alpha) {
  double s = 0.0;
  for (rac::Step i : hits) {
    if (i <= t) s += std::pow(0.5, alpha * static_cast<double>(t - i));
  }
  return s;
}

// freq and dep recomputed per entry by rescanning the whole log. Ids are
// never reinserted. dep of p sums, over every child c linked to p while p is
// resident, all accesses of c up to the link plus each later access of c
// that happens before p is evicted.
inline std::map<rac::EntryId, rac::DepCounts> dep_rescan(const rac::DepEventLog& log) {
  using rac::DepEventKind;
  std::map<rac::EntryId, rac::DepCounts> out;
  std::map<rac::EntryId, std::size_t> evicted_at;
  for (std::size_t k = 0; k < log.size(); ++k) {
    const auto& e = log[k];
    if (e.kind == DepEventKind::kInsert) out[e.id];
    if (e.kind == DepEventKind::kAccess) ++out[e.id].freq;
    if (e.kind == DepEventKind::kEvict) evicted_at[e.id] = k;
  }
  auto resident_at = [&](rac::EntryId id, std::size_t pos) {
    auto it = evicted_at.find(id);
    return it == evicted_at.end() || it->second > pos;
  };
  for (std::size_t li = 0; li < log.size(); ++li) {
    if (log[li].kind != DepEventKind::kLink) continue;
    const rac::EntryId child = log[li].id, parent = log[li].parent;
    if (!resident_at(parent, li)) continue;
    for (std::size_t k = 0; k < log.size(); ++k) {
      if (log[k].kind != DepEventKind::kAccess || log[k].id != child) continue;
      if (k < li || resident_at(parent, k)) ++out[parent].dep;
    }
  }
  return out;
}

// Dense Gaussian elimination with partial pivoting; a is n x n row-major.
inline std::vector<double> solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  for (std::size_t i = 0; i < n; ++i) b[i] /= a[i][i];
  return b;
}

// Stationary vector of the restart walk on reversed edges, from the linear
// system x = (1-beta)/n + beta * (W x + (1/n) * sum of dangling mass).
inline std::vector<double> rank_dense(const rac::DependencyDag& dag, double beta) {
  const std::size_t n = dag.nodes.size();
  std::map<rac::EntryId, std::size_t> idx;
  for (std::size_t i = 0; i < n; ++i) idx[dag.nodes[i]] = i;
  std::vector<std::size_t> outdeg(n, 0);
  for (const auto& [p, c] : dag.edges) ++outdeg[idx[c]];
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) a[i][i] = 1.0;
  for (const auto& [p, c] : dag.edges) a[idx[p]][idx[c]] -= beta / static_cast<double>(outdeg[idx[c]]);
  for (std::size_t v = 0; v < n; ++v) {
    if (outdeg[v] != 0) continue;
    for (std::size_t u = 0; u < n; ++u) a[u][v] -= beta / static_cast<double>(n);
  }
  return solve(a, std::vector<double>(n, (1.0 - beta) / static_cast<double>(n)));
}

// Most hits any demand-admission schedule achieves: try every victim.
inline std::uint64_t exhaustive_opt(const std::vector<std::int64_t>& keys, std::size_t capacity) {
  std::map<std::pair<std::size_t, std::set<std::int64_t>>, std::uint64_t> memo;
  auto go = [&](auto&& self, std::size_t i, const std::set<std::int64_t>& res) -> std::uint64_t {
    if (i == keys.size()) return 0;
    auto key = std::make_pair(i, res);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    std::uint64_t best = 0;
    if (res.contains(keys[i])) {
      best = 1 + self(self, i + 1, res);
    } else if (res.size() < capacity) {
      auto next = res;
      next.insert(keys[i]);
      best = self(self, i + 1, next);
    } else {
      for (std::int64_t v : res) {
        auto next = res;
        next.erase(v);
        next.insert(keys[i]);
        best = std::max(best, self(self, i + 1, next));
      }
    }
    memo[key] = best;
    return best;
  };
  return go(go, 0, {});
}

// LRU hits via stack distance: a reuse hits iff fewer than C distinct keys
// were touched since the previous occurrence.
inline std::uint64_t lru_hits_stack(const std::vector<std::int64_t>& keys, std::size_t capacity) {
  std::uint64_t hits = 0;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    std::set<std::int64_t> seen;
    bool found = false;
    for (std::size_t j = i; j-- > 0;) {
      if (keys[j] == keys[i]) {
        found = true;
        break;
      }
      seen.insert(keys[j]);
    }
    if (found && seen.size() < capacity) ++hits;
  }
  return hits;
}

// Exact-key trace from integer keys; embeddings are axis vectors per key.
inline rac::Trace key_trace(const std::vector<std::int64_t>& keys, std::size_t dim = 8) {
  rac::Trace t;
  t.dim = dim;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    rac::Request r;
    r.t = i + 1;
    r.id = i + 1;
    std::vector<double> v(dim, 0.0);
    v[static_cast<std::size_t>(keys[i]) % dim] = 1.0;
    v[(static_cast<std::size_t>(keys[i]) / dim + 1) % dim] += 0.5;
    r.embedding = rac::EmbeddingVector::normalized(v);
    r.exact_key = keys[i];
    t.requests.push_back(std::move(r));
  }
  return t;
}

inline std::vector<std::int64_t> random_keys(std::mt19937_64& rng, std::size_t n, std::int64_t universe) {
  std::uniform_int_distribution<std::int64_t> u(0, universe - 1);
  std::vector<std::int64_t> k(n);
  for (auto& x : k) x = u(rng);
  return k;
}

}  // namespace oracle

#endif  // RAC_TESTS_ORACLES_HPP
