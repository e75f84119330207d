#include "rac/tsi.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

namespace rac {

void TsiConfig::validate() const {
  if (!std::isfinite(lambda) || lambda < 0.0) throw UsageError("lambda must be >= 0");
  if (lookback < 1) throw UsageError("lookback window must be >= 1");
  if (!(tau_edge > 0.0 && tau_edge <= 1.0)) throw UsageError("tau_edge must be in (0, 1]");
}

std::optional<EntryId> detect_parent(const EmbeddingVector& q,
                                     std::span<const ParentCandidate> residents, Step t,
                                     const TsiConfig& cfg) {
  std::optional<EntryId> best;
  double best_score = 0.0;
  Step best_k = 0;
  for (const auto& c : residents) {
    if (c.k >= t || t - c.k > cfg.lookback) continue;
    const double sim = unit_dot(q, *c.embedding);
    if (sim < cfg.tau_edge) continue;
    const double score = sim / static_cast<double>(t - c.k);
    const bool better = !best || score > best_score ||
                        (score == best_score && (c.k > best_k || (c.k == best_k && c.id < *best)));
    if (better) {
      best = c.id;
      best_score = score;
      best_k = c.k;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------

std::string format_event(const DepEvent& e) {
  std::ostringstream os;
  switch (e.kind) {
    case DepEventKind::kAccess: os << "ACCESS " << e.id << ' ' << e.t; break;
    case DepEventKind::kLink: os << "LINK " << e.id << ' ' << e.parent << ' ' << e.t; break;
    case DepEventKind::kInsert: os << "INSERT " << e.id << ' ' << e.t; break;
    case DepEventKind::kEvict: os << "EVICT " << e.id << ' ' << e.t; break;
  }
  return os.str();
}

DepEvent parse_event(const std::string& line) {
  std::istringstream is(line);
  std::string word;
  DepEvent e;
  if (!(is >> word)) throw ValidationError("empty event line");
  if (word == "ACCESS") {
    e.kind = DepEventKind::kAccess;
  } else if (word == "LINK") {
    e.kind = DepEventKind::kLink;
  } else if (word == "INSERT") {
    e.kind = DepEventKind::kInsert;
  } else if (word == "EVICT") {
    e.kind = DepEventKind::kEvict;
  } else {
    throw ValidationError("unknown event '" + word + "'");
  }
  bool ok = static_cast<bool>(is >> e.id);
  if (ok && e.kind == DepEventKind::kLink) ok = static_cast<bool>(is >> e.parent);
  ok = ok && static_cast<bool>(is >> e.t);
  std::string extra;
  if (!ok || (is >> extra)) throw ValidationError("malformed event line '" + line + "'");
  return e;
}

void write_event_log(const DepEventLog& log, std::ostream& out) {
  for (const auto& e : log) out << format_event(e) << '\n';
}

DepEventLog read_event_log(std::istream& in) {
  DepEventLog log;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    log.push_back(parse_event(line));
  }
  return log;
}

std::map<EntryId, DepCounts> replay_dep_oracle(const DepEventLog& log) {
  std::map<EntryId, DepCounts> counts;
  std::map<EntryId, EntryId> parent_of;
  std::unordered_set<EntryId> resident;
  Step now = 0;
  const DepEvent* prev = nullptr;

  auto fail = [](const DepEvent& e, const std::string& why) {
    throw ValidationError("event '" + format_event(e) + "': " + why);
  };

  for (const auto& e : log) {
    if (e.t < now) fail(e, "time runs backward");
    now = e.t;
    switch (e.kind) {
      case DepEventKind::kInsert:
        if (counts.contains(e.id)) fail(e, "entry inserted twice");
        counts[e.id] = DepCounts{};
        resident.insert(e.id);
        break;
      case DepEventKind::kAccess: {
        if (!resident.contains(e.id)) fail(e, "access to a non-resident entry");
        counts[e.id].freq += 1;
        auto p = parent_of.find(e.id);
        if (p != parent_of.end() && resident.contains(p->second)) counts[p->second].dep += 1;
        break;
      }
      case DepEventKind::kLink: {
        if (!prev || prev->kind != DepEventKind::kAccess || prev->id != e.id || prev->t != e.t) {
          fail(e, "link must directly follow an access of the child");
        }
        if (parent_of.contains(e.id)) fail(e, "child already has a parent");
        if (!counts.contains(e.parent)) fail(e, "unknown parent");
        if (e.parent == e.id) fail(e, "self link");
        parent_of[e.id] = e.parent;
        if (resident.contains(e.parent)) counts[e.parent].dep += counts[e.id].freq;
        break;
      }
      case DepEventKind::kEvict:
        if (!resident.erase(e.id)) fail(e, "eviction of a non-resident entry");
        break;
    }
    prev = &e;
  }
  return counts;
}

// ---------------------------------------------------------------------------

DependencyTracker::DependencyTracker(TsiConfig cfg, DepEventLog* log) : cfg_(cfg), log_(log) {
  cfg_.validate();
}

void DependencyTracker::record(DepEventKind kind, EntryId id, Step t, EntryId parent) {
  if (log_) log_->push_back(DepEvent{kind, id, parent, t});
}

const DependencyTracker::Stats& DependencyTracker::at(EntryId id) const {
  auto it = live_.find(id);
  if (it == live_.end()) throw UsageError("entry " + std::to_string(id) + " is not resident");
  return it->second;
}

void DependencyTracker::insert(EntryId id, Step t) {
  if (live_.contains(id) || retired_.contains(id)) {
    throw UsageError("entry " + std::to_string(id) + " inserted twice");
  }
  Stats s;
  s.insert_time = t;
  s.last_access = t;
  live_.emplace(id, s);
  record(DepEventKind::kInsert, id, t);
}

TsiUpdate DependencyTracker::access(EntryId id, Step t, const EmbeddingVector& q,
                                    const CandidateSource& candidates) {
  auto it = live_.find(id);
  if (it == live_.end()) throw UsageError("access to non-resident entry " + std::to_string(id));
  Stats& s = it->second;
  s.freq += 1;
  s.last_access = t;
  record(DepEventKind::kAccess, id, t);

  TsiUpdate out;
  std::optional<EntryId> parent = s.parent;
  bool fresh = false;
  if (!parent && s.searching) {
    if (t - s.insert_time > cfg_.lookback) {
      s.searching = false;
    } else {
      std::vector<ParentCandidate> pool = candidates ? candidates() : std::vector<ParentCandidate>{};
      std::erase_if(pool, [&](const ParentCandidate& c) {
        return c.id == id || c.insert_time >= s.insert_time || !live_.contains(c.id);
      });
      parent = detect_parent(q, pool, t, cfg_);
      if (parent) {
        s.parent = parent;
        s.searching = false;
        fresh = true;
        record(DepEventKind::kLink, id, t, *parent);
      }
    }
  }

  if (parent) {
    auto p = live_.find(*parent);
    if (p != live_.end()) {
      p->second.dep += fresh ? s.freq : 1;
      out.parent = *parent;
      out.parent_tsi = static_cast<double>(p->second.freq) + cfg_.lambda * static_cast<double>(p->second.dep);
      out.new_link = fresh;
    }
  }
  out.tsi = static_cast<double>(s.freq) + cfg_.lambda * static_cast<double>(s.dep);
  return out;
}

void DependencyTracker::evict(EntryId id, Step t) {
  auto it = live_.find(id);
  if (it == live_.end()) throw UsageError("eviction of non-resident entry " + std::to_string(id));
  retired_[id] = DepCounts{it->second.freq, it->second.dep};
  live_.erase(it);
  record(DepEventKind::kEvict, id, t);
}

double DependencyTracker::tsi(EntryId id) const {
  const Stats& s = at(id);
  return static_cast<double>(s.freq) + cfg_.lambda * static_cast<double>(s.dep);
}

std::uint64_t DependencyTracker::freq(EntryId id) const { return at(id).freq; }
std::uint64_t DependencyTracker::dep(EntryId id) const { return at(id).dep; }
std::optional<EntryId> DependencyTracker::parent(EntryId id) const { return at(id).parent; }
Step DependencyTracker::insert_time(EntryId id) const { return at(id).insert_time; }
Step DependencyTracker::last_access(EntryId id) const { return at(id).last_access; }

std::map<EntryId, DepCounts> DependencyTracker::all_counts() const {
  std::map<EntryId, DepCounts> out(retired_.begin(), retired_.end());
  for (const auto& [id, s] : live_) out[id] = DepCounts{s.freq, s.dep};
  return out;
}

// ---------------------------------------------------------------------------

void DependencyDag::validate() const {
  std::unordered_map<EntryId, std::size_t> pos;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!pos.emplace(nodes[i], i).second) throw ValidationError("duplicate dag node");
  }
  std::unordered_set<EntryId> has_parent;
  for (const auto& [p, c] : edges) {
    auto ip = pos.find(p);
    auto ic = pos.find(c);
    if (ip == pos.end() || ic == pos.end()) throw ValidationError("edge references unknown node");
    if (ip->second >= ic->second) throw ValidationError("edge does not point forward in time");
    if (!has_parent.insert(c).second) throw ValidationError("node has more than one parent");
  }
}

std::vector<EntryId> DependencyDag::dependents(EntryId anchor) const {
  std::vector<EntryId> out;
  for (const auto& [p, c] : edges) {
    if (p == anchor) out.push_back(c);
  }
  return out;
}

std::size_t delta_t(std::span<const EntryId> window, EntryId anchor, const DependencyDag& dag) {
  if (std::find(dag.nodes.begin(), dag.nodes.end(), anchor) == dag.nodes.end()) {
    throw UsageError("anchor " + std::to_string(anchor) + " is not in the dag");
  }
  const auto deps = dag.dependents(anchor);
  const std::unordered_set<EntryId> dependents(deps.begin(), deps.end());
  std::size_t n = 0;
  for (EntryId q : window) n += dependents.contains(q) ? 1 : 0;
  return n;
}

void RankConfig::validate() const {
  if (!(beta > 0.0 && beta < 1.0)) throw UsageError("beta must be in (0, 1)");
  if (!(tol > 0.0)) throw UsageError("tol must be positive");
  if (max_iter == 0) throw UsageError("max_iter must be positive");
}

ConvergenceError::ConvergenceError(double residual, std::size_t iterations)
    : std::runtime_error("structural rank did not converge after " + std::to_string(iterations) +
                         " iterations (residual " + std::to_string(residual) + ")"),
      residual_(residual) {}

std::vector<double> structural_rank(const DependencyDag& dag, const RankConfig& cfg) {
  cfg.validate();
  const std::size_t n = dag.nodes.size();
  if (n == 0) throw UsageError("structural_rank on an empty dag");

  std::unordered_map<EntryId, std::size_t> idx;
  for (std::size_t i = 0; i < n; ++i) idx[dag.nodes[i]] = i;

  // Reversed edges: child -> parent. out[v] lists targets of v in the walk.
  std::vector<std::vector<std::size_t>> out(n);
  for (const auto& [p, c] : dag.edges) out[idx.at(c)].push_back(idx.at(p));

  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> r(n, inv_n), next(n);
  double residual = 0.0;
  for (std::size_t iter = 1; iter <= cfg.max_iter; ++iter) {
    double dangling = 0.0;
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t v = 0; v < n; ++v) {
      if (out[v].empty()) {
        dangling += r[v];
      } else {
        const double share = r[v] / static_cast<double>(out[v].size());
        for (std::size_t u : out[v]) next[u] += share;
      }
    }
    const double base = (1.0 - cfg.beta) * inv_n + cfg.beta * dangling * inv_n;
    residual = 0.0;
    for (std::size_t u = 0; u < n; ++u) {
      next[u] = base + cfg.beta * next[u];
      residual += std::abs(next[u] - r[u]);
    }
    r.swap(next);
    if (residual <= cfg.tol) return r;
  }
  throw ConvergenceError(residual, cfg.max_iter);
}

}  // namespace rac
