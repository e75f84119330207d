#include "rac/gen.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <random>
#include <sstream>
#include <unordered_map>

namespace rac {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
  return splitmix(splitmix(splitmix(splitmix(seed) ^ a) ^ b) ^ c);
}

// Portable draws: the standard distributions are implementation-defined, and
// traces must not depend on the standard library they were built with.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

double gaussian(std::mt19937_64& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::vector<double> random_unit(std::mt19937_64& rng, std::size_t d) {
  std::vector<double> v(d);
  double n2 = 0.0;
  do {
    n2 = 0.0;
    for (auto& x : v) {
      x = gaussian(rng);
      n2 += x * x;
    }
  } while (n2 == 0.0);
  const double n = std::sqrt(n2);
  for (auto& x : v) x /= n;
  return v;
}

std::size_t weighted_pick(std::mt19937_64& rng, const std::vector<double>& cdf) {
  const double u = uniform01(rng) * cdf.back();
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
}

EmbeddingVector finish(std::vector<double> v) {
  // Quantize so that the emitted text format round-trips bit-exactly.
  auto n = EmbeddingVector::normalized(std::move(v));
  return EmbeddingVector::from_unit(quantize9(n.values()));
}

// Query around a centroid: Gaussian noise with its centroid component removed,
// rescaled to the expected norm sigma * sqrt(d) of the full noise vector.
EmbeddingVector query_near(const std::vector<double>& c, double sigma, std::mt19937_64& rng) {
  const std::size_t d = c.size();
  std::vector<double> v(d);
  if (sigma == 0.0) return finish(c);
  std::vector<double> g(d);
  double dot = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    g[i] = gaussian(rng);
    dot += g[i] * c[i];
  }
  double n2 = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    g[i] -= dot * c[i];
    n2 += g[i] * g[i];
  }
  const double scale = n2 > 0.0 ? sigma * std::sqrt(static_cast<double>(d)) / std::sqrt(n2) : 0.0;
  for (std::size_t i = 0; i < d; ++i) v[i] = c[i] + scale * g[i];
  return finish(std::move(v));
}

struct Template {
  std::size_t topic = 0;
  std::vector<EmbeddingVector> queries;
  std::vector<std::int64_t> keys;
  std::vector<std::optional<std::size_t>> parent;  // position within the session
};

class World {
 public:
  explicit World(const GenParams& p) : p_(p) {
    std::mt19937_64 rng(stream_seed(p.seed, 1));
    const std::size_t max_tries = 100000;
    for (std::size_t s = 0; s < p.n_topics; ++s) {
      std::size_t tries = 0;
      for (;;) {
        auto c = random_unit(rng, p.dim);
        bool ok = true;
        for (const auto& o : centroids_) {
          double dot = 0.0;
          for (std::size_t i = 0; i < p.dim; ++i) dot += c[i] * o[i];
          if (dot > p.centroid_max_sim) {
            ok = false;
            break;
          }
        }
        if (ok) {
          centroids_.push_back(std::move(c));
          break;
        }
        if (++tries > max_tries) {
          throw GenerationError("cannot place " + std::to_string(p.n_topics) + " centroids in dim " +
                                std::to_string(p.dim) + " with pairwise sim <= " +
                                std::to_string(p.centroid_max_sim));
        }
      }
    }
    roots_.resize(p.n_topics);
    prereqs_.resize(p.n_topics);
    for (std::size_t s = 0; s < p.n_topics; ++s) {
      std::mt19937_64 arng(stream_seed(p.seed, 2, s));
      for (std::size_t a = 0; a < p.anchors_per_topic; ++a) {
        roots_[s].push_back(query_near(centroids_[s], p.root_sigma, arng));
        std::vector<double> root(roots_[s].back().values().begin(), roots_[s].back().values().end());
        prereqs_[s].emplace_back();
        for (std::size_t j = 0; j < p.prereqs_per_anchor; ++j) {
          prereqs_[s].back().push_back(query_near(root, p.sigma, arng));
        }
      }
    }
  }

  const EmbeddingVector& root(std::size_t s, std::size_t a) const { return roots_[s][a]; }

  std::size_t template_id(std::size_t topic, std::size_t index) const {
    return topic * p_.sessions_per_topic + index;
  }

  const Template& get(std::size_t id) {
    auto it = cache_.find(id);
    if (it != cache_.end()) return it->second;
    return cache_.emplace(id, build(id)).first->second;
  }

  std::size_t length(std::size_t id) const {
    std::mt19937_64 rng(stream_seed(p_.seed, 3, id));
    return p_.min_session + uniform_index(rng, p_.max_session - p_.min_session + 1);
  }

 private:
  // Position 0 is one of the topic's context roots. Every later query picks a
  // parent among earlier queries of depth <= 1 with weight 2^-gap; children of
  // the root are drawn from the root's shared prerequisite pool with
  // probability share_prob, everything else is a fresh continuation. Each query
  // is its parent's vector plus orthogonal noise, so it is closer to its parent
  // than to its siblings.
  Template build(std::size_t id) const {
    Template t;
    t.topic = id / p_.sessions_per_topic;
    std::mt19937_64 rng(stream_seed(p_.seed, 3, id));
    const std::size_t len = p_.min_session + uniform_index(rng, p_.max_session - p_.min_session + 1);
    const auto n_roots = static_cast<std::int64_t>(p_.n_topics * p_.anchors_per_topic);
    const auto n_prereqs = n_roots * static_cast<std::int64_t>(p_.prereqs_per_anchor);
    const std::size_t a = uniform_index(rng, p_.anchors_per_topic);
    const std::size_t root_slot = t.topic * p_.anchors_per_topic + a;
    t.queries.push_back(roots_[t.topic][a]);
    t.keys.push_back(static_cast<std::int64_t>(root_slot));
    t.parent.push_back(std::nullopt);
    std::vector<int> depth = {0};
    std::vector<bool> pool_used(p_.prereqs_per_anchor, false);
    for (std::size_t j = 1; j < len; ++j) {
      std::vector<double> cdf;
      std::vector<std::size_t> eligible;
      double acc = 0.0;
      for (std::size_t i = 0; i < j; ++i) {
        if (depth[i] > 1) continue;
        acc += std::exp2(-static_cast<double>(j - i));
        cdf.push_back(acc);
        eligible.push_back(i);
      }
      const std::size_t parent = eligible[weighted_pick(rng, cdf)];
      const double u_share = uniform01(rng);
      const std::size_t pick = uniform_index(rng, std::max<std::size_t>(1, p_.prereqs_per_anchor));
      std::optional<std::size_t> shared;
      if (parent == 0 && u_share < p_.share_prob) {
        for (std::size_t k = 0; k < p_.prereqs_per_anchor; ++k) {
          const std::size_t c = (pick + k) % p_.prereqs_per_anchor;
          if (!pool_used[c]) {
            shared = c;
            break;
          }
        }
      }
      if (shared) {
        pool_used[*shared] = true;
        t.queries.push_back(prereqs_[t.topic][a][*shared]);
        t.keys.push_back(n_roots + static_cast<std::int64_t>(root_slot * p_.prereqs_per_anchor + *shared));
      } else {
        const auto& pv = t.queries[parent].values();
        t.queries.push_back(query_near(std::vector<double>(pv.begin(), pv.end()), p_.sigma, rng));
        t.keys.push_back(n_roots + n_prereqs + static_cast<std::int64_t>(id * p_.max_session + j));
      }
      t.parent.push_back(parent);
      depth.push_back(depth[parent] + 1);
    }
    return t;
  }

  const GenParams& p_;
  std::vector<std::vector<double>> centroids_;
  std::vector<std::vector<EmbeddingVector>> roots_;
  std::vector<std::vector<std::vector<EmbeddingVector>>> prereqs_;
  std::map<std::size_t, Template> cache_;
};

struct Episode {
  std::size_t template_id = 0;
  std::size_t occurrence = 0;
  std::size_t start = 0;
  std::size_t len = 0;  // possibly truncated at the end of the trace
};

struct Layout {
  std::vector<Episode> episodes;
  std::vector<std::int64_t> keys;
};

// Episode sequence for a given probability that a replay is placed long.
constexpr int kMaxRedraws = 8;

Layout plan(const GenParams& p, World& world, double p_long) {
  const std::size_t cref = p.effective_capacity_ref();
  std::mt19937_64 rng(stream_seed(p.seed, 4));
  std::vector<double> zipf_cdf;
  double acc = 0.0;
  for (std::size_t r = 1; r <= p.n_topics; ++r) {
    acc += std::pow(static_cast<double>(r), -p.zipf_gamma);
    zipf_cdf.push_back(acc);
  }

  Layout out;
  std::vector<std::size_t> used(p.n_topics, 0);
  std::vector<std::size_t> emitted;  // template ids in first-emission order
  std::unordered_map<std::size_t, std::pair<std::size_t, std::size_t>> last;  // id -> (start, occurrences)
  std::size_t pos = 0;

  auto emit = [&](std::size_t id) {
    auto it = last.find(id);
    const bool first = it == last.end();
    const std::size_t occurrence = first ? 0 : it->second.second;
    if (first) emitted.push_back(id);
    const std::size_t len = std::min(world.length(id), p.trace_len - pos);
    out.episodes.push_back(Episode{id, occurrence, pos, len});
    const Template& t = world.get(id);
    out.keys.insert(out.keys.end(), t.keys.begin(), t.keys.begin() + static_cast<std::ptrdiff_t>(len));
    last[id] = {pos, occurrence + 1};
    pos += len;
  };

  // Every episode's topic comes from the Zipf topic process. The episode then
  // replays one of that topic's earlier sessions (with probability
  // repeat_fraction, or always once the topic's pool is used up) or opens
  // the topic's next unused session.
  // A long replay with no long candidate redraws the episode a few times
  // before falling back, so high long-reuse targets stay reachable.
  std::vector<std::vector<std::size_t>> by_topic(p.n_topics);
  int redraws = 0;
  while (pos < p.trace_len) {
    const double u_repeat = uniform01(rng);
    const double u_long = uniform01(rng);
    const std::size_t topic = weighted_pick(rng, zipf_cdf);
    const double u_pick = uniform01(rng);

    const auto& prior = by_topic[topic];
    const bool exhausted = used[topic] >= p.sessions_per_topic;
    if (!prior.empty() && (u_repeat < p.repeat_fraction || exhausted)) {
      const bool want_long = u_long < p_long;
      std::vector<std::size_t> pool;
      for (std::size_t id : prior) {
        if ((pos - last.at(id).first > cref) == want_long) pool.push_back(id);
      }
      if (pool.empty() && want_long && redraws < kMaxRedraws) {
        ++redraws;
        continue;
      }
      const auto& from = pool.empty() ? prior : pool;
      if (!pool.empty() || exhausted) {
        redraws = 0;
        emit(from[static_cast<std::size_t>(u_pick * static_cast<double>(from.size())) % from.size()]);
        continue;
      }
    }
    redraws = 0;
    const std::size_t id = world.template_id(topic, used[topic]++);
    by_topic[topic].push_back(id);
    emit(id);
  }
  return out;
}

}  // namespace

void GenParams::validate() const {
  if (n_topics == 0) throw UsageError("n_topics must be >= 1");
  if (sessions_per_topic == 0) throw UsageError("sessions_per_topic must be >= 1");
  if (trace_len == 0) throw UsageError("trace_len must be >= 1");
  if (!(zipf_gamma > 0.0)) throw UsageError("zipf_gamma must be > 0");
  if (!(long_reuse_target >= 0.0 && long_reuse_target <= 1.0)) {
    throw UsageError("long_reuse_target must be in [0, 1]");
  }
  if (dim < 2) throw UsageError("dim must be >= 2");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw UsageError("sigma must be >= 0");
  if (!(root_sigma >= 0.0) || !std::isfinite(root_sigma)) throw UsageError("root_sigma must be >= 0");
  if (anchors_per_topic == 0) throw UsageError("anchors_per_topic must be >= 1");
  if (!(share_prob >= 0.0 && share_prob <= 1.0)) throw UsageError("share_prob must be in [0, 1]");
  if (!(repeat_fraction >= 0.0 && repeat_fraction <= 1.0)) throw UsageError("repeat_fraction must be in [0, 1]");
  if (min_session == 0 || max_session < min_session) throw UsageError("need 1 <= min_session <= max_session");
}

std::size_t GenParams::effective_capacity_ref() const {
  return capacity_ref ? capacity_ref : std::max<std::size_t>(1, trace_len / 10);
}

std::string GenParams::describe() const {
  std::ostringstream os;
  os.precision(9);
  os << "topics=" << n_topics << ";sessions_per_topic=" << sessions_per_topic << ";len=" << trace_len
     << ";gamma=" << zipf_gamma << ";long_reuse=" << long_reuse_target
     << ";capacity_ref=" << effective_capacity_ref() << ";dim=" << dim << ";sigma=" << sigma << ";root_sigma=" << root_sigma
     << ";anchors_per_topic=" << anchors_per_topic << ";prereqs_per_anchor=" << prereqs_per_anchor
     << ";share_prob=" << share_prob << ";repeat_fraction=" << repeat_fraction
     << ";session_len=" << min_session << "-" << max_session << ";seed=" << seed;
  return os.str();
}

double measure_long_reuse(std::span<const std::int64_t> keys, std::size_t capacity_ref) {
  std::unordered_map<std::int64_t, std::size_t> prev;
  std::size_t reuses = 0, long_reuses = 0;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    auto [it, fresh] = prev.try_emplace(keys[i], i);
    if (!fresh) {
      ++reuses;
      if (i - it->second > capacity_ref) ++long_reuses;
      it->second = i;
    }
  }
  return reuses ? static_cast<double>(long_reuses) / static_cast<double>(reuses) : 0.0;
}

std::int64_t embedding_key(const EmbeddingVector& v) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double x : v.values()) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof bits);
    h = splitmix(h ^ bits);
  }
  return static_cast<std::int64_t>(h >> 1);
}

double measure_long_reuse(const Trace& trace, std::size_t capacity_ref) {
  std::vector<std::int64_t> keys;
  keys.reserve(trace.size());
  for (const Request& r : trace.requests) {
    keys.push_back(r.exact_key ? *r.exact_key : embedding_key(r.embedding));
  }
  return measure_long_reuse(keys, capacity_ref);
}

Trace generate_trace(const GenParams& params) {
  params.validate();
  World world(params);
  const std::size_t cref = params.effective_capacity_ref();
  const double target = params.long_reuse_target;
  const double tol = 0.05;

  // The long-reuse ratio rises with p_long; bisect, then fall back to the
  // closest grid point if randomness made the curve non-monotone.
  auto ratio = [&](double pl) { return measure_long_reuse(plan(params, world, pl).keys, cref); };
  double lo = 0.0, hi = 1.0;
  double best_p = 0.5, best_err = std::abs(ratio(0.5) - target);
  for (int it = 0; it < 24 && best_err > tol / 2; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double r = ratio(mid);
    if (std::abs(r - target) < best_err) {
      best_err = std::abs(r - target);
      best_p = mid;
    }
    (r < target ? lo : hi) = mid;
  }
  if (best_err > tol) {
    for (int g = 0; g <= 20; ++g) {
      const double pl = g / 20.0;
      const double err = std::abs(ratio(pl) - target);
      if (err < best_err) {
        best_err = err;
        best_p = pl;
      }
    }
  }
  if (best_err > tol) {
    const double r0 = ratio(0.0), r1 = ratio(1.0);
    std::ostringstream os;
    os << "long_reuse_target " << target << " is infeasible: achievable long-reuse ratios span ["
       << std::min(r0, r1) << ", " << std::max(r0, r1) << "] for trace_len " << params.trace_len
       << ", capacity_ref " << cref << ", repeat_fraction " << params.repeat_fraction;
    throw GenerationError(os.str());
  }

  const Layout layout = plan(params, world, best_p);
  Trace trace;
  trace.dim = params.dim;
  trace.requests.reserve(params.trace_len);
  for (const Episode& e : layout.episodes) {
    const Template& t = world.get(e.template_id);
    trace.sessions.push_back(SessionMark{e.start, e.template_id, e.occurrence});
    for (std::size_t j = 0; j < e.len; ++j) {
      Request r;
      r.t = trace.requests.size() + 1;
      r.id = r.t;
      r.embedding = t.queries[j];
      r.topic_truth = static_cast<std::int64_t>(t.topic);
      if (t.parent[j]) r.parent_truth = e.start + *t.parent[j] + 1;
      r.exact_key = t.keys[j];
      trace.requests.push_back(std::move(r));
    }
  }
  return trace;
}

constexpr double kMinRouteAccuracy = 0.95;

SeparationReport validate_separation(const GenParams& params, double tau, double route_tau,
                                     std::size_t samples) {
  params.validate();
  if (params.n_topics < 2) throw UsageError("separation needs at least two topics");
  World world(params);
  std::mt19937_64 rng(stream_seed(params.seed, 5));
  const std::size_t n_templates = params.n_topics * params.sessions_per_topic;
  std::vector<EmbeddingVector> roots;
  for (std::size_t s = 0; s < params.n_topics; ++s) {
    for (std::size_t a = 0; a < params.anchors_per_topic; ++a) roots.push_back(world.root(s, a));
  }

  std::vector<double> own, cross, link, distinct;
  std::size_t routed_home = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    const Template& t = world.get(uniform_index(rng, n_templates));
    for (std::size_t j = 0; j < t.queries.size(); ++j) {
      double best_own = -1.0, best_cross = -1.0;
      for (std::size_t r = 0; r < roots.size(); ++r) {
        const double sim = unit_dot(t.queries[j], roots[r]);
        double& slot = r / params.anchors_per_topic == t.topic ? best_own : best_cross;
        slot = std::max(slot, sim);
      }
      if (best_own >= route_tau && best_own > best_cross) ++routed_home;
      own.push_back(best_own);
      cross.push_back(best_cross);
      if (t.parent[j]) link.push_back(unit_dot(t.queries[j], t.queries[*t.parent[j]]));
      for (std::size_t k = 0; k < j; ++k) {
        if (t.keys[k] != t.keys[j]) distinct.push_back(unit_dot(t.queries[j], t.queries[k]));
      }
    }
  }
  auto pct = [](std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(v.size() - 1)));
    return v[idx];
  };
  SeparationReport rep;
  rep.intra_p1 = pct(own, 0.01);
  rep.intra_p99 = pct(distinct, 0.99);
  rep.cross_p99 = pct(cross, 0.99);
  rep.link_p50 = pct(link, 0.5);
  rep.route_accuracy = own.empty() ? 0.0 : static_cast<double>(routed_home) / static_cast<double>(own.size());
  rep.tau = tau;
  rep.route_tau = route_tau;
  const bool routes = rep.route_accuracy >= kMinRouteAccuracy;
  const bool no_false_hits = rep.intra_p99 < tau || params.sigma == 0.0;
  rep.pass = routes && no_false_hits;
  std::ostringstream os;
  os.precision(4);
  os << "intra_p1=" << rep.intra_p1 << " distinct_p99=" << rep.intra_p99 << " cross_p99=" << rep.cross_p99
     << " link_p50=" << rep.link_p50 << " route_accuracy=" << rep.route_accuracy << " route_tau=" << route_tau << " tau=" << tau
     << (rep.pass ? " pass" : " FAIL");
  if (!routes) os << " (fewer than " << kMinRouteAccuracy << " of queries route to their own topic)";
  if (!no_false_hits) os << " (distinct same-topic queries would count as hits)";
  rep.message = os.str();
  return rep;
}

Trace make_two_topic_trace() {
  constexpr std::size_t d = kDefaultDim;
  // Children sit at sim 0.75 from their context query and ~0.56 from each
  // other, so only the context query clears the default edge threshold.
  const double spread = std::sqrt(1.0 / (0.75 * 0.75) - 1.0);
  std::size_t next_axis = 2;
  auto axis = [&](std::size_t k) {
    std::vector<double> v(d, 0.0);
    v[k] = 1.0;
    return v;
  };
  auto child_of = [&](std::size_t hub) {
    std::vector<double> v = axis(hub);
    v[next_axis++] = spread;
    return finish(std::move(v));
  };
  const auto a0 = finish(axis(0));
  const auto b2 = finish(axis(1));

  struct Item {
    EmbeddingVector v;
    std::int64_t key;
    std::int64_t topic;
    std::optional<std::size_t> parent_pos;
  };
  std::vector<Item> items;
  std::int64_t key = 2;
  auto fresh = [&](std::size_t hub, std::int64_t topic, std::optional<std::size_t> parent) {
    items.push_back(Item{child_of(hub), key++, topic, parent});
  };
  // a0..a5
  items.push_back(Item{a0, 0, 0, std::nullopt});
  for (int i = 1; i <= 5; ++i) fresh(0, 0, 0);
  // b0..b5, context b2
  fresh(1, 1, std::nullopt);
  fresh(1, 1, std::nullopt);
  items.push_back(Item{b2, 1, 1, std::nullopt});
  for (int i = 3; i <= 5; ++i) fresh(1, 1, 8);
  // a0, a1*..a5*
  items.push_back(Item{a0, 0, 0, std::nullopt});
  for (int i = 1; i <= 5; ++i) fresh(0, 0, 12);
  // b0*, b1*, b2, b3*..b5*
  fresh(1, 1, std::nullopt);
  fresh(1, 1, std::nullopt);
  items.push_back(Item{b2, 1, 1, std::nullopt});
  for (int i = 3; i <= 5; ++i) fresh(1, 1, 20);

  Trace trace;
  trace.dim = d;
  for (std::size_t i = 0; i < items.size(); ++i) {
    Request r;
    r.t = i + 1;
    r.id = r.t;
    r.embedding = items[i].v;
    r.topic_truth = items[i].topic;
    if (items[i].parent_pos) r.parent_truth = *items[i].parent_pos + 1;
    r.exact_key = items[i].key;
    trace.requests.push_back(std::move(r));
  }
  trace.sessions = {{0, 0, 0}, {6, 1, 0}, {12, 0, 1}, {18, 1, 1}};
  return trace;
}

}  // namespace rac
