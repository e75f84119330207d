// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include "oracles.hpp"
#include "rac/baselines.hpp"
#include "rac/belady.hpp"
#include "rac/cli.hpp"
#include "rac/gen.hpp"
#include "rac/sim.hpp"
#include "rac/sweep.hpp"
#include "rac/tp.hpp"
#include "rac/tsi.hpp"
#include "workloads.hpp"

using namespace rac;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

std::size_t jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

// Synthetic family shared by criteria 7-9.
SweepGrid family() {
  SweepGrid g;
  g.base.n_topics = 40;
  g.base.trace_len = 4000;
  g.base.sessions_per_topic = 10;
  g.gammas = {0.7};
  g.alphas = {AlphaSpec{0.2, true}};
  g.seeds.clear();
  for (std::uint64_t s = 1; s <= 10; ++s) g.seeds.push_back(s);
  return g;
}

struct Stat {
  double mean = 0.0;
  double var = 0.0;  // sample variance
  std::size_t n = 0;
};

Stat stat_of(const std::vector<double>& xs) {
  Stat s;
  s.n = xs.size();
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(s.n);
  for (double x : xs) s.var += (x - s.mean) * (x - s.mean);
  if (s.n > 1) s.var /= static_cast<double>(s.n - 1);
  return s;
}

// hr_norm samples keyed by (policy, column value).
using Samples = std::map<std::pair<std::string, std::string>, std::vector<double>>;

Samples collect(const std::vector<SweepRow>& rows, std::string SweepRow::*column, std::size_t& failed) {
  Samples out;
  for (const auto& r : rows) {
    if (r.failed) {
      ++failed;
      continue;
    }
    out[{r.policy, r.*column}].push_back(r.hr_norm);
  }
  return out;
}

Verdict example_trace() {
  const Trace t = make_two_topic_trace();
  std::vector<std::int64_t> keys;
  for (const auto& r : t.requests) keys.push_back(*r.exact_key);
  constexpr std::size_t c = 6;
  const auto exhaustive = oracle::exhaustive_opt(keys, c);
  const auto t0 = Clock::now();
  // Optimum of the example, found by exhaustive search over eviction choices.
  constexpr std::uint64_t kOptimum = 2;
  SimOptions so;
  so.capacity = c;
  so.exact_keys = true;
  PolicyParams pp;
  pp.capacity = c;
  const auto lru = run_sim(t, *make_policy("lru", pp), so).hits;
  const auto belady = run_sim(t, *make_policy("belady", pp, &t), so).hits;
  const auto rac = run_sim(t, *make_policy("rac", pp), so).hits;
  const double secs = seconds_since(t0);
  Verdict v;
  v.pass = lru == 0 && belady == kOptimum && exhaustive == kOptimum && rac > 0 && rac <= belady && secs < 1.0;
  v.detail = "lru=" + std::to_string(lru) + " belady=" + std::to_string(belady) + " optimum=" +
             std::to_string(exhaustive) + " rac=" + std::to_string(rac) + " time=" + fmt(secs) + "s";
  return v;
}

Verdict tp_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (double alpha : {0.0, 0.01, 0.1, 1.0}) {
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<Step> hits;
      TpState s;
      Step t = 0;
      const int n = 1 + static_cast<int>(rng() % 80);
      for (int i = 0; i < n; ++i) {
        t += rng() % 30;
        hits.push_back(t);
        s = tp_on_hit(s, t, TpConfig{alpha});
      }
      const Step query = t + rng() % 60;
      const double direct = oracle::tp_direct(hits, query, alpha);
      worst = std::max(worst, std::abs(tp_value(s, query, TpConfig{alpha}) - direct) / direct);
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && secs < 5.0, "max_rel_err=" + fmt(worst) + " time=" + fmt(secs) + "s"};
}

Verdict tsi_replay() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(202);
  std::size_t mismatches = 0, events = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const double lambda = trial % 2 == 0 ? 1.0 : 0.5;
    const auto run = workload::random_dep_run(rng, 1 + rng() % 2000, lambda);
    events = std::max(events, run.log.size());
    if (replay_dep_oracle(run.log) != run.counts) ++mismatches;
    if (oracle::dep_rescan(run.log) != run.counts) ++mismatches;
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && events <= 2000 && secs < 10.0,
          "mismatches=" + std::to_string(mismatches) + " max_events=" + std::to_string(events) + " time=" +
              fmt(secs) + "s"};
}

Verdict routing() {
  const auto t0 = Clock::now();
  std::size_t mismatches = 0, queries = 0, max_topics = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    auto a = workload::random_topic_world(seed, 300, 25);
    auto b = workload::random_topic_world(seed, 300, 25);
    max_topics = std::max(max_topics, a.index.topic_count());
    for (std::size_t i = 0; i < a.queries.size(); ++i) {
      const auto got = a.index.route_topic(a.queries[i], a.taus[i], a.index.topic_count(), *a.info);
      const auto want = workload::route_exhaustive(b, b.queries[i], b.taus[i]);
      mismatches += got != want;
      ++queries;
    }
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 10.0, "queries=" + std::to_string(queries) + " mismatches=" +
                                               std::to_string(mismatches) + " max_topics=" +
                                               std::to_string(max_topics) + " time=" + fmt(secs) + "s"};
}

Verdict structural() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(303);
  const RankConfig cfg;
  double linf = 0.0, sum_err = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto dag = workload::random_dag(rng, 8);
    const auto r = structural_rank(dag, cfg);
    const auto x = oracle::rank_dense(dag, cfg.beta);
    double sum = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      linf = std::max(linf, std::abs(r[i] - x[i]));
      sum += r[i];
    }
    sum_err = std::max(sum_err, std::abs(sum - 1.0));
  }
  const double secs = seconds_since(t0);
  return {linf <= 1e-8 && sum_err <= 1e-9 && secs < 10.0,
          "linf=" + fmt(linf) + " sum_err=" + fmt(sum_err) + " time=" + fmt(secs) + "s"};
}

Verdict belady_dominance() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(404);
  std::size_t violations = 0, checks = 0;
  std::string first;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t c = 1 + rng() % 8;
    const auto keys = oracle::random_keys(rng, 1 + rng() % 64, 2 + static_cast<std::int64_t>(rng() % 24));
    const Trace t = oracle::key_trace(keys);
    // RAC may turn away the request it just admitted, so it is held to the
    // optimum that allows bypassing; admit-always policies to plain MIN.
    const auto min_hits = belady_min(t, c).hits;
    const auto bypass_hits = belady_min_bypass(t, c).hits;
    SimOptions so;
    so.capacity = c;
    so.exact_keys = true;
    PolicyParams pp;
    pp.capacity = c;
    for (const auto& name : policy_names()) {
      if (name == "belady") continue;
      const auto hits = run_sim(t, *make_policy(name, pp, &t), so).hits;
      const bool bypasses = name.rfind("rac", 0) == 0;
      ++checks;
      if (hits > (bypasses ? bypass_hits : min_hits)) {
        if (violations++ == 0) first = " first=" + name + "@trial" + std::to_string(trial);
      }
    }
  }
  const double secs = seconds_since(t0);
  return {violations == 0 && secs < 30.0, "checks=" + std::to_string(checks) + " violations=" +
                                               std::to_string(violations) + first + " time=" + fmt(secs) + "s"};
}

Verdict headline() {
  const auto t0 = Clock::now();
  SweepGrid g = family();
  g.policies = {"rac", "lru", "arc", "tinylfu", "s3fifo", "sieve"};
  g.capacity_fracs = {0.1};
  g.long_reuses = {0.5, 0.7, 0.9};
  std::size_t failed = 0;
  const auto samples = collect(run_sweep(g, SweepOptions{jobs(), false}), &SweepRow::long_reuse, failed);
  bool pass = failed == 0;
  std::ostringstream os;
  std::vector<double> gaps, pooled;
  for (double lr : g.long_reuses) {
    const std::string key = format_number(lr);
    const Stat rac = stat_of(samples.at({"rac", key}));
    std::string best;
    Stat base;
    for (const auto& p : g.policies) {
      if (p == "rac") continue;
      const Stat s = stat_of(samples.at({p, key}));
      if (best.empty() || s.mean > base.mean) {
        best = p;
        base = s;
      }
    }
    const double ratio = rac.mean / base.mean;
    gaps.push_back(rac.mean - base.mean);
    pooled.push_back(std::sqrt((rac.var + base.var) / 2.0));
    if (lr >= 0.7 && ratio < 1.10) pass = false;
    os << " lr" << key << ":rac=" << fmt(rac.mean) << "," << best << "=" << fmt(base.mean) << ",ratio=" << fmt(ratio);
  }
  for (std::size_t i = 1; i < gaps.size(); ++i) {
    const double sd = std::sqrt((pooled[i - 1] * pooled[i - 1] + pooled[i] * pooled[i]) / 2.0);
    if (gaps[i] < gaps[i - 1] - sd) pass = false;
    os << " gap" << i << "=" << fmt(gaps[i] - gaps[i - 1]) << "(sd " << fmt(sd) << ")";
  }
  const double secs = seconds_since(t0);
  pass = pass && secs < 600.0;
  return {pass, "failed=" + std::to_string(failed) + os.str() + " time=" + fmt(secs) + "s"};
}

Verdict ablation() {
  const auto t0 = Clock::now();
  SweepGrid g = family();
  g.policies = {"rac", "rac-notp", "rac-notsi"};
  g.capacity_fracs = {0.025};
  g.long_reuses = {0.5, 0.7, 0.9};
  std::size_t failed = 0;
  const auto samples = collect(run_sweep(g, SweepOptions{jobs(), false}), &SweepRow::long_reuse, failed);
  bool pass = failed == 0;
  std::ostringstream os;
  for (const std::string ablated : {"rac-notp", "rac-notsi"}) {
    double pooled_margin = 0.0;
    for (double lr : g.long_reuses) {
      const std::string key = format_number(lr);
      const Stat full = stat_of(samples.at({"rac", key}));
      const Stat abl = stat_of(samples.at({ablated, key}));
      const double margin = full.mean - abl.mean;
      if (margin < -std::sqrt((full.var + abl.var) / 2.0)) pass = false;
      pooled_margin += margin / static_cast<double>(g.long_reuses.size());
      os << " " << ablated << "@lr" << key << "=" << fmt(margin);
    }
    if (!(pooled_margin > 0.0)) pass = false;
    os << " " << ablated << "_pooled=" << fmt(pooled_margin);
  }
  const double secs = seconds_since(t0);
  pass = pass && secs < 600.0;
  return {pass, "failed=" + std::to_string(failed) + os.str() + " time=" + fmt(secs) + "s"};
}

Verdict robustness() {
  const auto t0 = Clock::now();
  SweepGrid g = family();
  g.policies = {"rac"};
  g.capacity_fracs = {0.1};
  g.long_reuses = {0.7};
  g.taus = {0.75, 0.8, 0.85, 0.9, 0.95};
  g.alphas = {AlphaSpec{0.02, true}, AlphaSpec{0.2, true}, AlphaSpec{2.0, true}, AlphaSpec{20.0, true}};
  g.lambdas = {0.0, 0.5, 1.0, 2.0, 4.0};
  std::size_t failed = 0;
  const auto rows = run_sweep(g, SweepOptions{jobs(), false});
  const auto samples = collect(rows, &SweepRow::lambda, failed);
  std::map<std::string, double> pooled;
  for (const auto& [key, xs] : samples) pooled[key.second] = stat_of(xs).mean;
  const double zero = pooled.at("0");
  double best = -1.0;
  std::string best_lambda;
  for (const auto& [lambda, m] : pooled) {
    if (lambda != "0" && m > best) {
      best = m;
      best_lambda = lambda;
    }
  }
  const double secs = seconds_since(t0);
  const bool pass = failed == 0 && rows.size() == 1000 && zero <= best && secs < 900.0;
  return {pass, "rows=" + std::to_string(rows.size()) + " failed=" + std::to_string(failed) + " lambda0=" +
                    fmt(zero) + " best=" + fmt(best) + "@lambda" + best_lambda + " time=" + fmt(secs) + "s"};
}

std::string invoke(const std::vector<std::string>& args, int& code) {
  std::ostringstream out, err;
  code = run_command(args, out, err);
  return out.str() + "\x1f" + err.str();
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Verdict determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "ractool_acceptance";
  fs::create_directories(dir);
  const std::string trace = (dir / "t.trace").string();
  const std::vector<std::string> world = {"--topics", "20", "--len", "1500", "--sessions-per-topic", "8"};
  auto with = [&](std::vector<std::string> a) {
    a.insert(a.end(), world.begin(), world.end());
    return a;
  };
  const std::vector<std::vector<std::string>> commands = {
      with({"gen", "--seed", "7", "--gamma", "0.9"}),
      with({"gen", "--seed", "7", "--out", trace}),
      {"run", "--trace", trace, "--policy", "rac", "--capacity", "0.1", "--steps", (dir / "steps.log").string()},
      with({"run", "--seed", "3", "--policy", "tinylfu", "--capacity", "0.05"}),
      with({"sweep", "--policy", "rac,lru,arc", "--lambda", "0,1", "--seed", "1-3", "--jobs", std::to_string(jobs() + 3)}),
  };
  std::size_t differ = 0, errors = 0;
  for (const auto& cmd : commands) {
    std::string outputs[2];
    for (auto& o : outputs) {
      int code = 0;
      o = invoke(cmd, code);
      if (cmd[0] == "run" && cmd[1] == "--trace") o += slurp(dir / "steps.log");
      if (cmd.back() == trace) o += slurp(trace);
      errors += code != 0;
    }
    differ += outputs[0] != outputs[1];
  }
  // A parallel sweep matches the sequential one row for row.
  int code = 0;
  const auto seq = invoke(with({"sweep", "--policy", "rac,sieve", "--seed", "1-4", "--jobs", "1"}), code);
  const auto par = invoke(with({"sweep", "--policy", "rac,sieve", "--seed", "1-4", "--jobs", "4"}), code);
  differ += seq != par;
  return {differ == 0 && errors == 0,
          "commands=" + std::to_string(commands.size() + 1) + " differing=" + std::to_string(differ) + " errors=" +
              std::to_string(errors)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"example trace regression", example_trace},
      {"TP closed form vs direct sum", tp_oracle},
      {"TSI incremental vs replay", tsi_replay},
      {"routing vs exhaustive argmax", routing},
      {"structural rank vs dense solve", structural},
      {"Belady dominance", belady_dominance},
      {"RAC over best baseline at 10%", headline},
      {"ablation direction at 2.5%", ablation},
      {"parameter robustness", robustness},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += !v.pass;
    std::printf("[%s] %2zu %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
