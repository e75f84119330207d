#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "rac/baselines.hpp"
#include "rac/belady.hpp"
#include "rac/gen.hpp"
#include "rac/sim.hpp"

using namespace rac;

namespace {

std::uint64_t hits_of(const std::string& name, const Trace& t, std::size_t c) {
  PolicyParams pp;
  pp.capacity = c;
  auto p = make_policy(name, pp, &t);
  SimOptions so;
  so.capacity = c;
  so.exact_keys = true;
  return run_sim(t, *p, so).hits;
}

}  // namespace

TEST_CASE("fifo order") {
  FifoPolicy p;
  CHECK_FALSE(policy_step(p, Access{1, 1, 1}, false, 2));
  CHECK_FALSE(policy_step(p, Access{2, 2, 2}, false, 2));
  CHECK(policy_step(p, Access{1, 1, 3}, true, 2) == std::nullopt);
  CHECK(policy_step(p, Access{3, 3, 4}, false, 2) == EntryId{1});
}

TEST_CASE("sieve keeps the visited entry") {
  SievePolicy p;
  policy_step(p, Access{1, 1, 1}, false, 2);
  policy_step(p, Access{2, 2, 2}, false, 2);
  policy_step(p, Access{1, 1, 3}, true, 2);
  CHECK(policy_step(p, Access{3, 3, 4}, false, 2) == EntryId{2});
  // The hand stays put: the next miss clears a's bit and takes it.
  CHECK(policy_step(p, Access{4, 4, 5}, false, 2) == EntryId{1});
}

TEST_CASE("clock gives a second chance") {
  ClockPolicy p;
  policy_step(p, Access{1, 1, 1}, false, 2);
  policy_step(p, Access{2, 2, 2}, false, 2);
  policy_step(p, Access{1, 1, 3}, true, 2);
  CHECK(policy_step(p, Access{3, 3, 4}, false, 2) == EntryId{2});
}

TEST_CASE("ttl expires by age") {
  TtlPolicy p(3);
  policy_step(p, Access{1, 1, 1}, false, 10);
  policy_step(p, Access{2, 2, 2}, false, 10);
  CHECK(p.expire(3).empty());
  CHECK(p.expire(4) == std::vector<EntryId>{1});
  CHECK(p.size() == 1);
}

TEST_CASE("lru matches stack distance") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t c = 1 + rng() % 8;
    const auto keys = oracle::random_keys(rng, 200, 2 + rng() % 20);
    CHECK(hits_of("lru", oracle::key_trace(keys), c) == oracle::lru_hits_stack(keys, c));
  }
}

TEST_CASE("example trace defeats recency") {
  const Trace t = make_two_topic_trace();
  CHECK(hits_of("lru", t, 6) == 0);
  CHECK(hits_of("fifo", t, 6) == 0);
}

TEST_CASE("belady small cases") {
  CHECK(belady_min(oracle::key_trace({0, 1, 0, 1}), 1).hits == 0);
  CHECK(belady_min(oracle::key_trace({0, 1, 0}), 2).hits == 1);
  const Trace ex = make_two_topic_trace();
  std::vector<std::int64_t> keys;
  for (const auto& r : ex.requests) keys.push_back(*r.exact_key);
  CHECK(oracle::exhaustive_opt(keys, 6) == 2);
  CHECK(belady_min(ex, 6).hits == 2);
  CHECK(hits_of("belady", ex, 6) == 2);
  CHECK_THROWS_AS(belady_min(ex, 0), UsageError);
}

TEST_CASE("belady equals the exhaustive optimum") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t c = 1 + rng() % 4;
    const auto keys = oracle::random_keys(rng, 1 + rng() % 24, 2 + rng() % 7);
    const auto opt = oracle::exhaustive_opt(keys, c);
    CHECK(belady_min(keys, c).hits == opt);
    CHECK(belady_min(keys, c, true).hits >= opt);
    CHECK(hits_of("belady", oracle::key_trace(keys), c) == opt);
  }
}

TEST_CASE("every policy stays within capacity and under belady") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t c = 1 + rng() % 8;
    const auto keys = oracle::random_keys(rng, 64, 2 + rng() % 16);
    const Trace t = oracle::key_trace(keys);
    const auto opt = belady_min_bypass(t, c).hits;
    for (const auto& name : policy_names()) CHECK(hits_of(name, t, c) <= opt);
  }
}

TEST_CASE("factory") {
  CHECK(baseline_names().size() == 11);
  CHECK_THROWS_AS(make_baseline("nosuch", BaselineParams{}), UsageError);
  for (const auto& n : baseline_names()) CHECK(make_baseline(n, BaselineParams{4, 1})->name() == n);
}

TEST_CASE("arc adapts toward recency under a scan") {
  ArcPolicy p(4);
  std::int64_t k = 0;
  EntryId id = 1;
  // Warm two items into T2, then scan; ghosts in B1 push p up on return.
  for (int rep = 0; rep < 2; ++rep) {
    for (std::int64_t key : {100, 101}) {
      const bool hit = rep == 1;
      policy_step(p, Access{hit ? static_cast<EntryId>(key - 99) : id++, key, 0}, hit, 4);
    }
  }
  for (; k < 6; ++k) policy_step(p, Access{id++, k, 0}, false, 4);
  const double before = p.target_t1();
  policy_step(p, Access{id++, 3, 0}, false, 4);
  CHECK(p.target_t1() >= before);
}
