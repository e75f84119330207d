#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "rac/tp.hpp"

using namespace rac;

TEST_CASE("first hit initializes") {
  const TpState s = tp_on_hit(TpState{}, 5, TpConfig{0.3});
  CHECK(s.t_last == 5);
  CHECK(s.tp_last == 1.0);
}

TEST_CASE("one step of decay") {
  TpState s = tp_on_hit(TpState{}, 0, TpConfig{1.0});
  CHECK(s.tp_last == 1.0);
  s = tp_on_hit(s, 1, TpConfig{1.0});
  CHECK(s.tp_last == 1.5);
}

TEST_CASE("alpha 0 counts hits") {
  TpState s;
  for (Step t = 1; t <= 7; ++t) s = tp_on_hit(s, t * 3, TpConfig{0.0});
  CHECK(s.tp_last == 7.0);
}

TEST_CASE("closed-form value") {
  const TpState s{4, 2.0};
  CHECK(tp_value(s, 4, TpConfig{0.5}) == 2.0);
  CHECK(tp_value(s, 6, TpConfig{0.5}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(tp_value(s, 3, TpConfig{0.5}), UsageError);
  CHECK_THROWS_AS(TpConfig{-1.0}.validate(), UsageError);
  CHECK(TpConfig::for_capacity(8).alpha == 0.125);
}

TEST_CASE("lazy form matches the direct sum") {
  std::mt19937_64 rng(11);
  for (double alpha : {0.0, 0.01, 0.1, 1.0}) {
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<Step> hits;
      TpState s;
      Step t = 0;
      const int n = 1 + static_cast<int>(rng() % 60);
      for (int i = 0; i < n; ++i) {
        t += rng() % 20;
        hits.push_back(t);
        s = tp_on_hit(s, t, TpConfig{alpha});
      }
      const Step query = t + rng() % 50;
      const double direct = oracle::tp_direct(hits, query, alpha);
      CHECK(std::abs(tp_value(s, query, TpConfig{alpha}) - direct) <= 1e-9 * direct);
    }
  }
}
