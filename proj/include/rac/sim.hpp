// Trace-driven simulation with one hit predicate for every policy.
//
// For each request the harness finds the resident with the highest cosine
// similarity (ties to the smaller entry id) and calls it a hit when the
// similarity reaches tau; in exact-key mode a hit is key equality instead.
// The policy is told the verdict and names any victims.

#ifndef RAC_SIM_HPP
#define RAC_SIM_HPP

#include <memory>
#include <string>

#include "rac/policy.hpp"
#include "rac/rac_policy.hpp"

namespace rac {

struct SimOptions {
  std::size_t capacity = 1;
  double tau = 0.85;
  bool exact_keys = false;
  bool record_steps = false;
};

struct SimResult {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  double hr = 0.0;
  double hr_norm = 0.0;  // filled in when HR_full is known; 1.0 if HR_full is 0
  std::vector<std::string> steps;  // HIT/MISS/INSERT/EVICT lines, plus LINK lines for RAC
  std::string config_echo;
  std::uint64_t final_digest = 0;
  double runtime_ms = 0.0;
};

/// Throws ValidationError for an invalid trace (including embedding dims that
/// disagree with the trace header) and UsageError when exact-key mode is asked
/// of a trace without keys. Capacity violations and victims that are not
/// resident raise std::logic_error.
SimResult run_sim(const Trace& trace, CachePolicy& policy, const SimOptions& opts);

/// Hit ratio of a cache that never evicts.
double hr_full(const Trace& trace, double tau, bool exact_keys = false);

/// hr / full, or 1.0 when the trace offers no reuse at all.
double normalize_hr(double hr, double full);

/// Distinct exact keys, or the compulsory misses of a never-evicting cache.
std::size_t unique_footprint(const Trace& trace, double tau);

/// max(1, round(fraction * footprint)).
std::size_t capacity_from_fraction(double fraction, std::size_t footprint);

/// Digest of the resident set and counters reconstructed from a step log.
std::uint64_t replay_digest(const std::vector<std::string>& steps);

/// Policy key used for ghost lists and sketches.
std::int64_t request_key(const Request& r);

struct PolicyParams {
  std::size_t capacity = 1;
  std::uint64_t seed = 1;
  RacConfig rac;  // capacity is overwritten
};

const std::vector<std::string>& policy_names();

/// Every name in policy_names(). "belady" needs the trace it will be run on.
/// Throws UsageError listing the valid names for anything else.
std::unique_ptr<CachePolicy> make_policy(const std::string& name, const PolicyParams& params,
                                         const Trace* trace = nullptr);

}  // namespace rac

#endif  // RAC_SIM_HPP
