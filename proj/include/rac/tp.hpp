// Topical prevalence: per-topic exponentially decayed hit mass,
//
//   TP_t(s) = sum over hit times i of (1/2)^(alpha * (t - i)),
//
// maintained lazily from two scalars (time of last hit, value at that time).

#ifndef RAC_TP_HPP
#define RAC_TP_HPP

#include "rac/core.hpp"

namespace rac {

struct TpConfig {
  double alpha = 0.0;  // decay coefficient; half-life is 1/alpha steps

  void validate() const;
  /// Half-life of one cache capacity's worth of requests.
  static TpConfig for_capacity(std::size_t capacity);
};

struct TpState {
  Step t_last = 0;  // 0 if the topic has never been hit
  double tp_last = 0.0;

  bool operator==(const TpState&) const = default;
};

/// Decay-then-increment. Throws UsageError if t < state.t_last.
TpState tp_on_hit(const TpState& state, Step t, const TpConfig& cfg);

/// Closed-form value at t without mutating state. Throws UsageError if t < state.t_last.
double tp_value(const TpState& state, Step t, const TpConfig& cfg);

}  // namespace rac

#endif  // RAC_TP_HPP
