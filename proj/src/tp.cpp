#include "rac/tp.hpp"

#include <cmath>
#include <string>

namespace rac {

namespace {

double decay_factor(Step gap, double alpha) {
  if (gap == 0 || alpha == 0.0) return 1.0;
  return std::exp2(-alpha * static_cast<double>(gap));
}

void check_time(const TpState& state, Step t) {
  if (t < state.t_last) {
    throw UsageError("topical prevalence queried at t=" + std::to_string(t) +
                     " before last hit at t=" + std::to_string(state.t_last));
  }
}

}  // namespace

void TpConfig::validate() const {
  if (!std::isfinite(alpha) || alpha < 0.0) {
    throw UsageError("alpha must be finite and >= 0");
  }
}

TpConfig TpConfig::for_capacity(std::size_t capacity) {
  return TpConfig{capacity == 0 ? 1.0 : 1.0 / static_cast<double>(capacity)};
}

TpState tp_on_hit(const TpState& state, Step t, const TpConfig& cfg) {
  check_time(state, t);
  return TpState{t, decay_factor(t - state.t_last, cfg.alpha) * state.tp_last + 1.0};
}

double tp_value(const TpState& state, Step t, const TpConfig& cfg) {
  check_time(state, t);
  return decay_factor(t - state.t_last, cfg.alpha) * state.tp_last;
}

}  // namespace rac
