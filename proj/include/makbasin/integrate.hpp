#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "makbasin/error.hpp"
#include "makbasin/mak.hpp"

namespace makbasin {

/// Fixed-step classical RK4 settings.
struct IntegratorConfig {
  double step = 0.015625;
  double horizon = 200.0;
  std::string method = "rk4";
};

// Components in [-kClampThreshold, 0) are roundoff and get clamped to zero;
// anything below is a genuine escape from the nonnegative orthant.
inline constexpr double kClampThreshold = 1e-9;

/// Number of steps of size `step` that make up `duration`, or throws if the
/// duration is not an integer multiple of the step.
inline long step_count(double duration, double step) {
  if (!(step > 0.0)) throw Error(ErrorCode::kInvalidParameter, "integrator step must be positive");
  if (duration < 0.0) throw Error(ErrorCode::kInvalidParameter, "duration must be nonnegative");
  const double ratio = duration / step;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    throw Error(ErrorCode::kStepMisalignment, "duration " + std::to_string(duration) +
                                                  " is not a multiple of step " + std::to_string(step));
  }
  return static_cast<long>(rounded);
}

template <typename Field>
State rk4_step(Field&& rhs, const State& x, double h) {
  const State k1 = rhs(x);
  const State k2 = rhs(State(x + 0.5 * h * k1));
  const State k3 = rhs(State(x + 0.5 * h * k2));
  const State k4 = rhs(State(x + h * k3));
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// RK4 flow of an arbitrary vector field; no domain handling.
template <typename Field>
State integrate_field(Field&& rhs, State x, double duration, double step) {
  const long steps = step_count(duration, step);
  for (long s = 0; s < steps; ++s) x = rk4_step(rhs, x, step);
  return x;
}

namespace detail {

inline void clamp_or_throw(State& x, long step_index) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x(i) < 0.0) {
      if (x(i) < -kClampThreshold) {
        throw Error(ErrorCode::kStateEscapedDomain,
                    "component " + std::to_string(i) + " reached " + std::to_string(x(i)) + " at step " +
                        std::to_string(step_index) + " (step too large?)");
      }
      x(i) = 0.0;
    }
  }
}

}  // namespace detail

/// RK4 approximation of the MAK flow F^t(x0).
inline State integrate(const StoichiometricNetwork& net, State x0, double duration, const IntegratorConfig& cfg) {
  detail::check_dimension(net, x0);
  if ((x0.array() < 0.0).any()) {
    throw Error(ErrorCode::kNegativeConcentration, "initial state must be nonnegative");
  }
  const long steps = step_count(duration, cfg.step);
  const auto rhs = [&net](const State& x) { return mak_rhs_unchecked(net, x); };
  for (long s = 0; s < steps; ++s) {
    x0 = rk4_step(rhs, x0, cfg.step);
    detail::clamp_or_throw(x0, s);
  }
  return x0;
}

/// `points` states spaced `dt` apart, starting at x0. Each state is produced
/// by integrate() on its predecessor so that consecutive pairs are exactly
/// reproducible.
inline std::vector<State> integrate_trajectory(const StoichiometricNetwork& net, const State& x0, int points,
                                               double dt, const IntegratorConfig& cfg) {
  std::vector<State> out;
  out.reserve(points);
  out.push_back(x0);
  for (int k = 1; k < points; ++k) out.push_back(integrate(net, out.back(), dt, cfg));
  return out;
}

}  // namespace makbasin
