#pragma once

// Fixed-step RK4 propagation of the variational equations of motion, with
// per-record energy and leakage-rate monitoring and a trapezoid-rule
// accumulated leakage integral int Gamma dt.
//
// Angles are never reduced here: the state carries the raw accumulated
// coordinates, and the site derivation does its own periodic reduction.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "pxpdyn/dynamics.hpp"
#include "pxpdyn/errors.hpp"
#include "pxpdyn/leakage.hpp"
#include "pxpdyn/model.hpp"

namespace pxpdyn {

enum class RhsKind { exact, series, spin_half, large_j };

inline const char* to_string(RhsKind k) {
  switch (k) {
    case RhsKind::exact: return "exact";
    case RhsKind::series: return "series";
    case RhsKind::spin_half: return "spin_half";
    case RhsKind::large_j: return "large_j";
  }
  return "unknown";
}

enum class Termination { completed, pole_event, degenerate_event, nonfinite_event };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::completed: return "completed";
    case Termination::pole_event: return "pole_event";
    case Termination::degenerate_event: return "degenerate_event";
    case Termination::nonfinite_event: return "nonfinite_event";
  }
  return "unknown";
}

struct Trajectory {
  std::vector<double> times;
  std::vector<VariationalState> states;
  std::vector<double> energy;               // variational energy per unit cell
  std::vector<double> gamma2;               // leakage rate density at each record
  std::vector<double> accumulated_leakage;  // trapezoid of sqrt(max(gamma2, 0))
  Termination termination = Termination::completed;
};

namespace detail {

inline constexpr double kSeriesTruncEps = 1e-14;

inline PhaseVelocity eval_rhs(const ModelParams& p, const VariationalState& y, RhsKind rhs,
                              double series_eps) {
  switch (rhs) {
    case RhsKind::exact: return eom_exact(p, y);
    case RhsKind::series: return eom_series(p, y, series_eps);
    case RhsKind::spin_half: return eom_spin_half(p, y);
    case RhsKind::large_j: return eom_large_j(p, y);
  }
  throw validation_error("unknown RHS kind");
}

// Re-raise the in-flight EOM error with the RK4 sub-step appended, keeping
// the concrete type so callers can still classify the event.
[[noreturn]] inline void rethrow_tagged(const char* stage) {
  const std::string tag = std::string(" [RK4 sub-step ") + stage + "]";
  try {
    throw;
  } catch (const pole_error& e) {
    throw pole_error(e.what() + tag);
  } catch (const degenerate_error& e) {
    throw degenerate_error(e.what() + tag);
  } catch (const resonance_error& e) {
    throw resonance_error(e.what() + tag);
  } catch (const convergence_error& e) {
    throw convergence_error(e.what() + tag);
  }
}

inline VariationalState shifted(const VariationalState& y, const PhaseVelocity& k, double a) {
  VariationalState out = y;
  for (std::size_t i = 0; i < y.theta.size(); ++i) {
    out.theta[i] += a * k.theta_dot[i];
    out.phi[i] += a * k.phi_dot[i];
  }
  return out;
}

inline bool finite_state(const VariationalState& y) {
  for (double t : y.theta)
    if (!std::isfinite(t)) return false;
  for (double f : y.phi)
    if (!std::isfinite(f)) return false;
  return true;
}

}  // namespace detail

// One classical RK4 step.  EOM failures at a sub-step are re-thrown with the
// sub-step name appended; configuration errors propagate unchanged.
inline VariationalState step(const VariationalState& y, const ModelParams& p, double dt,
                             RhsKind rhs, double series_eps = detail::kSeriesTruncEps) {
  PhaseVelocity k1, k2, k3, k4;
  // clang-format off
  try { k1 = detail::eval_rhs(p, y, rhs, series_eps); }
  catch (...) { detail::rethrow_tagged("k1"); }
  try { k2 = detail::eval_rhs(p, detail::shifted(y, k1, 0.5 * dt), rhs, series_eps); }
  catch (...) { detail::rethrow_tagged("k2"); }
  try { k3 = detail::eval_rhs(p, detail::shifted(y, k2, 0.5 * dt), rhs, series_eps); }
  catch (...) { detail::rethrow_tagged("k3"); }
  try { k4 = detail::eval_rhs(p, detail::shifted(y, k3, dt), rhs, series_eps); }
  catch (...) { detail::rethrow_tagged("k4"); }
  // clang-format on
  VariationalState out = y;
  for (std::size_t i = 0; i < y.theta.size(); ++i) {
    out.theta[i] +=
        dt / 6.0 * (k1.theta_dot[i] + 2.0 * k2.theta_dot[i] + 2.0 * k3.theta_dot[i] +
                    k4.theta_dot[i]);
    out.phi[i] += dt / 6.0 *
                  (k1.phi_dot[i] + 2.0 * k2.phi_dot[i] + 2.0 * k3.phi_dot[i] + k4.phi_dot[i]);
  }
  return out;
}

// Propagate from t = 0 to t_end with fixed step dt, recording every
// record_every steps (and always at t = 0 and the final step).  Numerical
// events (coordinate poles, transfer degeneracies, non-finite coordinates)
// terminate the run early and are reported in `termination`; the records up
// to the last healthy one are kept.
inline Trajectory evolve(const VariationalState& y0, const ModelParams& p, double t_end,
                         double dt, RhsKind rhs, int record_every = 1,
                         double series_eps = detail::kSeriesTruncEps) {
  validate(p);
  validate_state(p, y0);
  if (!(dt > 0.0)) throw validation_error("time step must be positive, got " + std::to_string(dt));
  if (t_end < 0.0) throw validation_error("t_end must be non-negative, got " + std::to_string(t_end));
  if (record_every < 1)
    throw validation_error("record_every must be >= 1, got " + std::to_string(record_every));

  const long long n_steps = std::llround(std::ceil(t_end / dt - 1e-12));
  Trajectory tr;

  auto record = [&](double t, const VariationalState& y) {
    const double e = variational_energy(p, y);
    const double g2 = leakage_rate(p, y).gamma2;
    const double g = std::sqrt(std::max(g2, 0.0));
    double acc = 0.0;
    if (!tr.times.empty()) {
      const double g_prev = std::sqrt(std::max(tr.gamma2.back(), 0.0));
      acc = tr.accumulated_leakage.back() + 0.5 * (g_prev + g) * (t - tr.times.back());
    }
    tr.times.push_back(t);
    tr.states.push_back(y);
    tr.energy.push_back(e);
    tr.gamma2.push_back(g2);
    tr.accumulated_leakage.push_back(acc);
  };

  VariationalState y = y0;
  try {
    record(0.0, y);
    for (long long k = 1; k <= n_steps; ++k) {
      y = step(y, p, dt, rhs, series_eps);
      if (!detail::finite_state(y)) {
        tr.termination = Termination::nonfinite_event;
        return tr;
      }
      if (k % record_every == 0 || k == n_steps) record(static_cast<double>(k) * dt, y);
    }
    tr.termination = Termination::completed;
  } catch (const pole_error&) {
    tr.termination = Termination::pole_event;
  } catch (const degenerate_error&) {
    tr.termination = Termination::degenerate_event;
  } catch (const resonance_error&) {
    tr.termination = Termination::pole_event;
  } catch (const convergence_error&) {
    tr.termination = Termination::pole_event;
  }
  return tr;
}

}  // namespace pxpdyn
