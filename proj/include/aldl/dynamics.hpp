#pragma once

// Equations of motion:
//
//   ald_direct       m0 a = f_ext + kappa e^2 ((a.a) u + jerk), state (z, u, a)
//   landau_lifshitz  m0 a = f_ext + kappa e^2 ((a_L.a_L) u + d a_L / dtau),
//                    a_L = f_ext / m0, state (z, u)
//   ald_langevin     m0 a = f_ext - 2 kappa e^2 P_u W + eta_perp,
//                    W(tau) = int_0^r k_R(s) a(tau - s) ds, state (z, u) + memory
//
// The Langevin memory integral expands to m(r) a = f_ext + e^2 g2(r) (a^2 u + jerk)
// + O(1/lambda), see kernels.hpp. For the exponential scheme W obeys
// W' = (lambda^2 / 2) a - lambda W exactly; the gaussian scheme integrates
// by parts over a stored (u, a) history instead.

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "aldl/core.hpp"
#include "aldl/error.hpp"
#include "aldl/kernels.hpp"
#include "aldl/noise.hpp"

namespace aldl {

enum class Integrator { ald_direct, landau_lifshitz, ald_langevin };

inline std::string to_string(Integrator i) {
  switch (i) {
    case Integrator::ald_direct: return "ald_direct";
    case Integrator::landau_lifshitz: return "landau_lifshitz";
    case Integrator::ald_langevin: return "ald_langevin";
  }
  return "unknown";
}

inline constexpr double kShellRenormalize = 1e-6;
inline constexpr double kShellAbort = 1e-3;
inline constexpr double kMaxLangevinStep = 0.2;  // dtau * lambda

struct SimConfig {
  Integrator integrator = Integrator::ald_langevin;
  ExternalField field = NoField{};
  KernelConfig kernel;
  double m0 = 1.0;
  /// Sign of the charge; its magnitude is sqrt(kernel.e_squared).
  double charge_sign = 1.0;
  /// Number of grid points (the run performs n_steps - 1 steps).
  std::size_t n_steps = 2;
  double dtau = 1e-3;
  std::size_t ensemble_size = 1;
  std::uint64_t master_seed = 0;
  WorldlineState initial_state;
  /// ald_direct only: use initial_state.acceleration instead of the
  /// Landau-Lifshitz value. Ignored by the other integrators.
  bool acceleration_override = false;
  /// Apply eta - (eta.u) u instead of eta.
  bool project_noise = true;

  double charge() const { return charge_sign * std::sqrt(kernel.e_squared); }

  void validate() const {
    kernel.validate();
    if (n_steps < 2) throw Error(ErrorKind::config, "grid.n_steps must be >= 2");
    if (!(dtau > 0.0) || !std::isfinite(dtau)) throw Error(ErrorKind::config, "grid.dtau must be > 0");
    if (ensemble_size < 1) throw Error(ErrorKind::config, "ensemble.size must be >= 1");
    if (charge_sign != 1.0 && charge_sign != -1.0) {
      throw Error(ErrorKind::config, "charge_sign must be +1 or -1");
    }
    const double shell = minkowski_dot(initial_state.velocity, initial_state.velocity);
    if (!(initial_state.velocity.t > 0.0) || std::abs(shell - 1.0) > 1e-9) {
      throw Error(ErrorKind::gauge_violation, "initial velocity must be a unit future-directed vector");
    }
    if (integrator == Integrator::ald_langevin) {
      if (!(dtau * kernel.lambda < kMaxLangevinStep)) {
        throw Error(ErrorKind::config,
                    "grid resolution: dtau * lambda = " + std::to_string(dtau * kernel.lambda) +
                        " must be < 0.2 to resolve the cutoff transition");
      }
      if (!(m0 > 0.0)) {
        throw Error(ErrorKind::unphysical_mass, "bare mass m0 must be > 0 so that m(r) > 0");
      }
    } else {
      if (!(m0 > 0.0)) throw Error(ErrorKind::config, "mass must be > 0");
      if (integrator == Integrator::ald_direct && !(kernel.e_squared > 0.0)) {
        throw Error(ErrorKind::config, "ald_direct needs e_squared > 0");
      }
    }
  }
};

struct TrajectoryResult {
  Integrator integrator = Integrator::ald_langevin;
  Trajectory trajectory;
  /// Per sample: |u.u - 1|, external power f_ext^0, f_RR.u, inertial mass.
  std::vector<double> mass_shell_drift;
  std::vector<double> external_power;
  std::vector<double> rr_dot_u;
  std::vector<double> inertial_mass;
  double energy_radiated = 0.0;
  std::size_t renormalizations = 0;
  bool runaway_flag = false;
  double efold_rate = 0.0;
  std::optional<std::uint64_t> noise_seed;

  double max_mass_shell_drift() const {
    return mass_shell_drift.empty() ? 0.0
                                    : *std::max_element(mass_shell_drift.begin(), mass_shell_drift.end());
  }
};

// ---------------------------------------------------------------------------
// Forces

/// Late-time radiation-reaction force kappa e^2 ((a.a) u + jerk).
inline FourVector ald_force(const FourVector& u, const FourVector& a, const FourVector& jerk,
                            const KernelConfig& config) {
  return config.e_squared * config.kappa * (minkowski_dot(a, a) * u + jerk);
}

/// Jerk solving mass * a = f_ext + kappa e^2 ((a.a) u + jerk).
inline FourVector ald_jerk(const FourVector& u, const FourVector& a, const FourVector& f_ext,
                           double mass, const KernelConfig& config) {
  return (mass * a - f_ext) / (config.e_squared * config.kappa) - minkowski_dot(a, a) * u;
}

/// d/dtau of a_L = f_ext / mass along the trajectory through (x, u).
inline FourVector landau_lifshitz_jerk(const FourVector& x, const FourVector& u, double mass,
                                       double e, const ExternalField& field) {
  if (is_zero_field(field)) return {};
  const FieldTensor f = field_tensor(field, x);
  const FourVector a_l = e / mass * contract_lowered(f, u);
  return e / mass *
         (contract_lowered(field_tensor_derivative(field, x, u), u) + contract_lowered(f, a_l));
}

/// Landau-Lifshitz reduced radiation-reaction force at (x, u).
inline FourVector landau_lifshitz_force(const FourVector& x, const FourVector& u, double mass,
                                        double e, const ExternalField& field,
                                        const KernelConfig& config) {
  if (is_zero_field(field)) return {};
  const FourVector a_l = e / mass * lorentz_force(1.0, field, x, u);
  return ald_force(u, a_l, landau_lifshitz_jerk(x, u, mass, e, field), config);
}

/// Jerk of the local (truncated n = 2) Langevin equation
///   m(r) a = f_ext + e^2 g2(r) ((a.a) u + jerk) + eta,
/// i.e. the memory equation expanded to second order about tau.
inline FourVector langevin_local_jerk(const WorldlineState& state, double r, const SimConfig& config,
                                      const FourVector& eta = {}) {
  const double g2 = g2_coefficient(r, config.kernel);
  if (!(g2 > 0.0) || !(config.kernel.e_squared > 0.0)) {
    throw Error(ErrorKind::domain, "local Langevin jerk is undefined where e^2 g2(r) = 0");
  }
  const double m = effective_mass(r, config.m0, config.kernel);
  const FourVector f_ext =
      lorentz_force(config.charge(), config.field, state.position, state.velocity);
  const FourVector& u = state.velocity;
  const FourVector& a = state.acceleration;
  return (m * a - f_ext - eta) / (config.kernel.e_squared * g2) - minkowski_dot(a, a) * u;
}

// ---------------------------------------------------------------------------
// Deterministic single steps

namespace detail {

/// Applies the mass-shell policy; returns true if the state was renormalised.
inline bool enforce_mass_shell(WorldlineState& s) {
  const double drift = std::abs(minkowski_dot(s.velocity, s.velocity) - 1.0);
  if (!(drift <= kShellAbort)) {
    throw Error(ErrorKind::numerical_abort,
                "mass-shell drift " + std::to_string(drift) + " at tau = " + std::to_string(s.tau));
  }
  if (drift <= kShellRenormalize) return false;
  s.velocity = normalize_velocity(s.velocity);
  s.acceleration = project_orthogonal(s.acceleration, s.velocity);
  return true;
}

struct ExtendedState {
  FourVector z, u, a;
};

inline ExtendedState axpy(const ExtendedState& y, double h, const ExtendedState& k) {
  return {y.z + h * k.z, y.u + h * k.u, y.a + h * k.a};
}

}  // namespace detail

/// Initial acceleration on the non-runaway branch: (f_ext + f_LL) / m0.
inline FourVector landau_lifshitz_acceleration(const FourVector& x, const FourVector& u,
                                               const SimConfig& config) {
  const double e = config.charge();
  return (lorentz_force(e, config.field, x, u) +
          landau_lifshitz_force(x, u, config.m0, e, config.field, config.kernel)) /
         config.m0;
}

namespace detail {

inline WorldlineState step_ald_impl(const WorldlineState& state, const SimConfig& config,
                                    bool& renormalized) {
  const double e = config.charge();
  auto rhs = [&](const detail::ExtendedState& y) {
    const FourVector f = lorentz_force(e, config.field, y.z, y.u);
    return detail::ExtendedState{y.u, y.a, ald_jerk(y.u, y.a, f, config.m0, config.kernel)};
  };
  const double h = config.dtau;
  const detail::ExtendedState y0{state.position, state.velocity, state.acceleration};
  const auto k1 = rhs(y0);
  const auto k2 = rhs(detail::axpy(y0, 0.5 * h, k1));
  const auto k3 = rhs(detail::axpy(y0, 0.5 * h, k2));
  const auto k4 = rhs(detail::axpy(y0, h, k3));
  WorldlineState next;
  next.tau = state.tau + h;
  next.position = y0.z + (h / 6.0) * (k1.z + 2.0 * k2.z + 2.0 * k3.z + k4.z);
  next.velocity = y0.u + (h / 6.0) * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u);
  next.acceleration = y0.a + (h / 6.0) * (k1.a + 2.0 * k2.a + 2.0 * k3.a + k4.a);
  renormalized = enforce_mass_shell(next);
  next.jerk = rhs({next.position, next.velocity, next.acceleration}).a;
  return next;
}

}  // namespace detail

/// One classical RK4 step of the third-order ALD system (z, u, a).
inline WorldlineState step_ald(const WorldlineState& state, const SimConfig& config) {
  bool renormalized = false;
  return detail::step_ald_impl(state, config, renormalized);
}

namespace detail {

inline WorldlineState step_landau_lifshitz_impl(const WorldlineState& state,
                                                const SimConfig& config, bool& renormalized) {
  const double e = config.charge();
  auto accel = [&](const FourVector& z, const FourVector& u) {
    return (lorentz_force(e, config.field, z, u) +
            landau_lifshitz_force(z, u, config.m0, e, config.field, config.kernel)) /
           config.m0;
  };
  const double h = config.dtau;
  const FourVector& z0 = state.position;
  const FourVector& u0 = state.velocity;
  const FourVector a1 = accel(z0, u0);
  const FourVector u1 = u0;
  const FourVector a2 = accel(z0 + 0.5 * h * u1, u0 + 0.5 * h * a1);
  const FourVector u2 = u0 + 0.5 * h * a1;
  const FourVector a3 = accel(z0 + 0.5 * h * u2, u0 + 0.5 * h * a2);
  const FourVector u3 = u0 + 0.5 * h * a2;
  const FourVector a4 = accel(z0 + h * u3, u0 + h * a3);
  const FourVector u4 = u0 + h * a3;

  WorldlineState next;
  next.tau = state.tau + h;
  next.position = z0 + (h / 6.0) * (u1 + 2.0 * u2 + 2.0 * u3 + u4);
  next.velocity = u0 + (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
  renormalized = enforce_mass_shell(next);
  next.acceleration = accel(next.position, next.velocity);
  next.jerk = landau_lifshitz_jerk(next.position, next.velocity, config.m0, e, config.field);
  return next;
}

}  // namespace detail

/// One RK4 step of the reduced-order (Landau-Lifshitz) system (z, u).
inline WorldlineState step_landau_lifshitz(const WorldlineState& state, const SimConfig& config) {
  bool renormalized = false;
  return detail::step_landau_lifshitz_impl(state, config, renormalized);
}

// ---------------------------------------------------------------------------
// Run bookkeeping

namespace detail {

class Recorder {
 public:
  Recorder(const SimConfig& config, std::size_t reserve) : config_(config) {
    result_.integrator = config.integrator;
    result_.trajectory.dtau = config.dtau;
    result_.trajectory.samples.reserve(reserve);
    for (auto* v : {&result_.mass_shell_drift, &result_.external_power, &result_.rr_dot_u,
                    &result_.inertial_mass}) {
      v->reserve(reserve);
    }
  }

  void record(const WorldlineState& s, const FourVector& f_rr, double mass, double larmor_coeff) {
    const FourVector f_ext =
        lorentz_force(config_.charge(), config_.field, s.position, s.velocity);
    result_.trajectory.samples.push_back(s);
    result_.mass_shell_drift.push_back(std::abs(minkowski_dot(s.velocity, s.velocity) - 1.0));
    result_.external_power.push_back(f_ext.t);
    result_.rr_dot_u.push_back(minkowski_dot(f_rr, s.velocity));
    result_.inertial_mass.push_back(mass);
    larmor_.push_back(larmor_coeff * -minkowski_dot(s.acceleration, s.acceleration) * s.velocity.t);
  }

  void note_renormalization(bool renormalized, double tau) {
    if (!renormalized) return;
    if (result_.renormalizations++ == 0) {
      std::clog << "warning[dynamics]: mass-shell drift above " << kShellRenormalize
                << " at tau = " << tau << "; renormalising\n";
    }
  }

  TrajectoryResult finish();

 private:
  const SimConfig& config_;
  TrajectoryResult result_;
  std::vector<double> larmor_;
};

/// Composite Simpson on a uniform grid (trapezoid on a trailing odd interval).
inline double integrate_uniform(std::span<const double> f, double h) {
  const std::size_t n = f.size();
  if (n < 2) return 0.0;
  const std::size_t simpson_end = (n - 1) % 2 == 0 ? n - 1 : n - 2;
  double sum = 0.0;
  for (std::size_t i = 0; i + 2 <= simpson_end; i += 2) {
    sum += h / 3.0 * (f[i] + 4.0 * f[i + 1] + f[i + 2]);
  }
  if (simpson_end != n - 1) sum += 0.5 * h * (f[n - 2] + f[n - 1]);
  return sum;
}

}  // namespace detail

struct RunawayReport {
  bool flag = false;
  double efold_rate = 0.0;
  double r_squared = 0.0;
};

/// Fits log|a| against tau over the final third of the run. A runaway is
/// a positive rate with R^2 > 0.99 and a fitted growth above 1e-6 e-folds.
inline RunawayReport runaway_diagnostic(const TrajectoryResult& result) {
  const auto& s = result.trajectory.samples;
  if (s.size() < 100) throw Error(ErrorKind::domain, "runaway_diagnostic needs >= 100 samples");
  const std::size_t begin = s.size() - s.size() / 3;
  const std::size_t n = s.size() - begin;
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& st = s[begin + i];
    const double mag = std::sqrt(std::max(0.0, -minkowski_dot(st.acceleration, st.acceleration)));
    if (!(mag > 1e-300) || !std::isfinite(mag)) return {};
    xs[i] = st.tau;
    ys[i] = std::log(mag);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  RunawayReport out;
  out.efold_rate = sxy / sxx;
  out.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 0.0;
  const double growth = out.efold_rate * (xs.back() - xs.front());
  out.flag = out.efold_rate > 0.0 && out.r_squared > 0.99 && growth > 1e-6;
  return out;
}

inline TrajectoryResult detail::Recorder::finish() {
  result_.energy_radiated = integrate_uniform(larmor_, config_.dtau);
  if (result_.trajectory.samples.size() >= 100) {
    const auto rep = runaway_diagnostic(result_);
    result_.runaway_flag = rep.flag;
    result_.efold_rate = rep.efold_rate;
  }
  return std::move(result_);
}

struct EnergyAudit {
  double work_external = 0.0;
  double kinetic_change = 0.0;
  double max_rr_dot_u = 0.0;
};

/// Lab-frame bookkeeping: int f_ext^0 dtau against Delta(m u^0).
inline EnergyAudit energy_audit(const TrajectoryResult& result) {
  EnergyAudit out;
  const auto& s = result.trajectory.samples;
  if (s.empty()) return out;
  out.work_external = detail::integrate_uniform(result.external_power, result.trajectory.dtau);
  out.kinetic_change =
      result.inertial_mass.back() * s.back().velocity.t - result.inertial_mass.front() * s.front().velocity.t;
  for (double v : result.rr_dot_u) out.max_rr_dot_u = std::max(out.max_rr_dot_u, std::abs(v));
  return out;
}

/// Non-runaway 1D acceleration for a step force F0 theta(t): the response
/// starts before the force does.
inline double preacceleration_reference(double f0, double m, double tau0, double t) {
  if (!(tau0 > 0.0)) throw Error(ErrorKind::domain, "preacceleration_reference needs tau0 > 0");
  return t < 0.0 ? f0 / m * std::exp(t / tau0) : f0 / m;
}

// ---------------------------------------------------------------------------
// Drivers

inline TrajectoryResult simulate_ald_direct(const SimConfig& config) {
  config.validate();
  detail::Recorder rec(config, config.n_steps);
  WorldlineState s = config.initial_state;
  s.acceleration = config.acceleration_override
                       ? config.initial_state.acceleration
                       : landau_lifshitz_acceleration(s.position, s.velocity, config);
  const double e = config.charge();
  auto f_ext_at = [&](const WorldlineState& st) {
    return lorentz_force(e, config.field, st.position, st.velocity);
  };
  s.jerk = ald_jerk(s.velocity, s.acceleration, f_ext_at(s), config.m0, config.kernel);
  const double coeff = config.kernel.e_squared * config.kernel.kappa;
  rec.record(s, ald_force(s.velocity, s.acceleration, s.jerk, config.kernel), config.m0, coeff);
  for (std::size_t k = 1; k < config.n_steps; ++k) {
    bool renormalized = false;
    WorldlineState next = detail::step_ald_impl(s, config, renormalized);
    rec.note_renormalization(renormalized, next.tau);
    next.tau = config.initial_state.tau + static_cast<double>(k) * config.dtau;
    rec.record(next, ald_force(next.velocity, next.acceleration, next.jerk, config.kernel), config.m0,
               coeff);
    s = next;
  }
  return rec.finish();
}

inline TrajectoryResult simulate_landau_lifshitz(const SimConfig& config) {
  config.validate();
  detail::Recorder rec(config, config.n_steps);
  const double e = config.charge();
  WorldlineState s = config.initial_state;
  s.acceleration = landau_lifshitz_acceleration(s.position, s.velocity, config);
  auto f_ll = [&](const WorldlineState& st) {
    return landau_lifshitz_force(st.position, st.velocity, config.m0, e, config.field, config.kernel);
  };
  const double coeff = config.kernel.e_squared * config.kernel.kappa;
  rec.record(s, f_ll(s), config.m0, coeff);
  for (std::size_t k = 1; k < config.n_steps; ++k) {
    bool renormalized = false;
    WorldlineState next = detail::step_landau_lifshitz_impl(s, config, renormalized);
    rec.note_renormalization(renormalized, next.tau);
    next.tau = config.initial_state.tau + static_cast<double>(k) * config.dtau;
    rec.record(next, f_ll(next), config.m0, coeff);
    s = next;
  }
  return rec.finish();
}

namespace detail {

/// Noise value at tau_k + c * dtau for c in {0, 1/2, 1}.
inline FourVector noise_at(const NoisePath* noise, std::size_t k, double c) {
  if (noise == nullptr) return {};
  const auto& v = noise->samples;
  const std::size_t n = v.size();
  if (c == 0.0) return v[k];
  if (c == 1.0) return v[k + 1];
  if (n < 3) return 0.5 * (v[k] + v[k + 1]);
  if (k >= 1 && k + 2 < n) return (-v[k - 1] + 9.0 * v[k] + 9.0 * v[k + 1] - v[k + 2]) / 16.0;
  if (k == 0) return (3.0 * v[0] + 6.0 * v[1] - v[2]) / 8.0;
  return (-v[k - 1] + 6.0 * v[k] + 3.0 * v[k + 1]) / 8.0;
}

/// d k_R / ds for s >= 0 (gaussian scheme; used by the history quadrature).
inline double gaussian_kernel_slope(double s, double lambda) {
  const double x = lambda * s;
  return -2.0 * lambda * lambda * lambda * x * std::exp(-x * x);
}

/// Quadrature weights for the gaussian memory integral in the by-parts form
///   W(t) = k(0) u(t) - k(t - t_lo) u(t_lo) + int_{t_lo}^{t} k'(t - t') u(t') dt'.
/// Past intervals use the cubic Hermite interpolant of (u, a) at the grid
/// points. The interval ending at the evaluation time uses the quadratic
/// through (u, a) at its left end and u at its right end, so the unknown
/// acceleration never enters. For evaluation time tau_k + c dtau,
/// c in {0, 1/2, 1}, weights depend only on the interval's lag.
class GaussianHistoryWeights {
 public:
  GaussianHistoryWeights(double lambda, double h, std::size_t intervals) : h_(h) {
    for (std::size_t ci = 0; ci < 3; ++ci) {
      const double c = 0.5 * static_cast<double>(ci);
      auto& tab = hermite_[ci];
      tab.resize(intervals);
      // Interval q spans s in [(q + c) h, (q + 1 + c) h]; tau' = tau_j + theta h.
      for (std::size_t q = 0; q < intervals; ++q) {
        const double off = static_cast<double>(q) + 1.0 + c;
        tab[q] = {integrate([&](double th) { return h00(th); }, off, lambda, 1.0),
                  h * integrate([&](double th) { return h10(th); }, off, lambda, 1.0),
                  integrate([&](double th) { return h01(th); }, off, lambda, 1.0),
                  h * integrate([&](double th) { return h11(th); }, off, lambda, 1.0)};
      }
      // Adjacent interval of length L = c h (c > 0) or h (c = 0, the last
      // full interval), s = (1 - theta) L.
      const double span = ci == 0 ? 1.0 : c;
      adjacent_[ci] = {integrate([](double th) { return 1.0 - th * th; }, 1.0, lambda, span),
                       span * h * integrate([](double th) { return th * (1.0 - th); }, 1.0, lambda, span),
                       integrate([](double th) { return th * th; }, 1.0, lambda, span)};
    }
  }

  /// {u_j, a_j, u_{j+1}, a_{j+1}} weights for past interval q at stage c.
  const std::array<double, 4>& hermite(std::size_t ci, std::size_t q) const { return hermite_[ci][q]; }
  /// {u_left, a_left, u_right} weights for the adjacent interval.
  const std::array<double, 3>& adjacent(std::size_t ci) const { return adjacent_[ci]; }

 private:
  static double h00(double t) { return (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t); }
  static double h10(double t) { return t * (1.0 - t) * (1.0 - t); }
  static double h01(double t) { return t * t * (3.0 - 2.0 * t); }
  static double h11(double t) { return t * t * (t - 1.0); }

  // span * h * int_0^1 k'((off - theta) span h) basis(theta) dtheta
  template <class F>
  double integrate(F basis, double off, double lambda, double span) const {
    const double len = span * h_;
    auto f = [&](double th) { return gaussian_kernel_slope((off - th) * len, lambda) * basis(th); };
    return len * boost::math::quadrature::gauss<double, 20>::integrate(f, 0.0, 1.0);
  }

  double h_;
  std::array<std::vector<std::array<double, 4>>, 3> hermite_;
  std::array<std::array<double, 3>, 3> adjacent_{};
};

class LangevinIntegrator {
 public:
  LangevinIntegrator(const SimConfig& config, const NoisePath* noise)
      : c_(config),
        noise_(noise),
        e_(config.charge()),
        drag_(2.0 * config.kernel.kappa * config.kernel.e_squared),
        exponential_(config.kernel.scheme == CutoffScheme::exponential) {
    if (!exponential_) {
      // k_R(8 / lambda) / k_R(0) = e^{-64}
      window_ = static_cast<std::size_t>(std::ceil(8.0 / (config.kernel.lambda * config.dtau)));
      weights_.emplace(config.kernel.lambda, config.dtau, window_);
      hist_u_.reserve(config.n_steps);
      hist_a_.reserve(config.n_steps);
    }
  }

  TrajectoryResult run() {
    Recorder rec(c_, c_.n_steps);
    WorldlineState s;
    s.tau = c_.initial_state.tau;
    s.position = c_.initial_state.position;
    s.velocity = c_.initial_state.velocity;
    FourVector memory;  // W, exponential scheme

    auto finalize = [&](WorldlineState& st, const FourVector& w, std::size_t k) {
      const FourVector f_rr = rr_force(st, w, k, 0);
      st.acceleration = accel(st, f_rr, k, 0.0);
      const double r = st.tau - c_.initial_state.tau;
      const double g2 = g2_coefficient(r, c_.kernel);
      // The memory form never needs da/dtau; jerk is left zero.
      st.jerk = FourVector{};
      if (!exponential_) {
        hist_u_.push_back(st.velocity);
        hist_a_.push_back(st.acceleration);
      }
      rec.record(st, f_rr, effective_mass(r, c_.m0, c_.kernel), c_.kernel.e_squared * g2);
    };

    finalize(s, memory, 0);
    for (std::size_t k = 0; k + 1 < c_.n_steps; ++k) {
      const double h = c_.dtau;
      struct Deriv {
        FourVector dz, du, dw;
      };
      auto eval = [&](const FourVector& z, const FourVector& u, const FourVector& w, std::size_t ci) {
        WorldlineState st;
        st.tau = s.tau + 0.5 * static_cast<double>(ci) * h;
        st.position = z;
        st.velocity = u;
        const FourVector f_rr = rr_force(st, w, k, ci);
        const FourVector a = accel(st, f_rr, k, 0.5 * static_cast<double>(ci));
        const double l = c_.kernel.lambda;
        return Deriv{u, a, exponential_ ? 0.5 * l * l * a - l * w : FourVector{}};
      };
      const auto k1 = eval(s.position, s.velocity, memory, 0);
      const auto k2 = eval(s.position + 0.5 * h * k1.dz, s.velocity + 0.5 * h * k1.du,
                           memory + 0.5 * h * k1.dw, 1);
      const auto k3 = eval(s.position + 0.5 * h * k2.dz, s.velocity + 0.5 * h * k2.du,
                           memory + 0.5 * h * k2.dw, 1);
      const auto k4 = eval(s.position + h * k3.dz, s.velocity + h * k3.du, memory + h * k3.dw, 2);

      WorldlineState next;
      next.tau = c_.initial_state.tau + static_cast<double>(k + 1) * h;
      next.position = s.position + (h / 6.0) * (k1.dz + 2.0 * k2.dz + 2.0 * k3.dz + k4.dz);
      next.velocity = s.velocity + (h / 6.0) * (k1.du + 2.0 * k2.du + 2.0 * k3.du + k4.du);
      memory += (h / 6.0) * (k1.dw + 2.0 * k2.dw + 2.0 * k3.dw + k4.dw);
      rec.note_renormalization(enforce_mass_shell(next), next.tau);
      finalize(next, memory, k + 1);
      s = next;
    }
    return rec.finish();
  }

 private:
  // Radiation-reaction force at stage time tau_k + (ci / 2) dtau.
  FourVector rr_force(const WorldlineState& st, const FourVector& w, std::size_t k,
                      std::size_t ci) const {
    if (drag_ == 0.0) return {};
    if (exponential_) return -drag_ * project_orthogonal(w, st.velocity);
    return -drag_ * project_orthogonal(history_integral(st, k, ci), st.velocity);
  }

  // W at t = tau_k + (ci / 2) dtau with u(t) = st.velocity. Grid values up
  // to tau_{k-1} (ci = 0) or tau_k (ci > 0) are read from the history.
  FourVector history_integral(const WorldlineState& st, std::size_t k, std::size_t ci) const {
    const double h = c_.dtau;
    const double c = 0.5 * static_cast<double>(ci);
    const FourVector& u_now = st.velocity;
    // Full intervals [tau_j, tau_{j+1}] with j + 1 <= k, Hermite except the
    // one ending at t when ci = 0.
    const std::size_t n_full = std::min(k, window_);
    const std::size_t j_lo = k - n_full;
    FourVector acc = retarded_kernel(0.0, c_.kernel) * u_now;
    const FourVector& u_lo = (ci == 0 && j_lo == k) ? u_now : hist_u_[j_lo];
    acc -= retarded_kernel((static_cast<double>(k - j_lo) + c) * h, c_.kernel) * u_lo;

    for (std::size_t q = 0; q < n_full; ++q) {
      const std::size_t j = k - 1 - q;
      if (ci == 0 && q == 0) {
        const auto& w = weights_->adjacent(0);
        acc += w[0] * hist_u_[j] + w[1] * hist_a_[j] + w[2] * u_now;
        continue;
      }
      const auto& w = weights_->hermite(ci, q);
      acc += w[0] * hist_u_[j] + w[1] * hist_a_[j] + w[2] * hist_u_[j + 1] + w[3] * hist_a_[j + 1];
    }
    if (ci > 0) {
      const auto& w = weights_->adjacent(ci);
      acc += w[0] * hist_u_[k] + w[1] * hist_a_[k] + w[2] * u_now;
    }
    return acc;
  }

  FourVector accel(const WorldlineState& st, const FourVector& f_rr, std::size_t k,
                   double cfrac) const {
    FourVector force = lorentz_force(e_, c_.field, st.position, st.velocity) + f_rr;
    const FourVector eta = noise_at(noise_, k, cfrac);
    force += c_.project_noise ? project_orthogonal(eta, st.velocity) : eta;
    return force / c_.m0;
  }

  const SimConfig& c_;
  const NoisePath* noise_;
  double e_;
  double drag_;
  bool exponential_;
  std::size_t window_ = 0;
  std::optional<GaussianHistoryWeights> weights_;
  std::vector<FourVector> hist_u_;
  std::vector<FourVector> hist_a_;
};

}  // namespace detail

/// Integrates the ALD-Langevin memory equation on the config grid. With a
/// null or all-zero noise path the run is deterministic.
inline TrajectoryResult integrate_langevin(const SimConfig& config, const NoisePath* noise) {
  config.validate();
  if (noise != nullptr && (noise->size() != config.n_steps || noise->dtau != config.dtau)) {
    throw Error(ErrorKind::grid, "noise grid does not match the simulation grid");
  }
  detail::LangevinIntegrator integ(config, noise);
  auto result = integ.run();
  if (noise != nullptr) result.noise_seed = noise->seed;
  return result;
}

inline TrajectoryResult integrate_langevin(const SimConfig& config, const NoisePath& noise) {
  return integrate_langevin(config, &noise);
}

/// Deterministic run of the configured integrator (eta = 0 for ald_langevin).
inline TrajectoryResult simulate(const SimConfig& config) {
  switch (config.integrator) {
    case Integrator::ald_direct: return simulate_ald_direct(config);
    case Integrator::landau_lifshitz: return simulate_landau_lifshitz(config);
    case Integrator::ald_langevin: return integrate_langevin(config, nullptr);
  }
  throw Error(ErrorKind::config, "unknown integrator");
}

/// Ensemble of ald_langevin runs with per-path seeds derive_seed(master, k).
/// Results are ordered by path index regardless of worker count.
inline std::vector<TrajectoryResult> run_ensemble(const SimConfig& config, std::size_t workers,
                                                  const NoiseOptions& noise_options = {}) {
  config.validate();
  if (config.integrator != Integrator::ald_langevin) {
    throw Error(ErrorKind::config, "ensembles require the ald_langevin integrator");
  }
  std::vector<TrajectoryResult> results(config.ensemble_size);
  std::vector<std::exception_ptr> errors(config.ensemble_size);
  const std::size_t n_workers = std::clamp<std::size_t>(workers, 1, config.ensemble_size);

  auto work = [&](std::size_t worker) {
    for (std::size_t k = worker; k < config.ensemble_size; k += n_workers) {
      try {
        const auto noise = sample_noise_path(config.kernel, config.n_steps, config.dtau,
                                             derive_seed(config.master_seed, k), noise_options);
        results[k] = integrate_langevin(config, noise);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  if (n_workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(work, w);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

}  // namespace aldl
