#pragma once

// Cutoff-regularised worldline kernels.
//
// One KernelConfig fixes the cutoff scheme for everything derived from it:
//
//   k_R(s)      retarded self-force memory kernel (mollified delta family),
//               drives the effective mass m(r) and the coefficient g2(r);
//   A(s)        worldline field commutator, whose odd spectrum is |w| C(w/L);
//   S(w)        Hadamard (noise) spectrum |w| coth(beta|w|/2) C(w/L);
//   k_H(s)      noise kernel, (1/pi) int_0^inf S(w) cos(ws) dw.
//
// The self-force is the causal memory integral
//   f_self(tau) = -2 kappa e^2 P_u int_0^r k_R(s) a(tau - s) ds,
// and expanding a(tau - s) about tau gives
//   m(r)  = m0 + 2 kappa e^2 int_0^r k_R(s) ds,
//   g2(r) =      2 kappa     int_0^r s k_R(s) ds,
// multiplying the ALD structure (a.a) u + jerk.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "aldl/core.hpp"
#include "aldl/error.hpp"
#include "aldl/fft.hpp"

namespace aldl {

enum class CutoffScheme { exponential, gaussian };

inline std::string to_string(CutoffScheme s) {
  return s == CutoffScheme::exponential ? "exponential" : "gaussian";
}

struct KernelConfig {
  CutoffScheme scheme = CutoffScheme::exponential;
  double lambda = 1.0;
  double e_squared = 1.0;
  /// Inverse temperature of the initial field state; infinity is the vacuum.
  double beta = std::numeric_limits<double>::infinity();
  double kappa = 1.0 / (2.0 * std::numbers::pi);

  bool is_vacuum() const { return std::isinf(beta); }

  void validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
      throw Error(ErrorKind::config, "kernel.lambda must be finite and > 0");
    }
    if (!(e_squared >= 0.0) || !std::isfinite(e_squared)) {
      throw Error(ErrorKind::config, "kernel.e_squared must be >= 0");
    }
    if (!(beta > 0.0)) throw Error(ErrorKind::config, "kernel.beta must be > 0 (or infinite)");
    if (!(kappa > 0.0) || !std::isfinite(kappa)) {
      throw Error(ErrorKind::config, "kernel.kappa must be > 0");
    }
  }
};

/// Frequency window C(x), x = w / lambda.
inline double cutoff_window(double x, CutoffScheme scheme) {
  return scheme == CutoffScheme::exponential ? std::exp(-std::abs(x)) : std::exp(-x * x);
}

/// k_R(s); zero for s < 0. Normalised so that int_0^inf s k_R(s) ds = 1/2
/// in both schemes (the exponential form also has int_0^inf k_R = lambda/2).
inline double retarded_kernel(double s, const KernelConfig& c) {
  if (s < 0.0) return 0.0;
  const double l = c.lambda;
  if (c.scheme == CutoffScheme::exponential) return 0.5 * l * l * std::exp(-l * s);
  return l * l * std::exp(-(l * s) * (l * s));
}

namespace detail {

// 1 - e^{-x}(1 + x), accurate for small x.
inline double one_minus_exp_times_1px(double x) {
  if (x < 0.1) {
    // sum_{n>=2} (-1)^n (n-1) x^n / n!
    double term = 1.0;  // x^n / n!
    double sum = 0.0;
    for (int n = 1; n <= 14; ++n) {
      term *= x / n;
      if (n >= 2) sum += ((n % 2 == 0) ? 1.0 : -1.0) * (n - 1) * term;
    }
    return sum;
  }
  return -std::expm1(-x) - x * std::exp(-x);
}

}  // namespace detail

/// int_0^r k_R(s) ds.
inline double retarded_moment0(double r, const KernelConfig& c) {
  if (r <= 0.0) return 0.0;
  const double l = c.lambda;
  if (c.scheme == CutoffScheme::exponential) return -0.5 * l * std::expm1(-l * r);
  return 0.5 * std::sqrt(std::numbers::pi) * l * std::erf(l * r);
}

/// int_0^r s k_R(s) ds.
inline double retarded_moment1(double r, const KernelConfig& c) {
  if (r <= 0.0) return 0.0;
  const double x = c.lambda * r;
  if (c.scheme == CutoffScheme::exponential) return 0.5 * detail::one_minus_exp_times_1px(x);
  return -0.5 * std::expm1(-x * x);
}

/// Time-dependent radiation-reaction coefficient; g2(0) = 0, g2(inf) = kappa.
inline double g2_coefficient(double r, const KernelConfig& c) {
  if (r < 0.0 || std::isnan(r)) {
    throw Error(ErrorKind::domain, "g2_coefficient requires r >= 0");
  }
  return 2.0 * c.kappa * retarded_moment1(r, c);
}

/// a0 in m(inf) = m0 + a0 * lambda.
inline double mass_shift_coefficient(const KernelConfig& c) {
  const double m0_factor =
      c.scheme == CutoffScheme::exponential ? 0.5 : 0.5 * std::sqrt(std::numbers::pi);
  return 2.0 * c.kappa * c.e_squared * m0_factor;
}

/// m(r) = m0 + 2 kappa e^2 int_0^r k_R. Monotone in r, so positivity on
/// [0, r] reduces to m0 > 0; a non-positive result is refused.
inline double effective_mass(double r, double m0, const KernelConfig& c) {
  if (r < 0.0 || std::isnan(r)) {
    throw Error(ErrorKind::domain, "effective_mass requires r >= 0");
  }
  if (!(m0 > 0.0)) {
    throw Error(ErrorKind::unphysical_mass,
                "bare mass m0 = " + std::to_string(m0) + " gives m(r) <= 0 at early times");
  }
  return m0 + 2.0 * c.kappa * c.e_squared * retarded_moment0(r, c);
}

inline double late_time_mass(double m0, const KernelConfig& c) {
  return m0 + mass_shift_coefficient(c) * c.lambda;
}

/// Worldline field commutator theta(s) A(s); its one-sided sine transform
/// int_0^inf A(s) sin(ws) ds equals |w| C(w / lambda) for w > 0.
inline double commutator_kernel(double s, const KernelConfig& c) {
  if (s < 0.0) return 0.0;
  const double l = c.lambda;
  if (c.scheme == CutoffScheme::exponential) {
    const double eps = 1.0 / l;
    const double d = eps * eps + s * s;
    return 4.0 / std::numbers::pi * eps * s / (d * d);
  }
  return l * l * l * s / (2.0 * std::sqrt(std::numbers::pi)) * std::exp(-0.25 * l * l * s * s);
}

/// w coth(beta w / 2) for w >= 0, continuous at w = 0 (value 2/beta).
inline double thermal_factor(double w, double beta) {
  if (std::isinf(beta)) return w;
  const double y = 0.5 * beta * w;
  if (y < 1e-4) {
    const double y2 = y * y;
    return 2.0 / beta * (1.0 + y2 / 3.0 - y2 * y2 / 45.0);
  }
  return w / std::tanh(y);
}

/// Noise spectrum S(w) = |w| coth(beta|w|/2) C(w/lambda); even and >= 0.
inline double hadamard_spectrum(double omega, const KernelConfig& c) {
  const double w = std::abs(omega);
  return thermal_factor(w, c.beta) * cutoff_window(w / c.lambda, c.scheme);
}

/// Right derivative of S at w = 0. The vacuum factor |w| and the
/// exponential window e^{-|w|/lambda} both put a kink at the origin.
inline double hadamard_spectrum_slope_at_zero(const KernelConfig& c) {
  if (c.is_vacuum()) return 1.0;
  return c.scheme == CutoffScheme::exponential ? -thermal_factor(0.0, c.beta) / c.lambda : 0.0;
}

/// Frequency beyond which S(w) / max S is below ~1e-16.
inline double spectrum_support(const KernelConfig& c) {
  return (c.scheme == CutoffScheme::exponential ? 42.0 : 7.0) * c.lambda;
}

// ---------------------------------------------------------------------------
// Tables

/// k_R sampled on s_k = k * ds, k >= 0.
struct DissipationKernelTable {
  CutoffScheme scheme;
  double lambda;
  double ds;
  std::vector<double> values;

  double s_at(std::size_t k) const { return static_cast<double>(k) * ds; }
};

inline DissipationKernelTable make_dissipation_table(const KernelConfig& c, double ds,
                                                     std::size_t n) {
  c.validate();
  if (!(ds > 0.0) || n < 2) throw Error(ErrorKind::grid, "dissipation table needs ds > 0, n >= 2");
  DissipationKernelTable t{c.scheme, c.lambda, ds, std::vector<double>(n)};
  for (std::size_t k = 0; k < n; ++k) t.values[k] = retarded_kernel(t.s_at(k), c);
  return t;
}

/// k_H at lags s_k = k * ds, k >= 0; negative lags mirror exactly.
struct NoiseKernelTable {
  CutoffScheme scheme;
  double lambda;
  double beta;
  double ds;
  std::vector<double> values;

  double at_lag(std::ptrdiff_t k) const { return values[static_cast<std::size_t>(k < 0 ? -k : k)]; }
  std::size_t size() const { return values.size(); }
};

/// Builds k_H(k ds), k = 0..n_lags-1, by trapezoid quadrature of
/// (1/pi) int_0^inf S(w) cos(ws) dw evaluated with a DCT-I. The quadrature
/// step resolves both the cutoff and the thermal scale; the kink of S at
/// w = 0 is corrected with the leading Euler-Maclaurin term.
/// Every entry is a nonnegative combination of cosines, so the resulting
/// Toeplitz matrices are positive semidefinite.
inline NoiseKernelTable make_noise_table(const KernelConfig& c, double ds, std::size_t n_lags) {
  c.validate();
  if (!(ds > 0.0) || n_lags < 1) throw Error(ErrorKind::grid, "noise table needs ds > 0, n >= 1");

  const double w_support = spectrum_support(c);
  const auto oversample =
      static_cast<std::size_t>(std::max(1.0, std::ceil(w_support * ds / std::numbers::pi)));
  const double ds_fine = ds / static_cast<double>(oversample);

  double dw = c.lambda / 400.0;
  if (!c.is_vacuum()) dw = std::min(dw, 0.05 / c.beta);
  // Images of the periodic trapezoid sum must sit well beyond the last lag.
  const double s_max = ds * static_cast<double>(n_lags);
  dw = std::min(dw, 2.0 * std::numbers::pi / (8.0 * s_max));

  auto intervals = static_cast<std::size_t>(std::ceil(std::numbers::pi / (dw * ds_fine)));
  intervals = std::max(intervals, oversample * n_lags);
  constexpr std::size_t max_intervals = std::size_t{1} << 24;
  if (intervals > max_intervals) {
    throw Error(ErrorKind::grid, "noise kernel table too large for the requested resolution");
  }
  dw = std::numbers::pi / (static_cast<double>(intervals) * ds_fine);

  std::vector<double> spec(intervals + 1);
  for (std::size_t k = 0; k <= intervals; ++k) {
    spec[k] = hadamard_spectrum(static_cast<double>(k) * dw, c);
  }
  const auto y = fft::dct1(spec);

  const double kink = dw * dw / (12.0 * std::numbers::pi) * hadamard_spectrum_slope_at_zero(c);
  NoiseKernelTable t{c.scheme, c.lambda, c.beta, ds, std::vector<double>(n_lags)};
  for (std::size_t k = 0; k < n_lags; ++k) {
    t.values[k] = dw / std::numbers::pi * 0.5 * y[k * oversample] + kink;
  }
  return t;
}

// ---------------------------------------------------------------------------
// Decoherence

/// Im S_IF[z, z'] for two histories on the same grid:
///   e^2 sum_ij w_i w_j dtau^2 k_H(tau_i - tau_j) (-g^{mu nu}) du_mu(i) du_nu(j)
/// with du = u - u' the difference current and trapezoid weights w. The
/// -g contraction makes spatial difference currents count positively.
inline double decoherence_exponent(const Trajectory& z, const Trajectory& z_prime,
                                   const KernelConfig& c) {
  const std::size_t n = z.samples.size();
  if (n < 2 || n != z_prime.samples.size() || z.dtau != z_prime.dtau ||
      z.samples.front().tau != z_prime.samples.front().tau) {
    throw Error(ErrorKind::grid, "decoherence_exponent requires identical proper-time grids");
  }
  std::vector<FourVector> du(n);
  bool all_zero = true;
  for (std::size_t i = 0; i < n; ++i) {
    du[i] = z.samples[i].velocity - z_prime.samples[i].velocity;
    all_zero = all_zero && du[i] == FourVector{};
  }
  if (all_zero || c.e_squared == 0.0) return 0.0;

  const auto table = make_noise_table(c, z.dtau, n);
  auto weight = [n](std::size_t i) { return (i == 0 || i + 1 == n) ? 0.5 : 1.0; };
  std::vector<FourVector> weighted(n);
  for (std::size_t i = 0; i < n; ++i) weighted[i] = weight(i) * du[i];

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    FourVector acc;
    for (std::size_t j = 0; j < n; ++j) {
      acc += table.at_lag(static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(j)) *
             weighted[j];
    }
    total -= minkowski_dot(weighted[i], acc);
  }
  return c.e_squared * z.dtau * z.dtau * total;
}

}  // namespace aldl
