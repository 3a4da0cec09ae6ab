#pragma once

// Transform-domain fluctuation-dissipation check.
//
// Fourier convention shared with the noise module:
//   f^(w) = int f(s) e^{i w s} ds,   f(s) = (1 / 2 pi) int f^(w) e^{-i w s} dw.
// For an even kernel tabulated at s_m = m ds (m >= 0) the discrete transform is
//   f^(w) = ds [ f_0 + 2 sum_{m >= 1} f_m cos(w s_m) ].
//
// The dissipation spectrum is gamma(w) = Im int_0^inf A(s) e^{i w s} ds for the
// worldline commutator A of the scheme; the relation checked is
//   S(w) = gamma(w) coth(beta w / 2).

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "aldl/error.hpp"
#include "aldl/kernels.hpp"

namespace aldl {

/// Even kernel sampled at s_m = m * ds, m >= 0.
struct EvenKernelTable {
  double ds = 0.0;
  std::vector<double> values;
};

inline EvenKernelTable to_even_table(const NoiseKernelTable& t) { return {t.ds, t.values}; }

struct SpectrumTable {
  std::vector<double> omega;
  std::vector<double> values;
};

/// Discrete cosine transform of an even kernel table on `omega`.
/// Warns when the tail has not decayed below 1e-10 of the peak.
inline SpectrumTable spectral_transform(const EvenKernelTable& kernel, std::span<const double> omega) {
  if (kernel.values.empty() || !(kernel.ds > 0.0)) {
    throw Error(ErrorKind::grid, "spectral_transform needs a nonempty table with ds > 0");
  }
  double peak = 0.0;
  for (double v : kernel.values) peak = std::max(peak, std::abs(v));
  if (std::abs(kernel.values.back()) > 1e-10 * peak) {
    std::clog << "warning[fdr]: kernel tail " << kernel.values.back()
              << " has not decayed; transform is windowed by the table length\n";
  }
  SpectrumTable out{{omega.begin(), omega.end()}, std::vector<double>(omega.size())};
  for (std::size_t i = 0; i < omega.size(); ++i) {
    double acc = 0.0;
    for (std::size_t m = kernel.values.size() - 1; m >= 1; --m) {
      acc += kernel.values[m] * std::cos(omega[i] * kernel.ds * static_cast<double>(m));
    }
    out.values[i] = kernel.ds * (kernel.values[0] + 2.0 * acc);
  }
  return out;
}

/// gamma(w) for w > 0 by numerical sine transform of the commutator kernel.
inline double dissipation_spectrum(double omega, const KernelConfig& c) {
  if (!(omega > 0.0)) throw Error(ErrorKind::domain, "dissipation_spectrum needs omega > 0");
  if (c.scheme == CutoffScheme::exponential) {
    // Algebraic tail: double-exponential oscillatory quadrature.
    static thread_local boost::math::quadrature::ooura_fourier_sin<double> integrator(1e-13, 12);
    const auto [value, rel_err] =
        integrator.integrate([&c](double s) { return commutator_kernel(s, c); }, omega);
    (void)rel_err;
    return value;
  }
  // Gaussian tail: the transform falls like exp(-(w / lambda)^2) while the
  // integrand stays O(lambda^2), so the cancellation needs extended precision.
  using Real = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<28>,
                                             boost::multiprecision::et_off>;
  const Real lambda = c.lambda;
  const Real w = omega;
  const Real norm =
      lambda * lambda * lambda / (2 * boost::multiprecision::sqrt(boost::math::constants::pi<Real>()));
  auto integrand = [&](const Real& s) {
    return norm * s * boost::multiprecision::exp(-lambda * lambda * s * s / 4) *
           boost::multiprecision::sin(w * s);
  };
  const Real upper = Real(20) / lambda;
  // Panels of about one oscillation or one cutoff length, whichever is shorter.
  const double panel = std::min(2.0 * std::numbers::pi / omega, 1.0 / c.lambda);
  const auto n_panels = static_cast<std::size_t>(std::ceil(20.0 / c.lambda / panel));
  Real total = 0;
  for (std::size_t p = 0; p < n_panels; ++p) {
    const Real a = upper * p / n_panels;
    const Real b = upper * (p + 1) / n_panels;
    total += boost::math::quadrature::gauss_kronrod<Real, 31>::integrate(integrand, a, b, 0);
  }
  return static_cast<double>(total);
}

struct FdrRow {
  double omega;
  double noise;
  double dissipation;
  double ratio;
};

struct FdrReport {
  CutoffScheme noise_scheme;
  CutoffScheme dissipation_scheme;
  double beta;
  double lambda;
  double tolerance;
  std::vector<FdrRow> rows;
  std::vector<double> excluded;
  double max_abs_deviation = 0.0;
  bool pass = false;
};

inline std::vector<double> default_fdr_grid(double lambda, std::size_t points = 121) {
  std::vector<double> grid(points);
  const double lo = std::log(lambda / 100.0);
  const double hi = std::log(5.0 * lambda);
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = std::exp(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1));
  }
  return grid;
}

/// Ratio S(w) / (gamma(w) coth(beta w / 2)) with S from `noise` and gamma
/// from `dissipation`. Passing the same config twice is the physical check;
/// distinct schemes serve as a negative control.
inline FdrReport fdr_check(const KernelConfig& noise, const KernelConfig& dissipation,
                           std::span<const double> omega_grid, double tolerance = 1e-6) {
  noise.validate();
  dissipation.validate();
  FdrReport rep{noise.scheme, dissipation.scheme, noise.beta, noise.lambda, tolerance, {}, {}, 0.0,
                false};
  for (double w : omega_grid) {
    if (!(w > 0.0)) throw Error(ErrorKind::domain, "fdr_check frequencies must be > 0");
    const double gamma = dissipation_spectrum(w, dissipation);
    if (!(std::abs(gamma) >= 1e-14)) {
      rep.excluded.push_back(w);
      continue;
    }
    const double coth = noise.is_vacuum() ? 1.0 : 1.0 / std::tanh(0.5 * noise.beta * w);
    const double s = hadamard_spectrum(w, noise);
    const double ratio = s / (gamma * coth);
    rep.rows.push_back({w, s, gamma, ratio});
    rep.max_abs_deviation = std::max(rep.max_abs_deviation, std::abs(ratio - 1.0));
  }
  rep.pass = !rep.rows.empty() && rep.max_abs_deviation <= tolerance;
  return rep;
}

inline FdrReport fdr_check(const KernelConfig& config, std::span<const double> omega_grid,
                           double tolerance = 1e-6) {
  return fdr_check(config, config, omega_grid, tolerance);
}

}  // namespace aldl
