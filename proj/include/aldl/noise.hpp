#pragma once

// Stationary Gaussian colored noise eta^mu(tau) with autocovariance e^2 k_H.
//
// Spectral synthesis on a zero-padded periodic grid of M points:
//   lambda_k = S(w_k) / dtau,  w_k = 2 pi min(k, M-k) / (M dtau),
//   y_j = sum_k sqrt(lambda_k / M) xi_k exp(2 pi i jk / M),  xi_k ~ CN(0, 2),
// gives two independent real paths (Re y, Im y) with covariance
//   c_m = (1 / (M dtau)) sum_k S(w_k) cos(w_k m dtau)  ~  k_H(m dtau).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "aldl/core.hpp"
#include "aldl/error.hpp"
#include "aldl/fft.hpp"
#include "aldl/kernels.hpp"

namespace aldl {

/// splitmix64 finaliser.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Per-path seed: seed_k = splitmix64(master ^ splitmix64(k)).
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t k) {
  return splitmix64(master ^ splitmix64(k));
}

/// Standard normal deviates from mt19937_64 via Box-Muller. Unlike
/// std::normal_distribution the output sequence is fixed across standard
/// library implementations.
class NormalSource {
 public:
  explicit NormalSource(std::uint64_t seed) : engine_(seed) {}

  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform_open();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  // Uniform on (0, 1].
  double uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
  }

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

enum class SynthesisMethod { spectral, circulant_embedding };

struct NoiseOptions {
  std::size_t padding = 4;
  SynthesisMethod method = SynthesisMethod::spectral;
};

struct NoisePath {
  double dtau = 0.0;
  std::vector<FourVector> samples;
  std::uint64_t seed = 0;
  // spectrum metadata
  std::string spectrum;
  SynthesisMethod method = SynthesisMethod::spectral;

  std::size_t size() const { return samples.size(); }
};

using SpectrumFn = std::function<double(double)>;

namespace detail {

inline std::size_t padded_length(std::size_t n_steps, std::size_t padding) {
  std::size_t m = std::max<std::size_t>(padding, 1) * n_steps;
  return m + (m % 2);
}

/// Samples four independent components given nonnegative circulant
/// eigenvalues (length M); returns the first n points.
inline std::vector<FourVector> synthesize(std::span<const double> eigenvalues, std::size_t n,
                                          std::uint64_t seed) {
  const std::size_t m = eigenvalues.size();
  std::vector<double> amplitude(m);
  bool all_zero = true;
  for (std::size_t k = 0; k < m; ++k) {
    amplitude[k] = std::sqrt(std::max(eigenvalues[k], 0.0) / static_cast<double>(m));
    all_zero = all_zero && amplitude[k] == 0.0;
  }
  std::vector<FourVector> out(n);
  if (all_zero) return out;

  NormalSource normal(seed);
  std::vector<std::complex<double>> buf(m);
  for (std::size_t pair = 0; pair < 2; ++pair) {
    for (std::size_t k = 0; k < m; ++k) {
      const double re = normal();
      const double im = normal();
      buf[k] = amplitude[k] * std::complex<double>(re, im);
    }
    fft::inverse_dft(buf);
    for (std::size_t j = 0; j < n; ++j) {
      out[j][2 * pair] = buf[j].real();
      out[j][2 * pair + 1] = buf[j].imag();
    }
  }
  return out;
}

inline std::vector<double> spectral_eigenvalues(const SpectrumFn& spectrum, double scale,
                                                std::size_t m, double dtau) {
  const double dw = 2.0 * std::numbers::pi / (static_cast<double>(m) * dtau);
  std::vector<double> ev(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double w = dw * static_cast<double>(std::min(k, m - k));
    const double s = spectrum(w);
    if (!(s >= 0.0) || !std::isfinite(s)) {
      throw Error(ErrorKind::spectrum,
                  "noise spectrum must be finite and >= 0 (S(" + std::to_string(w) +
                      ") = " + std::to_string(s) + ")");
    }
    ev[k] = scale * s / dtau;
  }
  return ev;
}

inline void check_grid(std::size_t n_steps, double dtau) {
  if (n_steps < 2) throw Error(ErrorKind::grid, "noise path needs n_steps >= 2");
  if (!(dtau > 0.0) || !std::isfinite(dtau)) throw Error(ErrorKind::grid, "noise path needs dtau > 0");
}

}  // namespace detail

/// Noise path with covariance scale * (1/pi) int_0^inf S(w) cos(ws) dw.
inline NoisePath sample_noise_path(const SpectrumFn& spectrum, double scale, std::size_t n_steps,
                                   double dtau, std::uint64_t seed, std::size_t padding = 4) {
  detail::check_grid(n_steps, dtau);
  const std::size_t m = detail::padded_length(n_steps, padding);
  const auto ev = detail::spectral_eigenvalues(spectrum, scale, m, dtau);
  return {dtau, detail::synthesize(ev, n_steps, seed), seed, "custom", SynthesisMethod::spectral};
}

/// Noise path for the Hadamard spectrum of `config`, covariance e^2 k_H.
inline NoisePath sample_noise_path(const KernelConfig& config, std::size_t n_steps, double dtau,
                                   std::uint64_t seed, const NoiseOptions& options = {}) {
  config.validate();
  detail::check_grid(n_steps, dtau);
  const std::size_t m = detail::padded_length(n_steps, options.padding);
  const std::string label = to_string(config.scheme) + ":lambda=" + std::to_string(config.lambda) +
                            ":beta=" + std::to_string(config.beta);

  if (options.method == SynthesisMethod::circulant_embedding) {
    const auto table = make_noise_table(config, dtau, m / 2 + 1);
    std::vector<double> row(m);
    for (std::size_t j = 0; j < m; ++j) {
      row[j] = config.e_squared * table.values[std::min(j, m - j)];
    }
    const auto spectrum = fft::real_dft(row);
    std::vector<double> ev(m);
    double max_ev = 0.0;
    double min_ev = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      ev[k] = spectrum[std::min(k, m - k)].real();
      max_ev = std::max(max_ev, ev[k]);
      min_ev = std::min(min_ev, ev[k]);
    }
    if (min_ev >= -1e-10 * std::max(max_ev, std::numeric_limits<double>::min())) {
      return {dtau, detail::synthesize(ev, n_steps, seed), seed, label,
              SynthesisMethod::circulant_embedding};
    }
    std::clog << "warning[noise]: circulant embedding not nonnegative-definite (min eigenvalue "
              << min_ev << "); falling back to spectral synthesis\n";
  }

  const auto ev = detail::spectral_eigenvalues(
      [&config](double w) { return hadamard_spectrum(w, config); }, config.e_squared, m, dtau);
  return {dtau, detail::synthesize(ev, n_steps, seed), seed, label, SynthesisMethod::spectral};
}

// ---------------------------------------------------------------------------
// Validation

struct AutocovarianceTable {
  double dtau = 0.0;
  /// value[lag][component]
  std::vector<std::array<double, 4>> value;
  std::vector<std::array<double, 4>> std_error;
};

/// Ensemble estimate of <eta_c(tau) eta_c(tau + lag dtau)> per component,
/// averaged over base points. The ensemble mean at each grid point is
/// removed with the N/(N-1) correction; the standard error comes from the
/// spread of per-path averages.
inline AutocovarianceTable autocovariance_estimate(std::span<const NoisePath> paths,
                                                   std::size_t max_lag) {
  if (paths.size() < 2) throw Error(ErrorKind::grid, "autocovariance needs at least 2 paths");
  const std::size_t n = paths.front().size();
  const double dtau = paths.front().dtau;
  for (const auto& p : paths) {
    if (p.size() != n || p.dtau != dtau) {
      throw Error(ErrorKind::grid, "autocovariance paths must share one grid");
    }
  }
  if (max_lag >= n) throw Error(ErrorKind::grid, "max_lag must be below the path length");

  const auto count = static_cast<double>(paths.size());
  std::vector<FourVector> mean(n);
  for (const auto& p : paths) {
    for (std::size_t j = 0; j < n; ++j) mean[j] += p.samples[j];
  }
  for (auto& m : mean) m *= 1.0 / count;

  AutocovarianceTable out{dtau, std::vector<std::array<double, 4>>(max_lag + 1),
                          std::vector<std::array<double, 4>>(max_lag + 1)};
  std::vector<double> per_path(paths.size());
  for (std::size_t c = 0; c < 4; ++c) {
    for (std::size_t lag = 0; lag <= max_lag; ++lag) {
      const std::size_t base = n - lag;
      for (std::size_t p = 0; p < paths.size(); ++p) {
        const auto& s = paths[p].samples;
        double acc = 0.0;
        for (std::size_t j = 0; j < base; ++j) {
          acc += (s[j][c] - mean[j][c]) * (s[j + lag][c] - mean[j + lag][c]);
        }
        per_path[p] = acc / static_cast<double>(base);
      }
      double avg = 0.0;
      for (double v : per_path) avg += v;
      avg /= count;
      double var = 0.0;
      for (double v : per_path) var += (v - avg) * (v - avg);
      var /= (count - 1.0);
      out.value[lag][c] = avg * count / (count - 1.0);
      out.std_error[lag][c] = std::sqrt(var / count);
    }
  }
  return out;
}

}  // namespace aldl
