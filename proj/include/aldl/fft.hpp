#pragma once

// Thin RAII wrappers over the FFTW3 transforms used by the library.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

namespace aldl::fft {

namespace detail {

// Planner calls are not thread-safe in FFTW; execution is.
inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlanDeleter {
  void operator()(fftw_plan_s* p) const {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(p);
  }
};
using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

}  // namespace detail

/// Unnormalised backward DFT in place: x_j <- sum_k x_k exp(+2 pi i jk / n).
inline void inverse_dft(std::vector<std::complex<double>>& data) {
  const int n = static_cast<int>(data.size());
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  detail::Plan plan;
  {
    std::lock_guard lock(detail::planner_mutex());
    plan.reset(fftw_plan_dft_1d(n, ptr, ptr, FFTW_BACKWARD, FFTW_ESTIMATE));
  }
  fftw_execute(plan.get());
}

/// Unnormalised forward DFT of real input: returns n/2+1 complex coefficients
/// X_k = sum_j x_j exp(-2 pi i jk / n).
inline std::vector<std::complex<double>> real_dft(std::span<const double> input) {
  const int n = static_cast<int>(input.size());
  std::vector<double> in(input.begin(), input.end());
  std::vector<std::complex<double>> out(input.size() / 2 + 1);
  detail::Plan plan;
  {
    std::lock_guard lock(detail::planner_mutex());
    plan.reset(fftw_plan_dft_r2c_1d(n, in.data(), reinterpret_cast<fftw_complex*>(out.data()),
                                    FFTW_ESTIMATE));
  }
  fftw_execute(plan.get());
  return out;
}

/// DCT-I (FFTW REDFT00):
/// Y_m = X_0 + (-1)^m X_{K-1} + 2 sum_{k=1}^{K-2} X_k cos(pi m k / (K-1)).
inline std::vector<double> dct1(std::span<const double> input) {
  const int n = static_cast<int>(input.size());
  std::vector<double> in(input.begin(), input.end());
  std::vector<double> out(input.size());
  detail::Plan plan;
  {
    std::lock_guard lock(detail::planner_mutex());
    plan.reset(fftw_plan_r2r_1d(n, in.data(), out.data(), FFTW_REDFT00, FFTW_ESTIMATE));
  }
  fftw_execute(plan.get());
  return out;
}

}  // namespace aldl::fft
