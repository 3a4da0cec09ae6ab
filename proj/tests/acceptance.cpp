// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Reference values come from tests/oracles.hpp.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "aldl/dynamics.hpp"
#include "aldl/fdr.hpp"
#include "aldl/kernels.hpp"
#include "aldl/noise.hpp"
#include "oracles.hpp"

using namespace aldl;

namespace {

constexpr double kVacuum = std::numeric_limits<double>::infinity();

struct Outcome {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << " [failed: " << what << "]";
    }
  }
};

KernelConfig kernel(CutoffScheme scheme, double lambda, double e2 = 1.0, double beta = kVacuum) {
  KernelConfig c;
  c.scheme = scheme;
  c.lambda = lambda;
  c.e_squared = e2;
  c.beta = beta;
  return c;
}

double norm(const FourVector& v) { return std::max({std::abs(v.t), std::abs(v.x), std::abs(v.y), std::abs(v.z)}); }

bool bit_identical(const TrajectoryResult& a, const TrajectoryResult& b) {
  const auto& x = a.trajectory.samples;
  const auto& y = b.trajectory.samples;
  if (x.size() != y.size()) return false;
  for (std::size_t k = 0; k < x.size(); ++k) {
    for (auto p : {&WorldlineState::position, &WorldlineState::velocity, &WorldlineState::acceleration}) {
      if (std::memcmp(&(x[k].*p), &(y[k].*p), sizeof(FourVector)) != 0) return false;
    }
  }
  return true;
}

PlaneWave wave() {
  PlaneWave w;
  w.amplitude = 0.5;
  w.wavevector = {0, 0, 1};
  w.polarization = {1, 0, 0};
  return w;
}

// ---------------------------------------------------------------------------

void criterion1(Outcome& out) {
  const auto k = kernel(CutoffScheme::exponential, 1.0);
  std::mt19937_64 rng(1);
  double worst_uniform = 0.0, worst_hyperbolic = 0.0, worst_dot = 0.0;

  for (int i = 0; i < 100; ++i) {
    const auto [u, a] = oracle::random_on_shell(rng, 3.0);
    worst_uniform = std::max(worst_uniform, norm(ald_force(u, {}, {}, k)));
  }
  // Rapidity g tau up to 3. Beyond that the worldline itself carries
  // O(cosh^3 eps) rounding in (a.a) u and the 1e-10 bound measures the input.
  for (double g : {0.1, 0.5, 1.0, 2.0}) {
    for (int i = -24; i <= 24; ++i) {
      const auto s = oracle::hyperbolic(g, 0.125 * i / g);
      worst_hyperbolic = std::max(worst_hyperbolic, norm(ald_force(s.u, s.a, s.jerk, k)));
    }
  }

  // 1000 random on-shell states: ALD force with the jerk constrained by
  // d(u.a)/dtau = 0, with the jerk of the equation of motion, and the
  // Landau-Lifshitz force in four field types.
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const std::vector<ExternalField> fields{ConstantE{{0.3, -0.2, 0.5}}, ConstantB{{0.1, 0.7, -0.4}}, wave(),
                                          Coulomb{0.5}};
  for (int i = 0; i < 1000; ++i) {
    const auto [u, a] = oracle::random_on_shell(rng, 2.0);
    const FourVector raw{unit(rng), unit(rng), unit(rng), unit(rng)};
    const FourVector jerk = raw - minkowski_dot(raw, u) * u - minkowski_dot(a, a) * u;
    worst_dot = std::max(worst_dot, std::abs(minkowski_dot(ald_force(u, a, jerk, k), u)));

    const auto& field = fields[i % fields.size()];
    const FourVector x{unit(rng), 2.0 + unit(rng), unit(rng), unit(rng)};
    const FourVector f_ext = lorentz_force(1.0, field, x, u);
    const FourVector j_eom = ald_jerk(u, a, f_ext, 1.0, k);
    worst_dot = std::max(worst_dot, std::abs(minkowski_dot(ald_force(u, a, j_eom, k), u)));
    worst_dot = std::max(worst_dot, std::abs(minkowski_dot(landau_lifshitz_force(x, u, 1.0, 1.0, field, k), u)));
  }
  out.detail << "uniform " << worst_uniform << ", hyperbolic " << worst_hyperbolic << ", max|f.u| " << worst_dot;
  out.require(worst_uniform <= 1e-10, "uniform-velocity ALD force");
  out.require(worst_hyperbolic <= 1e-10, "hyperbolic ALD force");
  out.require(worst_dot <= 1e-10, "f_RR.u");
}

void criterion2(Outcome& out) {
  SimConfig c;
  c.integrator = Integrator::ald_direct;
  c.kernel = kernel(CutoffScheme::exponential, 1.0, 0.1);
  c.initial_state.velocity = {1, 0, 0, 0};
  c.initial_state.acceleration = {0, 1e-8, 0, 0};
  c.acceleration_override = true;
  const double tau0 = c.kernel.kappa * c.kernel.e_squared / c.m0;
  c.dtau = tau0 / 100.0;
  c.n_steps = 1001;
  const auto r = simulate(c);
  const double rel = std::abs(r.efold_rate * tau0 - 1.0);

  double worst = 0.0;
  const double f0 = 0.7, m = 1.3, t0 = 0.05;
  for (int i = 0; i < 100; ++i) {
    const double t = -0.5 + 0.6 * i / 99.0;
    worst = std::max(worst, std::abs(preacceleration_reference(f0, m, t0, t) -
                                     oracle::preacceleration_backward(f0, m, t0, t)));
  }
  out.detail << "runaway " << std::boolalpha << r.runaway_flag << ", rate*tau0 - 1 = " << rel
             << ", preacceleration max err " << worst;
  out.require(r.runaway_flag, "runaway flag");
  out.require(rel <= 0.01, "e-fold rate within 1%");
  out.require(worst <= 1e-8, "preacceleration vs backward integration");
}

void criterion3(Outcome& out) {
  int flagged = 0, runs = 0;
  for (auto scheme : {CutoffScheme::exponential, CutoffScheme::gaussian}) {
    for (double lambda : {0.5, 2.0, 8.0}) {
      for (double e2 : {0.01, 0.1, 1.0}) {
        for (double b : {0.1, 0.5, 1.0}) {
          SimConfig c;
          c.integrator = Integrator::ald_langevin;
          c.kernel = kernel(scheme, lambda, e2);
          c.field = ConstantB{{0, 0, b}};
          c.initial_state.velocity = four_velocity_from_spatial({0.5, 0.0, 0.1});
          c.dtau = 0.05 / lambda;
          c.n_steps = 2000;
          const auto r = simulate(c);
          ++runs;
          if (r.runaway_flag) {
            ++flagged;
            out.detail << " runaway at " << to_string(scheme) << " L=" << lambda << " e2=" << e2 << " B=" << b;
          }
        }
      }
    }
  }

  double g2_far = 0.0;
  bool g2_zero = true;
  for (auto scheme : {CutoffScheme::exponential, CutoffScheme::gaussian}) {
    for (double lambda : {0.5, 2.0, 8.0}) {
      const auto k = kernel(scheme, lambda);
      g2_zero = g2_zero && g2_coefficient(0.0, k) == 0.0;
      g2_far = std::max(g2_far, std::abs(g2_coefficient(100.0 / lambda, k) - 1.0 / (2.0 * std::numbers::pi)));
    }
  }

  bool identical = true;
  for (auto integrator : {Integrator::ald_langevin, Integrator::landau_lifshitz}) {
    SimConfig c;
    c.integrator = integrator;
    c.kernel = kernel(CutoffScheme::gaussian, 1.0, 0.5);
    c.field = wave();
    c.dtau = 0.02;
    c.n_steps = 500;
    c.acceleration_override = true;
    c.initial_state.acceleration = {0, 0.3, 0, 0};
    const auto r1 = simulate(c);
    c.initial_state.acceleration = {0, -7.0, 2.0, 1.0};
    const auto r2 = simulate(c);
    identical = identical && bit_identical(r1, r2);
  }
  out.detail << runs << " runs, " << flagged << " flagged; g2(0) == 0 " << std::boolalpha << g2_zero
             << ", |g2(100/L) - 1/2pi| " << g2_far << ", hints ignored " << identical;
  out.require(flagged == 0, "no runaway");
  out.require(g2_zero, "g2(0) = 0");
  out.require(g2_far <= 1e-6, "g2 late-time value");
  out.require(identical, "bit-identical runs");
}

void criterion4(Outcome& out) {
  const double m0 = 1.0;
  bool exact_start = true, monotone = true;
  double worst_late = 0.0;
  for (auto scheme : {CutoffScheme::exponential, CutoffScheme::gaussian}) {
    for (double lambda : {0.5, 2.0, 8.0}) {
      const auto k = kernel(scheme, lambda, 0.5);
      exact_start = exact_start && effective_mass(0.0, m0, k) == m0;
      double prev = m0;
      for (int i = 1; i <= 20000; ++i) {
        const double m = effective_mass(0.005 * i / lambda, m0, k);
        monotone = monotone && m >= prev;
        prev = m;
      }
      const double target = m0 + oracle::a0(k) * lambda;
      worst_late = std::max(worst_late, std::abs(effective_mass(100.0 / lambda, m0, k) - target) / lambda);
    }
  }
  const double a0_exp = oracle::a0(kernel(CutoffScheme::exponential, 1.0));
  const double a0_gauss = oracle::a0(kernel(CutoffScheme::gaussian, 1.0));
  out.detail << "m(0) == m0 " << std::boolalpha << exact_start << ", monotone " << monotone
             << ", max |m(100/L) - m0 - a0 L| / L " << worst_late << ", a0 exp " << a0_exp << " gauss "
             << a0_gauss;
  out.require(exact_start, "m(0) = m0");
  out.require(monotone, "monotone");
  out.require(worst_late <= 1e-6, "late-time mass");
  out.require(std::abs(a0_exp - a0_gauss) > 1e-3, "scheme dependence of a0");
}

std::uint64_t digest(const NoisePath& p) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(p.samples.data());
  for (std::size_t i = 0; i < p.samples.size() * sizeof(FourVector); ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

void criterion5(Outcome& out) {
  const double lambda = 1.0, dtau = 0.1;
  const std::size_t n = 256, paths = 10000;
  const auto max_lag = static_cast<std::size_t>(std::lround(10.0 / (lambda * dtau)));
  const auto k = kernel(CutoffScheme::exponential, lambda);
  const std::uint64_t master = 2026;

  std::vector<double> cov(max_lag + 1, 0.0);
  std::vector<double> pairs(max_lag + 1, 0.0);
  double m2 = 0.0, m4 = 0.0, m1 = 0.0, count = 0.0;
  std::vector<std::uint64_t> serial(paths);
  for (std::size_t p = 0; p < paths; ++p) {
    const auto path = sample_noise_path(k, n, dtau, derive_seed(master, p));
    serial[p] = digest(path);
    const auto& s = path.samples;
    for (const auto& v : s) {
      for (double x : {v.t, v.x, v.y, v.z}) {
        m1 += x;
        m2 += x * x;
        m4 += x * x * x * x;
        count += 1.0;
      }
    }
    for (std::size_t lag = 0; lag <= max_lag; ++lag) {
      double acc = 0.0;
      for (std::size_t i = 0; i + lag < n; ++i) {
        acc += s[i].t * s[i + lag].t + s[i].x * s[i + lag].x + s[i].y * s[i + lag].y + s[i].z * s[i + lag].z;
      }
      cov[lag] += acc;
      pairs[lag] += 4.0 * static_cast<double>(n - lag);
    }
  }
  double num = 0.0, den = 0.0;
  for (std::size_t lag = 0; lag <= max_lag; ++lag) {
    const double est = cov[lag] / pairs[lag];
    const double target = k.e_squared * oracle::k_h_vacuum_exponential(dtau * static_cast<double>(lag), lambda);
    num += (est - target) * (est - target);
    den += target * target;
  }
  const double rel_l2 = std::sqrt(num / den);
  const double mean = m1 / count, var = m2 / count - mean * mean;
  const double excess = (m4 / count) / (var * var) - 3.0;

  // Regenerate with four threads and compare bytes.
  std::vector<std::uint64_t> threaded(paths);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < 4; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t p = w; p < paths; p += 4) threaded[p] = digest(sample_noise_path(k, n, dtau, derive_seed(master, p)));
      });
    }
  }
  const bool deterministic = serial == threaded;
  out.detail << paths << " paths, autocovariance rel L2 " << rel_l2 << ", excess kurtosis " << excess
             << ", byte-exact rerun " << std::boolalpha << deterministic;
  out.require(rel_l2 <= 0.05, "autocovariance");
  out.require(std::abs(excess) <= 0.1, "kurtosis");
  out.require(deterministic, "determinism");
}

void criterion6(Outcome& out) {
  const auto grid = default_fdr_grid(1.0);
  double worst = 0.0;
  bool all = true;
  for (auto scheme : {CutoffScheme::exponential, CutoffScheme::gaussian}) {
    for (double beta : {kVacuum, 1.0, 10.0}) {
      const auto rep = fdr_check(kernel(scheme, 1.0, 1.0, beta), grid, 1e-6);
      all = all && rep.pass;
      worst = std::max(worst, rep.max_abs_deviation);
    }
  }
  const auto mixed =
      fdr_check(kernel(CutoffScheme::exponential, 1.0), kernel(CutoffScheme::gaussian, 1.0), grid, 1e-6);
  out.detail << "6 configs max deviation " << worst << ", mixed-scheme deviation " << mixed.max_abs_deviation;
  out.require(all, "matched schemes pass");
  out.require(!mixed.pass, "mixed schemes fail");
}

Trajectory smooth_path(const std::function<Vec3(double)>& v, std::size_t n, double dtau) {
  Trajectory t;
  t.dtau = dtau;
  for (std::size_t k = 0; k < n; ++k) {
    WorldlineState s;
    s.tau = dtau * static_cast<double>(k);
    s.velocity = four_velocity_from_spatial(v(s.tau));
    t.samples.push_back(s);
  }
  return t;
}

void criterion7(Outcome& out) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const std::size_t n = 200;
  const double dtau = 0.05;
  auto random_velocity = [&] {
    std::array<double, 9> p{};
    for (auto& x : p) x = unit(rng);
    return [p](double t) -> Vec3 {
      return {0.5 * p[0] * std::sin((1.0 + p[1]) * t + 3.0 * p[2]), 0.5 * p[3] * std::cos((2.0 + p[4]) * t + 3.0 * p[5]),
              0.3 * p[6] * std::sin((1.5 + p[7]) * t + 3.0 * p[8])};
    };
  };

  double most_negative = std::numeric_limits<double>::infinity();
  bool identical_zero = true;
  const std::vector<KernelConfig> configs{kernel(CutoffScheme::exponential, 1.0), kernel(CutoffScheme::gaussian, 2.0),
                                          kernel(CutoffScheme::exponential, 1.0, 1.0, 2.0),
                                          kernel(CutoffScheme::gaussian, 1.0, 1.0, 0.5)};
  for (int i = 0; i < 100; ++i) {
    const auto& c = configs[i % configs.size()];
    const auto z = smooth_path(random_velocity(), n, dtau);
    const auto zp = smooth_path(random_velocity(), n, dtau);
    most_negative = std::min(most_negative, decoherence_exponent(z, zp, c));
    identical_zero = identical_zero && decoherence_exponent(z, z, c) == 0.0;
  }

  // z' = z + eps * (smooth spatial bump); the exponent is quadratic in eps.
  double worst_ratio = 0.0;
  for (const auto& c : configs) {
    const auto base = random_velocity();
    auto shifted = [&](double eps) {
      return smooth_path(
          [&](double t) {
            Vec3 v = base(t);
            const double bump = std::exp(-std::pow(t - 5.0, 2));
            v[0] += eps * bump;
            v[1] -= 0.5 * eps * bump;
            return v;
          },
          n, dtau);
    };
    const auto z = shifted(0.0);
    const double e1 = decoherence_exponent(z, shifted(1e-4), c);
    const double e2 = decoherence_exponent(z, shifted(2e-4), c);
    worst_ratio = std::max(worst_ratio, std::abs(e2 / e1 / 4.0 - 1.0));
  }
  out.detail << "min Im S_IF " << most_negative << ", identical pairs zero " << std::boolalpha << identical_zero
             << ", max |ratio(2 eps / eps) / 4 - 1| " << worst_ratio;
  out.require(most_negative >= -1e-12, "positivity");
  out.require(identical_zero, "identical pairs");
  out.require(worst_ratio <= 0.01, "quadratic scaling");
}

FourVector end_velocity(SimConfig c, double horizon, double h) {
  c.dtau = h;
  c.n_steps = static_cast<std::size_t>(std::llround(horizon / h)) + 1;
  return simulate(c).trajectory.samples.back().velocity;
}

void criterion8(Outcome& out) {
  struct Case {
    std::string name;
    SimConfig config;
  };
  std::vector<Case> cases;
  for (auto integrator : {Integrator::landau_lifshitz, Integrator::ald_langevin}) {
    for (auto scheme : {CutoffScheme::exponential, CutoffScheme::gaussian}) {
      if (integrator == Integrator::landau_lifshitz && scheme == CutoffScheme::gaussian) continue;
      SimConfig c;
      c.integrator = integrator;
      c.kernel = kernel(scheme, 0.5, 0.5);
      c.field = wave();
      c.initial_state.velocity = four_velocity_from_spatial({0.3, 0.1, 0.0});
      cases.push_back({to_string(integrator) + "/" + to_string(scheme), c});
    }
  }
  double worst_ratio = std::numeric_limits<double>::infinity();
  const double horizon = 2.0, h0 = 0.2;
  for (const auto& cs : cases) {
    const auto u1 = end_velocity(cs.config, horizon, h0);
    const auto u2 = end_velocity(cs.config, horizon, h0 / 2);
    const auto u4 = end_velocity(cs.config, horizon, h0 / 4);
    // Successive differences shrink by 2^p for a method of order p.
    const double ratio = norm(u1 - u2) / norm(u2 - u4);
    worst_ratio = std::min(worst_ratio, ratio);
    out.detail << cs.name << " ratio " << ratio << "; ";
  }

  double worst_drift = 0.0;
  std::size_t renorm = 0;
  for (const auto& cs : cases) {
    auto c = cs.config;
    c.kernel.lambda = 1.0;
    c.dtau = 0.02;
    c.n_steps = 100001;
    const auto r = simulate(c);
    worst_drift = std::max(worst_drift, r.max_mass_shell_drift());
    renorm += r.renormalizations;
  }
  out.detail << "max mass-shell drift over 1e5 steps " << worst_drift << " (" << renorm << " renormalizations)";
  out.require(worst_ratio >= 8.0, "4th-order convergence");
  out.require(worst_drift <= 1e-6 && renorm == 0, "mass-shell drift");
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    double budget_s;
    void (*run)(Outcome&);
  };
  const Criterion criteria[] = {
      {1, "ALD identities", 1.0, criterion1},
      {2, "classical runaway and preacceleration", 5.0, criterion2},
      {3, "causal ALD-Langevin without runaways", 60.0, criterion3},
      {4, "mass renormalization", 10.0, criterion4},
      {5, "noise fidelity", 120.0, criterion5},
      {6, "fluctuation-dissipation consistency", 10.0, criterion6},
      {7, "decoherence positivity", 30.0, criterion7},
      {8, "integrator quality", 60.0, criterion8},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (elapsed >= c.budget_s) {
      o.ok = false;
      o.detail << " [over time budget " << c.budget_s << " s]";
    }
    std::printf("[%s] criterion %d: %s: %s (%.2f s)\n", o.ok ? "PASS" : "FAIL", c.id, c.title, o.detail.str().c_str(),
                elapsed);
    std::fflush(stdout);
    failures += o.ok ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
