#pragma once

// Minkowski geometry, worldline containers and external field evaluation.
//
// Conventions (see docs/conventions.md):
//   metric (+,-,-,-), natural units hbar = c = 1, proper-time gauge u.u = 1,
//   F^{i0} = E^i, F^{ij} = -eps^{ijk} B^k, force f^mu = e F^{mu nu} u_nu.

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "aldl/error.hpp"

namespace aldl {

struct FourVector {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr double& operator[](std::size_t mu) {
    return mu == 0 ? t : mu == 1 ? x : mu == 2 ? y : z;
  }
  constexpr double operator[](std::size_t mu) const {
    return mu == 0 ? t : mu == 1 ? x : mu == 2 ? y : z;
  }

  constexpr FourVector& operator+=(const FourVector& o) {
    t += o.t; x += o.x; y += o.y; z += o.z;
    return *this;
  }
  constexpr FourVector& operator-=(const FourVector& o) {
    t -= o.t; x -= o.x; y -= o.y; z -= o.z;
    return *this;
  }
  constexpr FourVector& operator*=(double s) {
    t *= s; x *= s; y *= s; z *= s;
    return *this;
  }

  friend constexpr FourVector operator+(FourVector a, const FourVector& b) { return a += b; }
  friend constexpr FourVector operator-(FourVector a, const FourVector& b) { return a -= b; }
  friend constexpr FourVector operator-(FourVector a) { return a *= -1.0; }
  friend constexpr FourVector operator*(FourVector a, double s) { return a *= s; }
  friend constexpr FourVector operator*(double s, FourVector a) { return a *= s; }
  friend constexpr FourVector operator/(FourVector a, double s) { return a *= 1.0 / s; }
  friend constexpr bool operator==(const FourVector&, const FourVector&) = default;
};

using Vec3 = std::array<double, 3>;

constexpr double minkowski_dot(const FourVector& a, const FourVector& b) {
  return a.t * b.t - a.x * b.x - a.y * b.y - a.z * b.z;
}

/// Component of `v` orthogonal to the unit timelike `u`: v - (v.u) u.
// Divides by u.u so that the result stays orthogonal when u has drifted off
// shell; otherwise the drift feeds back on itself.
constexpr FourVector project_orthogonal(const FourVector& v, const FourVector& u) {
  return v - (minkowski_dot(v, u) / minkowski_dot(u, u)) * u;
}

/// Rescales a future-directed timelike vector to unit Minkowski norm.
inline FourVector normalize_velocity(const FourVector& u) {
  const double norm2 = minkowski_dot(u, u);
  if (!(norm2 > 0.0) || !(u.t > 0.0)) {
    throw Error(ErrorKind::gauge_violation,
                "velocity is not future-directed timelike (u.u = " + std::to_string(norm2) + ")");
  }
  return u / std::sqrt(norm2);
}

/// Unit four-velocity for a given lab-frame 3-velocity |v| < 1.
inline FourVector four_velocity_from_3velocity(const Vec3& v) {
  const double v2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
  if (!(v2 < 1.0)) {
    throw Error(ErrorKind::gauge_violation, "3-velocity must satisfy |v| < 1");
  }
  const double gamma = 1.0 / std::sqrt(1.0 - v2);
  return {gamma, gamma * v[0], gamma * v[1], gamma * v[2]};
}

/// Unit four-velocity for spatial components u^i (u^0 fixed by the mass shell).
inline FourVector four_velocity_from_spatial(const Vec3& us) {
  return {std::sqrt(1.0 + us[0] * us[0] + us[1] * us[1] + us[2] * us[2]), us[0], us[1], us[2]};
}

struct WorldlineState {
  double tau = 0.0;
  FourVector position;
  FourVector velocity{1.0, 0.0, 0.0, 0.0};
  FourVector acceleration;
  FourVector jerk;
};

/// Samples on the uniform proper-time grid tau_k = tau_0 + k * dtau.
struct Trajectory {
  double dtau = 0.0;
  std::vector<WorldlineState> samples;

  double tau_at(std::size_t k) const {
    return samples.front().tau + static_cast<double>(k) * dtau;
  }
};

// ---------------------------------------------------------------------------
// External field

struct NoField {};
struct ConstantE {
  Vec3 e{};
};
struct ConstantB {
  Vec3 b{};
};
/// Linearly polarised plane wave E = amplitude * pol * cos(w t - k.x), B = k_hat x E.
struct PlaneWave {
  double amplitude = 0.0;
  Vec3 wavevector{0.0, 0.0, 1.0};
  Vec3 polarization{1.0, 0.0, 0.0};
};
/// Static point source at the origin, E = charge_product * r / |r|^3.
struct Coulomb {
  double charge_product = 0.0;
};

using ExternalField = std::variant<NoField, ConstantE, ConstantB, PlaneWave, Coulomb>;

/// Contravariant F^{mu nu}.
using FieldTensor = std::array<std::array<double, 4>, 4>;

inline FieldTensor tensor_from_eb(const Vec3& e, const Vec3& b) {
  FieldTensor f{};
  for (std::size_t i = 0; i < 3; ++i) {
    f[i + 1][0] = e[i];
    f[0][i + 1] = -e[i];
  }
  f[1][2] = -b[2];
  f[2][1] = b[2];
  f[1][3] = b[1];
  f[3][1] = -b[1];
  f[2][3] = -b[0];
  f[3][2] = b[0];
  return f;
}

namespace detail {

inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double dot3(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Vec3 scale(const Vec3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }

struct PlaneWaveFrame {
  Vec3 k_hat;
  Vec3 pol;
  double omega;
};

inline PlaneWaveFrame plane_wave_frame(const PlaneWave& w) {
  const double kn = std::sqrt(dot3(w.wavevector, w.wavevector));
  if (!(kn > 0.0)) throw Error(ErrorKind::config, "plane wave needs a nonzero wavevector");
  const Vec3 k_hat = scale(w.wavevector, 1.0 / kn);
  Vec3 pol = w.polarization;
  const double along = dot3(pol, k_hat);
  for (std::size_t i = 0; i < 3; ++i) pol[i] -= along * k_hat[i];
  const double pn = std::sqrt(dot3(pol, pol));
  if (!(pn > 0.0)) throw Error(ErrorKind::config, "plane wave polarization must not be parallel to k");
  return {k_hat, scale(pol, 1.0 / pn), kn};
}

inline double plane_wave_phase(const PlaneWaveFrame& fr, const FourVector& x) {
  return fr.omega * (x.t - (fr.k_hat[0] * x.x + fr.k_hat[1] * x.y + fr.k_hat[2] * x.z));
}

inline Vec3 coulomb_offset(const FourVector& x) {
  const Vec3 r{x.x, x.y, x.z};
  if (!(dot3(r, r) > 1e-30)) {
    throw Error(ErrorKind::singular_field, "coulomb field evaluated at zero radius");
  }
  return r;
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace detail

inline FieldTensor field_tensor(const ExternalField& field, const FourVector& x) {
  using namespace detail;
  return std::visit(
      overloaded{
          [](const NoField&) { return FieldTensor{}; },
          [](const ConstantE& c) { return tensor_from_eb(c.e, {}); },
          [](const ConstantB& c) { return tensor_from_eb({}, c.b); },
          [&](const PlaneWave& w) {
            const auto fr = plane_wave_frame(w);
            const Vec3 e = scale(fr.pol, w.amplitude * std::cos(plane_wave_phase(fr, x)));
            return tensor_from_eb(e, cross(fr.k_hat, e));
          },
          [&](const Coulomb& c) {
            const Vec3 r = coulomb_offset(x);
            const double rn = std::sqrt(dot3(r, r));
            return tensor_from_eb(scale(r, c.charge_product / (rn * rn * rn)), {});
          },
      },
      field);
}

/// Directional derivative (d . partial) F^{mu nu} at `x`.
inline FieldTensor field_tensor_derivative(const ExternalField& field, const FourVector& x,
                                           const FourVector& d) {
  using namespace detail;
  return std::visit(
      overloaded{
          [](const NoField&) { return FieldTensor{}; },
          [](const ConstantE&) { return FieldTensor{}; },
          [](const ConstantB&) { return FieldTensor{}; },
          [&](const PlaneWave& w) {
            const auto fr = plane_wave_frame(w);
            const double dphase =
                fr.omega * (d.t - (fr.k_hat[0] * d.x + fr.k_hat[1] * d.y + fr.k_hat[2] * d.z));
            const Vec3 de =
                scale(fr.pol, -w.amplitude * std::sin(plane_wave_phase(fr, x)) * dphase);
            return tensor_from_eb(de, cross(fr.k_hat, de));
          },
          [&](const Coulomb& c) {
            const Vec3 r = coulomb_offset(x);
            const Vec3 ds{d.x, d.y, d.z};
            const double r2 = dot3(r, r);
            const double rn = std::sqrt(r2);
            const double inv3 = 1.0 / (r2 * rn);
            const double rd = dot3(r, ds);
            Vec3 de{};
            for (std::size_t i = 0; i < 3; ++i) {
              de[i] = c.charge_product * (ds[i] * inv3 - 3.0 * r[i] * rd * inv3 / r2);
            }
            return tensor_from_eb(de, {});
          },
      },
      field);
}

/// Contracts F^{mu nu} v_nu (index lowered with the metric).
inline FourVector contract_lowered(const FieldTensor& f, const FourVector& v) {
  FourVector out;
  for (std::size_t mu = 0; mu < 4; ++mu) {
    out[mu] = f[mu][0] * v.t - f[mu][1] * v.x - f[mu][2] * v.y - f[mu][3] * v.z;
  }
  return out;
}

/// f^mu = e F^{mu nu}(x) u_nu. Orthogonal to u by antisymmetry.
inline FourVector lorentz_force(double e, const ExternalField& field, const FourVector& position,
                                const FourVector& u) {
  return e * contract_lowered(field_tensor(field, position), u);
}

inline bool is_zero_field(const ExternalField& field) {
  return std::holds_alternative<NoField>(field);
}

}  // namespace aldl
