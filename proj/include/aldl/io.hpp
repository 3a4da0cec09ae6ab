#pragma once

// CSV/JSON export and output checksums.

#include <nlohmann/json.hpp>

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aldl/dynamics.hpp"
#include "aldl/error.hpp"
#include "aldl/fdr.hpp"
#include "aldl/kernels.hpp"
#include "aldl/noise.hpp"

#ifndef ALDL_VERSION
#define ALDL_VERSION "0.1.0"
#endif

namespace aldl::io {

inline constexpr std::string_view kVersion = ALDL_VERSION;

/// Shortest round-trip decimal form; identical bytes for identical doubles.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

/// FNV-1a 64-bit digest of a byte string, as 16 hex digits.
inline std::string fnv1a64_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::config, "cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::config, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

inline std::string provenance_line(std::string_view what, std::uint64_t seed) {
  return "# aldl " + std::string(kVersion) + " " + std::string(what) + " seed=" + std::to_string(seed) + "\n";
}

/// Columns tau,t,x,y,z,ut,ux,uy,uz,at,ax,ay,az,mass_shell_drift.
inline std::string trajectory_csv(const TrajectoryResult& result, std::uint64_t seed) {
  std::string out = provenance_line("trajectory integrator=" + to_string(result.integrator), seed);
  out += "tau,t,x,y,z,ut,ux,uy,uz,at,ax,ay,az,mass_shell_drift\n";
  const auto& s = result.trajectory.samples;
  for (std::size_t k = 0; k < s.size(); ++k) {
    out += format_double(s[k].tau);
    for (const FourVector* v : {&s[k].position, &s[k].velocity, &s[k].acceleration}) {
      for (std::size_t mu = 0; mu < 4; ++mu) {
        out += ',';
        out += format_double((*v)[mu]);
      }
    }
    out += ',';
    out += format_double(result.mass_shell_drift[k]);
    out += '\n';
  }
  return out;
}

/// Columns tau,eta_t,eta_x,eta_y,eta_z with tau_k = k dtau.
inline std::string noise_csv(const NoisePath& path) {
  std::string out = provenance_line("noise spectrum=" + path.spectrum, path.seed);
  out += "tau,eta_t,eta_x,eta_y,eta_z\n";
  for (std::size_t k = 0; k < path.samples.size(); ++k) {
    out += format_double(static_cast<double>(k) * path.dtau);
    for (std::size_t mu = 0; mu < 4; ++mu) {
      out += ',';
      out += format_double(path.samples[k][mu]);
    }
    out += '\n';
  }
  return out;
}

/// Two-column table with the given header names.
inline std::string table_csv(std::string_view what, std::string_view x_name,
                             std::span<const double> xs, std::span<const double> ys) {
  std::string out = provenance_line(what, 0);
  out += std::string(x_name) + ",value\n";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out += format_double(xs[i]);
    out += ',';
    out += format_double(ys[i]);
    out += '\n';
  }
  return out;
}

inline nlohmann::json fdr_report_json(const FdrReport& rep) {
  nlohmann::json j;
  j["scheme"] = to_string(rep.noise_scheme);
  if (rep.dissipation_scheme != rep.noise_scheme) {
    j["dissipation_scheme"] = to_string(rep.dissipation_scheme);
  }
  j["beta"] = std::isinf(rep.beta) ? nlohmann::json("inf") : nlohmann::json(rep.beta);
  j["lambda"] = rep.lambda;
  j["max_abs_deviation"] = rep.max_abs_deviation;
  j["pass"] = rep.pass;
  j["points"] = rep.rows.size();
  j["excluded"] = rep.excluded;
  return j;
}

/// Per-grid-point ensemble mean and variance of the named components
/// (t, x, y, z, ut, ux, uy, uz, at, ax, ay, az).
inline nlohmann::json ensemble_summary(std::span<const TrajectoryResult> results,
                                       std::span<const std::string> components) {
  auto pick = [](const WorldlineState& s, const std::string& name) -> double {
    static const std::array<std::string, 4> axes{"t", "x", "y", "z"};
    const FourVector* v = &s.position;
    std::string axis = name;
    if (name.size() == 2 && name[0] == 'u') {
      v = &s.velocity;
      axis = name.substr(1);
    } else if (name.size() == 2 && name[0] == 'a') {
      v = &s.acceleration;
      axis = name.substr(1);
    }
    for (std::size_t mu = 0; mu < 4; ++mu) {
      if (axes[mu] == axis) return (*v)[mu];
    }
    throw Error(ErrorKind::config, "unknown summary component '" + name + "'");
  };

  nlohmann::json j;
  const std::size_t n = results.empty() ? 0 : results.front().trajectory.samples.size();
  const auto count = static_cast<double>(results.size());
  std::vector<double> tau(n);
  for (std::size_t k = 0; k < n; ++k) tau[k] = results.front().trajectory.samples[k].tau;
  j["tau"] = tau;
  j["paths"] = results.size();
  for (const auto& name : components) {
    std::vector<double> mean(n, 0.0), var(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      double m = 0.0;
      for (const auto& r : results) m += pick(r.trajectory.samples[k], name);
      m /= count;
      double v = 0.0;
      for (const auto& r : results) {
        const double d = pick(r.trajectory.samples[k], name) - m;
        v += d * d;
      }
      mean[k] = m;
      var[k] = results.size() > 1 ? v / (count - 1.0) : 0.0;
    }
    j["components"][name] = {{"mean", mean}, {"variance", var}};
  }
  nlohmann::json diag = nlohmann::json::array();
  for (const auto& r : results) {
    diag.push_back({{"runaway", r.runaway_flag},
                    {"efold_rate", r.efold_rate},
                    {"energy_radiated", r.energy_radiated},
                    {"max_mass_shell_drift", r.max_mass_shell_drift()},
                    {"renormalizations", r.renormalizations},
                    {"noise_seed", r.noise_seed ? nlohmann::json(*r.noise_seed) : nlohmann::json()}});
  }
  j["diagnostics"] = diag;
  return j;
}

}  // namespace aldl::io
