#pragma once

// Run configuration file (JSON). Every object is closed: unknown keys are
// rejected. Schema: docs/config.md.

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "aldl/core.hpp"
#include "aldl/dynamics.hpp"
#include "aldl/error.hpp"
#include "aldl/kernels.hpp"
#include "aldl/noise.hpp"

namespace aldl {

enum class TrajectoryOutput { none, first, all };

struct RunConfig {
  SimConfig sim;
  bool noise_enabled = false;
  NoiseOptions noise;
  TrajectoryOutput trajectories = TrajectoryOutput::first;
  std::vector<std::string> summary_components{"x", "ux"};
  // kernel-table
  double table_r_max = 100.0;  // units of 1/lambda
  std::size_t table_points = 1001;
  // noise-sample
  std::size_t noise_paths = 1;
  // fdr-check
  std::size_t fdr_points = 121;
  std::optional<CutoffScheme> fdr_dissipation_scheme;
};

namespace config_detail {

using nlohmann::json;

inline void require_object(const json& j, const std::string& where,
                           const std::set<std::string>& allowed) {
  if (!j.is_object()) throw Error(ErrorKind::config, where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) {
      throw Error(ErrorKind::config, "unknown key '" + key + "' in " + where);
    }
  }
}

inline double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw Error(ErrorKind::config, where + " must be a number");
  return j.get<double>();
}

inline std::size_t count(const json& j, const std::string& where) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0)) {
    throw Error(ErrorKind::config, where + " must be a nonnegative integer");
  }
  return j.get<std::size_t>();
}

inline Vec3 vec3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorKind::config, where + " must be [x, y, z]");
  return {number(j[0], where), number(j[1], where), number(j[2], where)};
}

inline FourVector vec4(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4) throw Error(ErrorKind::config, where + " must be [t, x, y, z]");
  return {number(j[0], where), number(j[1], where), number(j[2], where), number(j[3], where)};
}

inline CutoffScheme scheme(const json& j, const std::string& where) {
  const auto s = j.is_string() ? j.get<std::string>() : std::string{};
  if (s == "exponential") return CutoffScheme::exponential;
  if (s == "gaussian") return CutoffScheme::gaussian;
  throw Error(ErrorKind::config, where + " must be \"exponential\" or \"gaussian\"");
}

inline KernelConfig kernel(const json& j) {
  require_object(j, "kernel", {"scheme", "lambda", "e_squared", "beta", "kappa"});
  KernelConfig k;
  if (j.contains("scheme")) k.scheme = scheme(j["scheme"], "kernel.scheme");
  if (j.contains("lambda")) k.lambda = number(j["lambda"], "kernel.lambda");
  if (j.contains("e_squared")) k.e_squared = number(j["e_squared"], "kernel.e_squared");
  if (j.contains("kappa")) k.kappa = number(j["kappa"], "kernel.kappa");
  if (j.contains("beta")) {
    const auto& b = j["beta"];
    if (b.is_string() && (b == "inf" || b == "vacuum")) {
      k.beta = std::numeric_limits<double>::infinity();
    } else {
      k.beta = number(b, "kernel.beta");
    }
  }
  k.validate();
  return k;
}

inline ExternalField field(const json& j) {
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
    throw Error(ErrorKind::config, "field needs a string 'type'");
  }
  const auto type = j["type"].get<std::string>();
  if (type == "none") {
    require_object(j, "field", {"type"});
    return NoField{};
  }
  if (type == "constant_E") {
    require_object(j, "field", {"type", "vector"});
    return ConstantE{vec3(j.at("vector"), "field.vector")};
  }
  if (type == "constant_B") {
    require_object(j, "field", {"type", "vector"});
    return ConstantB{vec3(j.at("vector"), "field.vector")};
  }
  if (type == "plane_wave") {
    require_object(j, "field", {"type", "amplitude", "wavevector", "polarization"});
    PlaneWave w;
    w.amplitude = number(j.at("amplitude"), "field.amplitude");
    w.wavevector = vec3(j.at("wavevector"), "field.wavevector");
    w.polarization = vec3(j.at("polarization"), "field.polarization");
    detail::plane_wave_frame(w);
    return w;
  }
  if (type == "coulomb") {
    require_object(j, "field", {"type", "charge_product"});
    return Coulomb{number(j.at("charge_product"), "field.charge_product")};
  }
  throw Error(ErrorKind::config, "unknown field type '" + type + "'");
}

inline Integrator integrator(const json& j) {
  const auto s = j.is_string() ? j.get<std::string>() : std::string{};
  if (s == "ald_direct") return Integrator::ald_direct;
  if (s == "landau_lifshitz") return Integrator::landau_lifshitz;
  if (s == "ald_langevin") return Integrator::ald_langevin;
  throw Error(ErrorKind::config, "integrator must be ald_direct, landau_lifshitz or ald_langevin");
}

}  // namespace config_detail

/// Parses and validates a run configuration. Errors are ErrorKind::config
/// (or the physical precondition kind raised by SimConfig::validate).
inline RunConfig parse_run_config(const nlohmann::json& j) {
  using namespace config_detail;
  require_object(j, "config",
                 {"integrator", "mass", "charge_sign", "kernel", "grid", "field", "initial", "noise",
                  "ensemble", "output", "table", "noise_sample", "fdr"});
  RunConfig rc;
  SimConfig& s = rc.sim;
  if (j.contains("integrator")) s.integrator = integrator(j["integrator"]);
  if (j.contains("mass")) s.m0 = number(j["mass"], "mass");
  if (j.contains("charge_sign")) s.charge_sign = number(j["charge_sign"], "charge_sign");
  if (j.contains("kernel")) s.kernel = kernel(j["kernel"]);
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    require_object(g, "grid", {"n_steps", "dtau"});
    if (g.contains("n_steps")) s.n_steps = count(g["n_steps"], "grid.n_steps");
    if (g.contains("dtau")) s.dtau = number(g["dtau"], "grid.dtau");
  }
  if (j.contains("field")) s.field = field(j["field"]);
  if (j.contains("initial")) {
    const auto& in = j["initial"];
    require_object(in, "initial", {"tau", "position", "velocity", "acceleration"});
    if (in.contains("tau")) s.initial_state.tau = number(in["tau"], "initial.tau");
    if (in.contains("position")) s.initial_state.position = vec4(in["position"], "initial.position");
    if (in.contains("velocity")) {
      s.initial_state.velocity = four_velocity_from_spatial(vec3(in["velocity"], "initial.velocity"));
    }
    if (in.contains("acceleration")) {
      s.initial_state.acceleration = vec4(in["acceleration"], "initial.acceleration");
      s.acceleration_override = true;
    }
  }
  if (j.contains("noise")) {
    const auto& n = j["noise"];
    require_object(n, "noise", {"enabled", "padding", "method", "project"});
    if (n.contains("enabled")) rc.noise_enabled = n["enabled"].get<bool>();
    if (n.contains("padding")) rc.noise.padding = count(n["padding"], "noise.padding");
    if (n.contains("project")) s.project_noise = n["project"].get<bool>();
    if (n.contains("method")) {
      const auto m = n["method"].get<std::string>();
      if (m == "spectral") {
        rc.noise.method = SynthesisMethod::spectral;
      } else if (m == "circulant_embedding") {
        rc.noise.method = SynthesisMethod::circulant_embedding;
      } else {
        throw Error(ErrorKind::config, "noise.method must be spectral or circulant_embedding");
      }
    }
    if (rc.noise.padding < 1) throw Error(ErrorKind::config, "noise.padding must be >= 1");
  }
  if (j.contains("ensemble")) {
    const auto& e = j["ensemble"];
    require_object(e, "ensemble", {"size", "seed"});
    if (e.contains("size")) s.ensemble_size = count(e["size"], "ensemble.size");
    if (e.contains("seed")) s.master_seed = e["seed"].get<std::uint64_t>();
  }
  if (j.contains("output")) {
    const auto& o = j["output"];
    require_object(o, "output", {"trajectories", "summary_components"});
    if (o.contains("trajectories")) {
      const auto t = o["trajectories"].get<std::string>();
      if (t == "none") {
        rc.trajectories = TrajectoryOutput::none;
      } else if (t == "first") {
        rc.trajectories = TrajectoryOutput::first;
      } else if (t == "all") {
        rc.trajectories = TrajectoryOutput::all;
      } else {
        throw Error(ErrorKind::config, "output.trajectories must be none, first or all");
      }
    }
    if (o.contains("summary_components")) {
      rc.summary_components = o["summary_components"].get<std::vector<std::string>>();
    }
  }
  if (j.contains("table")) {
    const auto& t = j["table"];
    require_object(t, "table", {"r_max", "points"});
    if (t.contains("r_max")) rc.table_r_max = number(t["r_max"], "table.r_max");
    if (t.contains("points")) rc.table_points = count(t["points"], "table.points");
  }
  if (j.contains("noise_sample")) {
    const auto& n = j["noise_sample"];
    require_object(n, "noise_sample", {"paths"});
    if (n.contains("paths")) rc.noise_paths = count(n["paths"], "noise_sample.paths");
  }
  if (j.contains("fdr")) {
    const auto& f = j["fdr"];
    require_object(f, "fdr", {"points", "dissipation_scheme"});
    if (f.contains("points")) rc.fdr_points = count(f["points"], "fdr.points");
    if (f.contains("dissipation_scheme")) {
      rc.fdr_dissipation_scheme = scheme(f["dissipation_scheme"], "fdr.dissipation_scheme");
    }
  }
  s.validate();
  return rc;
}

inline RunConfig parse_run_config_text(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config, std::string("malformed config: ") + e.what());
  }
  try {
    return parse_run_config(j);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config, std::string("config type error: ") + e.what());
  }
}

}  // namespace aldl
