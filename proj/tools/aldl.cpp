// aldl: command-line driver.
//
//   aldl simulate     --config run.json [--seed N] [--workers N] [--out DIR]
//   aldl kernel-table --config run.json [--out DIR]
//   aldl noise-sample --config run.json [--seed N] [--out DIR]
//   aldl fdr-check    --config run.json [--out DIR]
//
// Exit codes: 0 ok, 2 configuration or precondition error, 3 numerical
// abort, 4 fluctuation-dissipation check failed. Errors go to stderr as
// "error[<kind>]: message". ALDL_OUT_DIR replaces the default output
// directory when --out is not given.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "aldl/config.hpp"
#include "aldl/dynamics.hpp"
#include "aldl/error.hpp"
#include "aldl/fdr.hpp"
#include "aldl/io.hpp"
#include "aldl/kernels.hpp"
#include "aldl/noise.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitFdrFail = 4;

int exit_code(aldl::ErrorKind kind) {
  switch (kind) {
    case aldl::ErrorKind::numerical_abort:
    case aldl::ErrorKind::singular_field:
    case aldl::ErrorKind::spectrum:
      return kExitNumerical;
    default:
      return kExitConfig;
  }
}

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::size_t workers = 0;
  std::string out;
};

struct Loaded {
  json echo;
  aldl::RunConfig run;
};

Loaded load(const Options& opt) {
  const auto text = aldl::io::read_file(opt.config_path);
  Loaded l;
  try {
    l.echo = json::parse(text);
  } catch (const json::exception& e) {
    throw aldl::Error(aldl::ErrorKind::config, std::string("malformed config: ") + e.what());
  }
  l.run = aldl::parse_run_config_text(text);
  if (opt.seed) l.run.sim.master_seed = *opt.seed;
  return l;
}

fs::path output_dir(const Options& opt) {
  fs::path dir = "aldl-out";
  if (!opt.out.empty()) {
    dir = opt.out;
  } else if (const char* env = std::getenv("ALDL_OUT_DIR"); env != nullptr && *env != '\0') {
    dir = env;
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw aldl::Error(aldl::ErrorKind::config, "cannot create output directory " + dir.string());
  return dir;
}

class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, const std::string& content) {
    aldl::io::write_file(dir_ / name, content);
    files_.push_back({{"file", name}, {"fnv1a64", aldl::io::fnv1a64_hex(content)}});
  }

  const fs::path& dir() const { return dir_; }
  const json& files() const { return files_; }

 private:
  fs::path dir_;
  json files_ = json::array();
};

std::string numbered(const std::string& stem, std::size_t k) {
  std::string digits = std::to_string(k);
  if (digits.size() < 4) digits.insert(0, 4 - digits.size(), '0');
  return stem + "_" + digits + ".csv";
}

void write_manifest(const OutputSet& out, const std::string& command, const Loaded& cfg,
                    const std::vector<std::uint64_t>& seeds, double wall_seconds) {
  json m;
  m["command"] = command;
  m["version"] = std::string(aldl::io::kVersion);
  m["config"] = cfg.echo;
  m["master_seed"] = cfg.run.sim.master_seed;
  m["path_seeds"] = seeds;
  m["outputs"] = out.files();
  m["wall_clock_seconds"] = wall_seconds;
  aldl::io::write_file(out.dir() / "manifest.json", m.dump(2) + "\n");
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int cmd_simulate(const Options& opt) {
  const auto start = std::chrono::steady_clock::now();
  const auto cfg = load(opt);
  const auto& rc = cfg.run;
  OutputSet out(output_dir(opt));

  std::vector<aldl::TrajectoryResult> results;
  std::vector<std::uint64_t> seeds;
  if (rc.sim.integrator == aldl::Integrator::ald_langevin && rc.noise_enabled) {
    const std::size_t workers = opt.workers > 0 ? opt.workers : std::max(1u, std::thread::hardware_concurrency());
    results = aldl::run_ensemble(rc.sim, workers, rc.noise);
    for (std::size_t k = 0; k < results.size(); ++k) seeds.push_back(aldl::derive_seed(rc.sim.master_seed, k));
  } else {
    if (rc.sim.ensemble_size > 1) {
      std::clog << "warning[config]: deterministic run; ensemble.size ignored\n";
    }
    results.push_back(aldl::simulate(rc.sim));
  }

  const std::size_t n_csv = rc.trajectories == aldl::TrajectoryOutput::all     ? results.size()
                            : rc.trajectories == aldl::TrajectoryOutput::first ? 1
                                                                               : 0;
  for (std::size_t k = 0; k < n_csv; ++k) {
    const std::uint64_t seed = seeds.empty() ? rc.sim.master_seed : seeds[k];
    out.write(numbered("trajectory", k), aldl::io::trajectory_csv(results[k], seed));
  }
  auto summary = aldl::io::ensemble_summary(results, rc.summary_components);
  summary["integrator"] = aldl::to_string(rc.sim.integrator);
  out.write("summary.json", summary.dump(2) + "\n");
  write_manifest(out, "simulate", cfg, seeds, seconds_since(start));
  return kExitOk;
}

int cmd_kernel_table(const Options& opt) {
  const auto start = std::chrono::steady_clock::now();
  const auto cfg = load(opt);
  const auto& rc = cfg.run;
  const auto& kc = rc.sim.kernel;
  if (!(rc.table_r_max > 0.0) || !std::isfinite(rc.table_r_max) || rc.table_points < 2) {
    throw aldl::Error(aldl::ErrorKind::config, "table needs r_max > 0 and points >= 2");
  }
  OutputSet out(output_dir(opt));

  const std::size_t n = rc.table_points;
  const double dr = rc.table_r_max / kc.lambda / static_cast<double>(n - 1);
  std::vector<double> r(n), k_r(n), g2(n), mass(n);
  for (std::size_t i = 0; i < n; ++i) {
    r[i] = dr * static_cast<double>(i);
    k_r[i] = aldl::retarded_kernel(r[i], kc);
    g2[i] = aldl::g2_coefficient(r[i], kc);
    mass[i] = aldl::effective_mass(r[i], rc.sim.m0, kc);
  }
  r.back() = rc.table_r_max / kc.lambda;
  g2.back() = aldl::g2_coefficient(r.back(), kc);
  mass.back() = aldl::effective_mass(r.back(), rc.sim.m0, kc);

  // k_H on the symmetric lag grid -r_max .. r_max.
  const auto table = aldl::make_noise_table(kc, dr, n);
  std::vector<double> s(2 * n - 1), k_h(2 * n - 1);
  for (std::size_t i = 0; i < 2 * n - 1; ++i) {
    const auto lag = static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(n - 1);
    s[i] = dr * static_cast<double>(lag);
    k_h[i] = table.at_lag(lag);
  }

  out.write("k_R.csv", aldl::io::table_csv("k_R scheme=" + aldl::to_string(kc.scheme), "s", r, k_r));
  out.write("k_H.csv", aldl::io::table_csv("k_H scheme=" + aldl::to_string(kc.scheme), "s", s, k_h));
  out.write("g2.csv", aldl::io::table_csv("g2 scheme=" + aldl::to_string(kc.scheme), "r", r, g2));
  out.write("mass.csv", aldl::io::table_csv("mass scheme=" + aldl::to_string(kc.scheme), "r", r, mass));
  write_manifest(out, "kernel-table", cfg, {}, seconds_since(start));
  return kExitOk;
}

int cmd_noise_sample(const Options& opt) {
  const auto start = std::chrono::steady_clock::now();
  const auto cfg = load(opt);
  const auto& rc = cfg.run;
  if (rc.noise_paths < 1) throw aldl::Error(aldl::ErrorKind::config, "noise_sample.paths must be >= 1");
  OutputSet out(output_dir(opt));
  std::vector<std::uint64_t> seeds;
  for (std::size_t k = 0; k < rc.noise_paths; ++k) {
    const auto seed = aldl::derive_seed(rc.sim.master_seed, k);
    seeds.push_back(seed);
    const auto path = aldl::sample_noise_path(rc.sim.kernel, rc.sim.n_steps, rc.sim.dtau, seed, rc.noise);
    out.write(numbered("noise", k), aldl::io::noise_csv(path));
  }
  write_manifest(out, "noise-sample", cfg, seeds, seconds_since(start));
  return kExitOk;
}

int cmd_fdr_check(const Options& opt) {
  const auto start = std::chrono::steady_clock::now();
  const auto cfg = load(opt);
  const auto& rc = cfg.run;
  if (rc.fdr_points < 2) throw aldl::Error(aldl::ErrorKind::config, "fdr.points must be >= 2");
  auto dissipation = rc.sim.kernel;
  if (rc.fdr_dissipation_scheme) dissipation.scheme = *rc.fdr_dissipation_scheme;
  const auto grid = aldl::default_fdr_grid(rc.sim.kernel.lambda, rc.fdr_points);
  const auto report = aldl::fdr_check(rc.sim.kernel, dissipation, grid);
  const auto j = aldl::io::fdr_report_json(report);
  std::cout << j.dump() << "\n";

  OutputSet out(output_dir(opt));
  out.write("fdr_report.json", j.dump(2) + "\n");
  write_manifest(out, "fdr-check", cfg, {}, seconds_since(start));
  return report.pass ? kExitOk : kExitFdrFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ALD-Langevin radiation-reaction simulator"};
  app.set_version_flag("--version", std::string(aldl::io::kVersion));
  app.require_subcommand(1);

  Options opt;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub, bool seeded, bool parallel) {
    sub->add_option("--config", opt.config_path, "run configuration (JSON)")->required();
    sub->add_option("--out", opt.out, "output directory");
    if (seeded) sub->add_option("--seed", seed, "master seed (overrides ensemble.seed)");
    if (parallel) sub->add_option("--workers", opt.workers, "worker threads (default: all cores)");
  };

  auto* simulate = app.add_subcommand("simulate", "integrate trajectories and write CSV/JSON");
  add_common(simulate, true, true);
  auto* kernel_table = app.add_subcommand("kernel-table", "tabulate k_R, k_H, g2 and m(r)");
  add_common(kernel_table, false, false);
  auto* noise_sample = app.add_subcommand("noise-sample", "write sampled noise paths");
  add_common(noise_sample, true, false);
  auto* fdr = app.add_subcommand("fdr-check", "fluctuation-dissipation consistency report");
  add_common(fdr, false, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  for (auto* sub : {simulate, noise_sample}) {
    if (sub->parsed() && sub->count("--seed") > 0) opt.seed = seed;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(opt);
    if (kernel_table->parsed()) return cmd_kernel_table(opt);
    if (noise_sample->parsed()) return cmd_noise_sample(opt);
    if (fdr->parsed()) return cmd_fdr_check(opt);
  } catch (const aldl::Error& e) {
    std::cerr << "error[" << aldl::to_string(e.kind()) << "]: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitConfig;
}
