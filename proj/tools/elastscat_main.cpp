// elastscat command-line driver: config ingestion, pipeline orchestration,
// cached capacitance extraction, and plot-ready CSV/JSON outputs.

#include <omp.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

#include "elastscat/capacitance.hpp"
#include "elastscat/experiments.hpp"
#include "elastscat/foldy.hpp"
#include "elastscat/lippmann.hpp"

using namespace elastscat;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "0.1.0";

class SchemaError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash8(uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf).substr(0, 8);
}

void atomic_write(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

void atomic_move(const fs::path& tmp, const fs::path& path) {
  fs::create_directories(path.parent_path());
  fs::rename(tmp, path);
}

json load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("config file not found: " + path.string());
  try {
    json j;
    in >> j;
    return j;
  } catch (const std::exception& e) {
    throw SchemaError(std::string("config is not valid JSON: ") + e.what());
  }
}

template <typename T>
T require(const json& j, const std::string& key) {
  if (!j.contains(key)) throw SchemaError("missing config field: " + key);
  try {
    return j.at(key).get<T>();
  } catch (const std::exception&) {
    throw SchemaError("config field has the wrong type: " + key);
  }
}

Vec3 vec3_of(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw SchemaError(what + " must be a 3-array");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

cplx cplx_of(const json& j, const std::string& what) {
  if (j.is_number()) return cplx(j.get<double>(), 0.0);
  if (j.is_array() && j.size() == 2) return cplx(j[0].get<double>(), j[1].get<double>());
  throw SchemaError(what + " must be a number or [re, im]");
}

ElasticMedium medium_of(const json& cfg) {
  const json m = cfg.value("medium", json::object());
  try {
    return make_medium(m.value("lambda", 1.0), m.value("mu", 1.0), m.value("omega", 1.0),
                       m.value("rho_background", 1.0));
  } catch (const std::invalid_argument& e) {
    throw SchemaError(std::string("medium: ") + e.what());
  }
}

IncidentPlaneWave wave_of(const json& cfg) {
  const json w = cfg.value("wave", json::object());
  const Vec3 theta =
      w.contains("theta") ? vec3_of(w.at("theta"), "wave.theta") : Vec3(0, 0, 1);
  const Vec3 perp =
      w.contains("theta_perp") ? vec3_of(w.at("theta_perp"), "wave.theta_perp") : Vec3(1, 0, 0);
  try {
    return make_plane_wave(theta.normalized(), perp.normalized(),
                           w.contains("alpha") ? cplx_of(w.at("alpha"), "wave.alpha") : cplx(1, 0),
                           w.contains("beta") ? cplx_of(w.at("beta"), "wave.beta") : cplx(0, 0));
  } catch (const std::invalid_argument& e) {
    throw SchemaError(std::string("wave: ") + e.what());
  }
}

std::vector<Vec3> directions_of(const json& cfg) {
  const json d = cfg.value("directions", json{{"set", "cube26"}});
  if (d.contains("set")) {
    if (d.at("set") == "cube26") return cube26_directions();
    throw SchemaError("unknown direction set: " + d.at("set").get<std::string>());
  }
  if (d.contains("list")) {
    std::vector<Vec3> out;
    for (const auto& v : d.at("list")) out.push_back(vec3_of(v, "direction").normalized());
    if (out.empty()) throw SchemaError("directions.list must not be empty");
    return out;
  }
  throw SchemaError("directions must carry 'set' or 'list'");
}

KField k_of(const json& cfg) {
  const json k = cfg.value("k", json{{"type", "constant"}, {"value", 0.0}});
  try {
    return k_spec_from_json(k);
  } catch (const std::exception& e) {
    throw SchemaError(std::string("k spec: ") + e.what());
  }
}

SurfaceMesh mesh_of(const json& shape) {
  if (shape.contains("mesh_path")) {
    const fs::path p = shape.at("mesh_path").get<std::string>();
    if (!fs::exists(p)) throw SchemaError("mesh file does not exist: " + p.string());
    auto mesh = load_mesh(p);
    validate_mesh(mesh);
    return mesh;
  }
  const auto name = require<std::string>(shape, "builtin");
  const int level = shape.value("level", 3);
  if (name == "sphere") return make_icosphere(level, shape.value("radius", 1.0));
  if (name == "cube") return make_cube(level, shape.value("edge", 1.0));
  if (name == "ellipsoid")
    return make_ellipsoid(level, shape.contains("axes")
                                     ? vec3_of(shape.at("axes"), "shape.axes")
                                     : Vec3(2.0, 1.0, 1.0));
  throw SchemaError("unknown builtin shape: " + name);
}

struct Paths {
  fs::path out_dir;
  fs::path cache_dir;
};

CapacitanceMatrix resolve_capacitance(const json& cfg, const ElasticMedium& medium,
                                      const Paths& paths, bool* cache_hit = nullptr) {
  const json shape = cfg.value("shape", json{{"builtin", "sphere"}, {"level", 3}});
  auto mesh = mesh_of(shape);
  const fs::path cache =
      paths.cache_dir / capacitance_cache_name(mesh.label, mesh.level, medium.lambda, medium.mu);
  if (fs::exists(cache)) {
    if (cache_hit) *cache_hit = true;
    return load_capacitance(cache);
  }
  if (cache_hit) *cache_hit = false;
  const auto cap = elastic_capacitance(mesh, medium.lambda, medium.mu);
  fs::create_directories(paths.cache_dir);
  const fs::path tmp = cache.string() + ".tmp." + std::to_string(::getpid());
  save_capacitance(cap, tmp);
  atomic_move(tmp, cache);
  return cap;
}

json meta_block(uint64_t hash, const std::string& command, double runtime_s) {
  return json{{"config_hash", hash8(hash)},
              {"artifact_version", kVersion},
              {"command", command},
              {"runtime_s", runtime_s}};
}

json farfield_summary(const FarFieldPattern& p) {
  return json{{"directions", p.directions.size()}, {"max_norm", farfield_max_norm(p)}};
}

std::string csv_meta(uint64_t hash) {
  return "config_hash=" + hash8(hash) + " artifact_version=" + kVersion;
}

// command implementations; each returns the primary output path

int cmd_capacitance(const json& cfg, const Paths& paths, uint64_t hash, bool dry_run) {
  const auto medium = medium_of(cfg);
  const json shape = cfg.value("shape", json{{"builtin", "sphere"}, {"level", 3}});
  if (dry_run) {
    json plan{{"command", "capacitance"},
              {"config_hash", hash8(hash)},
              {"steps", {"mesh", "acoustic solve", "elastic solve", "cache write"}}};
    std::printf("%s\n", plan.dump(2).c_str());
    return 0;
  }
  bool hit = false;
  const auto t0 = std::chrono::steady_clock::now();
  const auto cap = resolve_capacitance(cfg, medium, paths, &hit);
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json out = meta_block(hash, "capacitance", dt);
  out["cache_hit"] = hit;
  out["shape"] = cap.shape;
  out["level"] = cap.level;
  out["c_acoustic"] = cap.c_acoustic;
  out["c_elastic_diag"] = {cap.c_elastic(0, 0), cap.c_elastic(1, 1), cap.c_elastic(2, 2)};
  out["err_estimate"] = cap.err_estimate;
  std::printf("%s\n", out.dump(2).c_str());
  return 0;
}

int cmd_foldy(const json& cfg, const Paths& paths, uint64_t hash, bool dry_run,
              std::optional<uint64_t> seed_override) {
  const auto medium = medium_of(cfg);
  const auto wave = wave_of(cfg);
  const auto dirs = directions_of(cfg);
  const json dist = cfg.value("distribution", json::object());
  const double a = require<double>(dist, "a");
  const double t = dist.value("t", 1.0 / 3.0);
  const uint64_t seed = seed_override.value_or(dist.value("seed", 1));
  const auto k = k_of(dist);

  const fs::path ff_path = paths.out_dir / ("foldy_" + hash8(hash) + "_farfield.csv");
  const fs::path cfg_path = paths.out_dir / ("foldy_" + hash8(hash) + "_config.json");
  const fs::path meta_path = paths.out_dir / ("foldy_" + hash8(hash) + "_meta.json");

  if (dry_run) {
    json plan{{"command", "foldy"},
              {"config_hash", hash8(hash)},
              {"steps", {"capacitance", "partition", "placement", "precheck", "solve", "farfield"}},
              {"outputs", {ff_path.string(), cfg_path.string(), meta_path.string()}}};
    std::printf("%s\n", plan.dump(2).c_str());
    return 0;
  }
  if (fs::exists(meta_path)) {
    json old;
    std::ifstream(meta_path) >> old;
    if (old.value("config_hash", "") == hash8(hash)) {
      std::printf("{\"cache_hit\": true, \"meta\": \"%s\"}\n", meta_path.string().c_str());
      return 0;
    }
  }

  const auto t0 = std::chrono::steady_clock::now();
  const auto cap = resolve_capacitance(cfg, medium, paths);
  const auto part = partition_domain(Box{}, a, k);
  PlacementOptions popt;
  popt.d_min = dist.value("d_min", 0.5);
  popt.jitter = dist.value("jitter", 0.0);
  auto config = place_scatterers(part, a, t, seed, popt);
  attach_capacitance(config, cap);
  const auto report = precheck_invertibility(config, medium, std::sqrt(3.0));

  FoldyOptions fopt;
  fopt.override_precheck = cfg.value("override_precheck", true);
  const auto tol = cfg.value("tolerances", json::object());
  fopt.tol = tol.value("foldy_residual", 1e-10);
  const auto amps = solve_foldy(config, medium, wave, fopt);
  const auto ff = foldy_farfield(amps, config, medium, wave, dirs);
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  {
    const fs::path tmp = cfg_path.string() + ".tmp";
    save_configuration(config, k, tmp,
                       json{{"config_hash", hash8(hash)}, {"artifact_version", kVersion}});
    atomic_move(tmp, cfg_path);
  }
  {
    const fs::path tmp = ff_path.string() + ".tmp";
    save_farfield_csv(ff, tmp, csv_meta(hash));
    atomic_move(tmp, ff_path);
  }
  json meta = meta_block(hash, "foldy", dt);
  meta["bodies"] = config.body_count();
  meta["d_actual"] = config.d_actual;
  meta["precheck_pass"] = report.pass();
  meta["solver"] = amps.solver;
  meta["residual"] = amps.residual_norm;
  meta["farfield"] = farfield_summary(ff);
  meta["outputs"] = {ff_path.string(), cfg_path.string()};
  atomic_write(meta_path, meta.dump(2) + "\n");
  std::printf("%s\n", meta.dump(2).c_str());
  return 0;
}

int cmd_effective(const json& cfg, const Paths& paths, uint64_t hash, bool dry_run) {
  const auto medium = medium_of(cfg);
  const auto wave = wave_of(cfg);
  const auto dirs = directions_of(cfg);
  const json eff = cfg.value("effective", json::object());
  const int n = eff.value("grid_n", 16);
  const auto k = k_of(eff);

  const fs::path field_path = paths.out_dir / ("effective_" + hash8(hash) + "_field.csv");
  const fs::path ff_path = paths.out_dir / ("effective_" + hash8(hash) + "_farfield.csv");
  const fs::path meta_path = paths.out_dir / ("effective_" + hash8(hash) + "_meta.json");
  if (dry_run) {
    json plan{{"command", "effective"},
              {"config_hash", hash8(hash)},
              {"steps", {"capacitance", "potential", "ls solve", "farfield"}},
              {"outputs", {field_path.string(), ff_path.string(), meta_path.string()}}};
    std::printf("%s\n", plan.dump(2).c_str());
    return 0;
  }
  if (fs::exists(meta_path)) {
    json old;
    std::ifstream(meta_path) >> old;
    if (old.value("config_hash", "") == hash8(hash)) {
      std::printf("{\"cache_hit\": true, \"meta\": \"%s\"}\n", meta_path.string().c_str());
      return 0;
    }
  }

  const auto t0 = std::chrono::steady_clock::now();
  Mat3 c0;
  if (eff.contains("c0_scalar")) {
    c0 = eff.at("c0_scalar").get<double>() * Mat3::Identity();
  } else {
    c0 = resolve_capacitance(cfg, medium, paths).c_elastic;
  }
  const auto grid = make_grid(n);
  auto potential = limit_potential(grid, k, c0);
  if (eff.contains("rho")) {
    const auto rho_field = k_spec_from_json(eff.at("rho"));  // reuse the field spec format
    add_density_contrast(potential, medium.omega, [&](const Vec3& z) { return rho_field(z); });
  }
  LsOptions lopt;
  const auto tol = cfg.value("tolerances", json::object());
  lopt.tol = tol.value("ls_residual", 1e-8);
  const auto field = solve_lippmann_schwinger(medium, potential, wave, lopt);
  const auto ff = ls_farfield(medium, potential, field, dirs);
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  {
    const fs::path tmp = field_path.string() + ".tmp";
    save_volume_csv(field, tmp, csv_meta(hash));
    atomic_move(tmp, field_path);
  }
  {
    const fs::path tmp = ff_path.string() + ".tmp";
    save_farfield_csv(ff, tmp, csv_meta(hash));
    atomic_move(tmp, ff_path);
  }
  json meta = meta_block(hash, "effective", dt);
  meta["grid_n"] = n;
  meta["solver"] = field.solver;
  meta["residual"] = field.residual_norm;
  meta["iterations"] = field.iterations;
  meta["farfield"] = farfield_summary(ff);
  meta["outputs"] = {field_path.string(), ff_path.string()};
  atomic_write(meta_path, meta.dump(2) + "\n");
  std::printf("%s\n", meta.dump(2).c_str());
  return 0;
}

int cmd_sweep(const json& cfg, const Paths& paths, uint64_t hash, bool dry_run,
              std::optional<uint64_t> seed_override, bool emit_plot) {
  const json sw = cfg.value("sweep", json::object());
  SweepSpec spec;
  spec.medium = medium_of(cfg);
  spec.wave = wave_of(cfg);
  spec.directions = directions_of(cfg);
  if (sw.contains("a_values")) {
    spec.a_values = sw.at("a_values").get<std::vector<double>>();
  } else {
    spec.a_values.clear();
    const int k_lo = sw.value("a_pow2_from", 6), k_hi = sw.value("a_pow2_to", 9);
    for (int p = k_lo; p <= k_hi; ++p) spec.a_values.push_back(std::pow(2.0, -p));
  }
  spec.t = sw.value("t", 1.0 / 3.0);
  spec.k = k_of(sw);
  spec.gamma = sw.value("gamma", 1.0);
  spec.seed = seed_override.value_or(sw.value("seed", 1));
  spec.grid_n = sw.value("grid_n", 20);
  spec.d_min = sw.value("d_min", 0.5);
  spec.jitter = sw.value("jitter", 0.0);
  spec.strict_precheck = sw.value("strict_precheck", false);

  const fs::path report_path = paths.out_dir / ("sweep_" + hash8(hash) + "_report.json");
  if (dry_run) {
    json plan{{"command", "sweep"},
              {"config_hash", hash8(hash)},
              {"a_values", spec.a_values},
              {"predicted_exponent", spec.predicted_exponent()},
              {"outputs", {report_path.string()}}};
    std::printf("%s\n", plan.dump(2).c_str());
    return 0;
  }
  if (fs::exists(report_path)) {
    json old;
    std::ifstream(report_path) >> old;
    // aborted reports are kept for inspection but never satisfy a rerun
    if (old.value("config_hash", "") == hash8(hash) && !old.value("aborted", false)) {
      std::printf("{\"cache_hit\": true, \"report\": \"%s\"}\n", report_path.string().c_str());
      return 0;
    }
  }

  const auto t0 = std::chrono::steady_clock::now();
  const auto cap = resolve_capacitance(cfg, spec.medium, paths);
  const auto res = convergence_sweep(spec, cap);
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  json report = meta_block(hash, "sweep", dt);
  report["spec"] = {{"t", spec.t},
                    {"gamma", spec.gamma},
                    {"seed", spec.seed},
                    {"grid_n", spec.grid_n},
                    {"a_values", spec.a_values},
                    {"k", k_spec_to_json(spec.k)},
                    {"shape", cfg.value("shape", json{{"builtin", "sphere"}, {"level", 3}})}};
  report["predicted_exponent"] = res.predicted_exponent;
  json per_a = json::array();
  std::vector<fs::path> csvs;
  for (std::size_t i = 0; i < res.points.size(); ++i) {
    const auto& p = res.points[i];
    per_a.push_back({{"a", p.a},
                     {"M", p.bodies},
                     {"d_actual", p.d_actual},
                     {"e", p.discrepancy},
                     {"runtime_s", p.runtime_s},
                     {"precheck_pass", p.precheck_pass}});
    const fs::path csv =
        paths.out_dir / ("sweep_" + hash8(hash) + "_a" + std::to_string(i) + "_farfield.csv");
    const fs::path tmp = csv.string() + ".tmp";
    save_farfield_csv(res.foldy_patterns[i], tmp, csv_meta(hash));
    atomic_move(tmp, csv);
    csvs.push_back(csv);
  }
  report["per_a"] = per_a;
  if (res.aborted) {
    report["aborted"] = true;
    report["abort_stage"] = res.abort_stage;
    report["abort_message"] = res.abort_message;
    atomic_write(report_path, report.dump(2) + "\n");
    std::fprintf(stderr, "%s\n",
                 json{{"error",
                       {{"code", 3},
                        {"kind", "numerical"},
                        {"message", "sweep aborted at stage " + res.abort_stage}}}}
                     .dump()
                     .c_str());
    return 3;
  }
  report["slope"] = res.slope;
  report["intercept"] = res.intercept;
  report["fit_residual"] = res.fit_residual;
  report["monotone_ok"] = res.monotone_ok;
  report["monotone_violations"] = res.monotone_violations;
  report["t_range_warning"] = res.t_range_warning;
  {
    const fs::path csv = paths.out_dir / ("sweep_" + hash8(hash) + "_ls_farfield.csv");
    const fs::path tmp = csv.string() + ".tmp";
    save_farfield_csv(res.ls_pattern, tmp, csv_meta(hash));
    atomic_move(tmp, csv);
    csvs.push_back(csv);
  }
  json outs = json::array();
  for (const auto& c : csvs) outs.push_back(c.string());
  report["outputs"] = outs;
  atomic_write(report_path, report.dump(2) + "\n");

  if (emit_plot) {
    std::string script =
        "#!/usr/bin/env python3\n"
        "# generic log-log plot of sweep discrepancies from the report json\n"
        "import json, sys\n"
        "import matplotlib.pyplot as plt\n"
        "rep = json.load(open(sys.argv[1] if len(sys.argv) > 1 else '" +
        report_path.string() +
        "'))\n"
        "a = [p['a'] for p in rep['per_a']]\n"
        "e = [p['e'] for p in rep['per_a']]\n"
        "plt.loglog(a, e, 'o-')\n"
        "plt.xlabel('a'); plt.ylabel('far-field discrepancy')\n"
        "plt.title('slope %.3f (predicted %.3f)' % (rep['slope'], rep['predicted_exponent']))\n"
        "plt.savefig('sweep.png', dpi=150)\n";
    atomic_write(paths.out_dir / ("sweep_" + hash8(hash) + "_plot.py"), script);
  }
  std::printf("%s\n", report.dump(2).c_str());
  return 0;
}

int cmd_scenario(const json& cfg, const Paths& paths, uint64_t hash, bool dry_run,
                 std::optional<uint64_t> seed_override) {
  const json sc = cfg.value("scenario", json::object());
  const auto name = require<std::string>(sc, "name");
  const fs::path report_path =
      paths.out_dir / ("scenario_" + name + "_" + hash8(hash) + "_report.json");
  if (dry_run) {
    json plan{{"command", "scenario"},
              {"name", name},
              {"config_hash", hash8(hash)},
              {"outputs", {report_path.string()}}};
    std::printf("%s\n", plan.dump(2).c_str());
    return 0;
  }
  if (fs::exists(report_path)) {
    json old;
    std::ifstream(report_path) >> old;
    if (old.value("config_hash", "") == hash8(hash)) {
      std::printf("{\"cache_hit\": true, \"report\": \"%s\"}\n", report_path.string().c_str());
      return 0;
    }
  }

  const auto t0 = std::chrono::steady_clock::now();
  json report;
  if (name == "negative_density") {
    NegativeDensityParams p;
    p.medium = medium_of(cfg);
    p.wave = wave_of(cfg);
    p.rho = sc.value("rho", 1.0);
    p.k_plus_1 = sc.value("k_plus_1", 2.0);
    if (sc.contains("c0_scalar"))
      p.c0 = sc.at("c0_scalar").get<double>() * Mat3::Identity();
    p.grid_n = sc.value("grid_n", 12);
    const auto rep = run_negative_density(p);
    report["eigenvalues"] = {rep.eigenvalues(0), rep.eigenvalues(1), rep.eigenvalues(2)};
    report["farfield_max"] = rep.farfield_max;
    report["negative_definite"] = rep.eigenvalues(2) < 0.0;
  } else if (name == "cloak") {
    CloakParams p;
    p.medium = medium_of(cfg);
    p.wave = wave_of(cfg);
    if (sc.contains("k")) p.k = k_spec_from_json(sc.at("k"));
    p.c_scalar = sc.value("c_scalar", 1.5);
    p.grid_n = sc.value("grid_n", 12);
    if (sc.contains("a_values")) p.a_values = sc.at("a_values").get<std::vector<double>>();
    const auto rep = run_cloak(p);
    report["rho_alone_max"] = rep.rho_alone_max;
    report["nulled_max"] = rep.nulled_max;
    report["discrete_max"] = rep.discrete_max;
    report["discrete_ratio"] = rep.discrete_ratio;
  } else if (name == "vanishing") {
    VanishingParams p;
    p.medium = medium_of(cfg);
    p.wave = wave_of(cfg);
    p.s = sc.value("s", 0.8);
    p.t = sc.value("t", 1.0 / 3.0);
    p.a_start = sc.value("a_start", 1.0 / 32.0);
    p.halvings = sc.value("halvings", 4);
    p.seed = seed_override.value_or(sc.value("seed", 1));
    p.cap = resolve_capacitance(cfg, p.medium, paths);
    const auto rep = run_vanishing(p);
    report["a_values"] = rep.a_values;
    report["bodies"] = rep.bodies;
    report["farfield_max"] = rep.farfield_max;
    report["strictly_decreasing"] = rep.strictly_decreasing;
  } else {
    throw SchemaError("unknown scenario: " + name +
                      " (expected negative_density | cloak | vanishing)");
  }
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json meta = meta_block(hash, "scenario", dt);
  meta["name"] = name;
  meta.update(report);
  atomic_write(report_path, meta.dump(2) + "\n");
  std::printf("%s\n", meta.dump(2).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"elastic multiple-scattering simulator: Foldy-Lax clusters, capacitance "
               "extraction, and equivalent-medium comparisons"};
  std::string config_path;
  std::string out_dir = "out";
  int threads = 0;
  bool dry_run = false;
  bool emit_plot = false;
  std::optional<uint64_t> seed;
  app.add_option("--config", config_path, "run configuration (JSON)")->required();
  app.add_option("--out", out_dir, "output directory (default: out)");
  app.add_option("--threads", threads, "OpenMP/BLAS thread count");
  app.add_option("--seed", seed, "override the configured seed");
  app.add_flag("--dry-run", dry_run, "validate and print the execution plan");
  app.add_flag("--emit-plot-script", emit_plot, "write a generic plotting script for sweeps");
  CLI11_PARSE(app, argc, argv);

  try {
    if (threads > 0) {
      omp_set_num_threads(threads);
      setenv("OPENBLAS_NUM_THREADS", std::to_string(threads).c_str(), 1);
    }
    const json cfg = load_config(config_path);
    const auto command = require<std::string>(cfg, "command");
    uint64_t hash = fnv1a(cfg.dump());
    if (seed) hash = fnv1a(cfg.dump() + "#seed=" + std::to_string(*seed));
    Paths paths;
    paths.out_dir = cfg.value("output_dir", out_dir);
    if (const char* env = std::getenv("ELASTSCAT_OUT")) paths.out_dir = env;
    if (out_dir != "out") paths.out_dir = out_dir;  // flag wins over config and env
    paths.cache_dir = paths.out_dir / "cache";
    if (!dry_run) fs::create_directories(paths.out_dir);

    const json tolerances = cfg.value("tolerances", json::object());
    for (auto it = tolerances.begin(); it != tolerances.end(); ++it)
      if (!(it.value().is_number() && it.value().get<double>() > 0.0))
        throw SchemaError("tolerances must be positive numbers: " + it.key());

    if (command == "capacitance") return cmd_capacitance(cfg, paths, hash, dry_run);
    if (command == "foldy") return cmd_foldy(cfg, paths, hash, dry_run, seed);
    if (command == "effective") return cmd_effective(cfg, paths, hash, dry_run);
    if (command == "sweep") return cmd_sweep(cfg, paths, hash, dry_run, seed, emit_plot);
    if (command == "scenario") return cmd_scenario(cfg, paths, hash, dry_run, seed);
    throw SchemaError("unknown command: " + command +
                      " (expected capacitance | foldy | effective | sweep | scenario)");
  } catch (const SchemaError& e) {
    std::fprintf(stderr, "%s\n",
                 json{{"error", {{"code", 2}, {"kind", "schema"}, {"message", e.what()}}}}
                     .dump()
                     .c_str());
    return 2;
  } catch (const InfeasibleError& e) {
    std::fprintf(stderr, "%s\n",
                 json{{"error", {{"code", 4}, {"kind", "infeasible"}, {"message", e.what()}}}}
                     .dump()
                     .c_str());
    return 4;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "%s\n",
                 json{{"error", {{"code", 2}, {"kind", "schema"}, {"message", e.what()}}}}
                     .dump()
                     .c_str());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n",
                 json{{"error", {{"code", 3}, {"kind", "numerical"}, {"message", e.what()}}}}
                     .dump()
                     .c_str());
    return 3;
  }
}
