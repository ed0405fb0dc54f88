#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>

using nlohmann::json;
namespace fs = std::filesystem;

#ifndef ELASTSCAT_BIN
#error "ELASTSCAT_BIN must point at the CLI binary"
#endif

namespace {

struct RunResult {
  int exit_code;
  std::string out;
  std::string err;
};

RunResult run_cli(const std::string& args) {
  const fs::path out = fs::temp_directory_path() / "elastscat_cli_stdout.txt";
  const fs::path err = fs::temp_directory_path() / "elastscat_cli_stderr.txt";
  const std::string cmd = std::string(ELASTSCAT_BIN) + " " + args + " > " + out.string() +
                          " 2> " + err.string();
  const int rc = std::system(cmd.c_str());
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  return {WEXITSTATUS(rc), slurp(out), slurp(err)};
}

fs::path write_config(const json& j, const std::string& name) {
  const fs::path p = fs::temp_directory_path() / name;
  std::ofstream(p) << j.dump(2);
  return p;
}

fs::path fresh_outdir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / name;
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST_CASE("schema violations exit with code 2") {
  auto res = run_cli("--config /nonexistent/config.json");
  CHECK(res.exit_code == 2);
  CHECK(json::parse(res.err).at("error").at("code") == 2);

  const auto bad = fs::temp_directory_path() / "elastscat_bad.json";
  std::ofstream(bad) << "{ not json";
  res = run_cli("--config " + bad.string());
  CHECK(res.exit_code == 2);

  const auto unknown = write_config(json{{"command", "frobnicate"}}, "elastscat_unknown.json");
  res = run_cli("--config " + unknown.string());
  CHECK(res.exit_code == 2);
  CHECK(json::parse(res.err).at("error").at("message").get<std::string>().find("unknown") !=
        std::string::npos);
}

TEST_CASE("capacitance command computes then hits the cache") {
  const auto outdir = fresh_outdir("elastscat_out_cap");
  const auto cfg = write_config(json{{"command", "capacitance"},
                                     {"medium", {{"lambda", 1.0}, {"mu", 1.0}}},
                                     {"shape", {{"builtin", "sphere"}, {"level", 2}}}},
                                "elastscat_cap.json");
  auto res = run_cli("--config " + cfg.string() + " --out " + outdir.string());
  REQUIRE(res.exit_code == 0);
  auto first = json::parse(res.out);
  CHECK(first.at("cache_hit") == false);
  CHECK(first.at("c_acoustic").get<double>() > 0.0);

  res = run_cli("--config " + cfg.string() + " --out " + outdir.string());
  REQUIRE(res.exit_code == 0);
  CHECK(json::parse(res.out).at("cache_hit") == true);
}

TEST_CASE("foldy command: outputs, idempotence, dry run") {
  const auto outdir = fresh_outdir("elastscat_out_foldy");
  const json cfg_json{{"command", "foldy"},
                      {"medium", {{"lambda", 1.0}, {"mu", 1.0}, {"omega", 1.0}}},
                      {"shape", {{"builtin", "sphere"}, {"level", 1}}},
                      {"distribution", {{"a", 1.0 / 64}, {"t", 1.0 / 3}, {"seed", 3}}},
                      {"wave", {{"theta", {0, 0, 1}}, {"theta_perp", {1, 0, 0}}, {"alpha", 1.0}}}};
  const auto cfg = write_config(cfg_json, "elastscat_foldy.json");

  auto dry = run_cli("--config " + cfg.string() + " --out " + outdir.string() + " --dry-run");
  REQUIRE(dry.exit_code == 0);
  CHECK_FALSE(fs::exists(outdir));  // plan only, nothing written

  auto res = run_cli("--config " + cfg.string() + " --out " + outdir.string());
  REQUIRE(res.exit_code == 0);
  const auto meta = json::parse(res.out);
  CHECK(meta.at("residual").get<double>() <= 1e-10);
  CHECK(meta.at("bodies").get<int>() == 64);
  const std::string h = meta.at("config_hash");
  const fs::path ff = outdir / ("foldy_" + h + "_farfield.csv");
  const fs::path cfg_out = outdir / ("foldy_" + h + "_config.json");
  REQUIRE(fs::exists(ff));
  REQUIRE(fs::exists(cfg_out));

  // rerun: cache hit, outputs untouched byte for byte
  const auto mtime = fs::last_write_time(ff);
  auto rerun = run_cli("--config " + cfg.string() + " --out " + outdir.string());
  REQUIRE(rerun.exit_code == 0);
  CHECK(json::parse(rerun.out).value("cache_hit", false) == true);
  CHECK(fs::last_write_time(ff) == mtime);

  // a different seed override recomputes into a different keyed output
  auto seeded = run_cli("--config " + cfg.string() + " --out " + outdir.string() + " --seed 9");
  REQUIRE(seeded.exit_code == 0);
  CHECK(json::parse(seeded.out).value("cache_hit", false) == false);
}

TEST_CASE("infeasible distribution exits with code 4 naming the packing bound") {
  const auto outdir = fresh_outdir("elastscat_out_packing");
  const auto cfg = write_config(
      json{{"command", "foldy"},
           {"shape", {{"builtin", "sphere"}, {"level", 1}}},
           {"distribution", {{"a", 1.0 / 512}, {"t", 0.2}, {"seed", 1}}}},
      "elastscat_packing.json");
  const auto res = run_cli("--config " + cfg.string() + " --out " + outdir.string());
  CHECK(res.exit_code == 4);
  const auto err = json::parse(res.err);
  CHECK(err.at("error").at("code") == 4);
  CHECK(err.at("error").at("message").get<std::string>().find("packing bound") !=
        std::string::npos);
}

TEST_CASE("sweep command writes a report with a slope field") {
  const auto outdir = fresh_outdir("elastscat_out_sweep");
  const auto cfg = write_config(
      json{{"command", "sweep"},
           {"shape", {{"builtin", "sphere"}, {"level", 1}}},
           {"sweep",
            {{"a_pow2_from", 5}, {"a_pow2_to", 8}, {"grid_n", 8}, {"seed", 1}}}},
      "elastscat_sweep.json");
  const auto res = run_cli("--config " + cfg.string() + " --out " + outdir.string());
  REQUIRE(res.exit_code == 0);
  const auto report = json::parse(res.out);
  CHECK(report.contains("slope"));
  CHECK(report.at("per_a").size() == 4);
  for (const auto& p : report.at("per_a")) {
    CHECK(p.at("e").get<double>() > 0.0);
    CHECK(p.contains("runtime_s"));
  }
  const fs::path report_path =
      outdir / ("sweep_" + report.at("config_hash").get<std::string>() + "_report.json");
  CHECK(fs::exists(report_path));

  // every CSV ends with the config-hash comment line
  for (const auto& out : report.at("outputs")) {
    std::ifstream in(out.get<std::string>());
    std::string line, last;
    while (std::getline(in, line))
      if (!line.empty()) last = line;
    CHECK(last.find("config_hash=") != std::string::npos);
  }
}

TEST_CASE("effective command writes the volume field and far field") {
  const auto outdir = fresh_outdir("elastscat_out_eff");
  const auto cfg = write_config(
      json{{"command", "effective"},
           {"medium", {{"lambda", 1.0}, {"mu", 1.0}, {"omega", 2.0}}},
           {"effective",
            {{"grid_n", 8},
             {"k", {{"type", "constant"}, {"value", 1.0}}},
             {"c0_scalar", 1.5},
             {"rho", {{"type", "constant"}, {"value", 1.25}}}}}},
      "elastscat_eff.json");
  const auto res = run_cli("--config " + cfg.string() + " --out " + outdir.string());
  REQUIRE(res.exit_code == 0);
  const auto meta = json::parse(res.out);
  CHECK(meta.at("residual").get<double>() <= 1e-8);
  const std::string h = meta.at("config_hash");
  REQUIRE(fs::exists(outdir / ("effective_" + h + "_field.csv")));
  REQUIRE(fs::exists(outdir / ("effective_" + h + "_farfield.csv")));
  std::ifstream in(outdir / ("effective_" + h + "_field.csv"));
  std::string header;
  std::getline(in, header);
  CHECK(header == "ix,iy,iz,Re(u1),Re(u2),Re(u3),Im(u1),Im(u2),Im(u3)");

  // rerun is a cache hit
  const auto rerun = run_cli("--config " + cfg.string() + " --out " + outdir.string());
  REQUIRE(rerun.exit_code == 0);
  CHECK(json::parse(rerun.out).value("cache_hit", false) == true);
}

TEST_CASE("identical config and seed give byte-identical outputs") {
  const json cfg_json{{"command", "foldy"},
                      {"shape", {{"builtin", "sphere"}, {"level", 1}}},
                      {"distribution",
                       {{"a", 1.0 / 64}, {"t", 1.0 / 3}, {"seed", 11}, {"jitter", 0.5}}}};
  const auto cfg = write_config(cfg_json, "elastscat_repro.json");
  const auto out1 = fresh_outdir("elastscat_out_repro1");
  const auto out2 = fresh_outdir("elastscat_out_repro2");
  REQUIRE(run_cli("--config " + cfg.string() + " --out " + out1.string()).exit_code == 0);
  REQUIRE(run_cli("--config " + cfg.string() + " --out " + out2.string()).exit_code == 0);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  // data outputs must match byte for byte; meta files carry wall-clock times
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(out1)) {
    const auto name = entry.path().filename().string();
    if (name.find("_meta") != std::string::npos) continue;
    if (entry.path().extension() != ".csv" && entry.path().extension() != ".json") continue;
    const fs::path twin = out2 / name;
    REQUIRE(fs::exists(twin));
    CHECK(slurp(entry.path()) == slurp(twin));
    ++compared;
  }
  CHECK(compared >= 2);
}

TEST_CASE("numerical failures exit with code 3") {
  const auto outdir = fresh_outdir("elastscat_out_num");
  // a residual tolerance no solver can reach forces the contract violation
  const auto cfg = write_config(
      json{{"command", "foldy"},
           {"shape", {{"builtin", "sphere"}, {"level", 1}}},
           {"distribution", {{"a", 1.0 / 64}, {"t", 1.0 / 3}, {"seed", 1}}},
           {"tolerances", {{"foldy_residual", 1e-30}}}},
      "elastscat_num.json");
  const auto res = run_cli("--config " + cfg.string() + " --out " + outdir.string());
  CHECK(res.exit_code == 3);
  CHECK(json::parse(res.err).at("error").at("kind") == "numerical");
}

TEST_CASE("scenario command: negative_density") {
  const auto outdir = fresh_outdir("elastscat_out_scen");
  const auto cfg = write_config(
      json{{"command", "scenario"},
           {"medium", {{"lambda", 1.0}, {"mu", 1.0}, {"omega", 1.0}}},
           {"scenario",
            {{"name", "negative_density"}, {"k_plus_1", 2.0}, {"c0_scalar", 1.0}, {"grid_n", 6}}}},
      "elastscat_scen.json");
  const auto res = run_cli("--config " + cfg.string() + " --out " + outdir.string());
  REQUIRE(res.exit_code == 0);
  const auto rep = json::parse(res.out);
  CHECK(rep.at("negative_definite") == true);
  CHECK(rep.at("eigenvalues")[2].get<double>() < 0.0);

  // unrealizable parameters are a schema-level rejection (exit 2)
  const auto bad = write_config(
      json{{"command", "scenario"},
           {"scenario", {{"name", "negative_density"}, {"k_plus_1", 0.1}, {"c0_scalar", 1.0}}}},
      "elastscat_scen_bad.json");
  CHECK(run_cli("--config " + bad.string() + " --out " + outdir.string()).exit_code == 2);
}
