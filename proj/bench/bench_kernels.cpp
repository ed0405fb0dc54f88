// Times the OpenMP kernels against their serial reference implementations:
// BEM assembly, the two matrix-free matvecs, and far-field accumulation.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <numbers>

#include "elastscat/capacitance.hpp"
#include "elastscat/foldy.hpp"
#include "elastscat/lippmann.hpp"

using namespace elastscat;

namespace {

double time_once(const std::function<void()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double time_best(const std::function<void()>& fn, int reps = 3) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) best = std::min(best, time_once(fn));
  return best;
}

void row(const char* name, const char* size, double serial, double parallel) {
  std::printf("%-28s %-14s %10.3f ms %10.3f ms %7.2fx\n", name, size, serial * 1e3,
              parallel * 1e3, serial / parallel);
}

}  // namespace

int main(int argc, char** argv) {
  const int threads = argc > 1 ? std::atoi(argv[1]) : omp_get_max_threads();
  omp_set_num_threads(threads);
  std::printf("elastscat kernel benchmark, %d thread(s)\n", threads);
  std::printf("%-28s %-14s %13s %13s %9s\n", "kernel", "size", "serial", "parallel", "speedup");

  const auto medium = make_medium(1.0, 1.0, 1.0);
  const auto wave = make_plane_wave(Vec3(0, 0, 1), Vec3(1, 0, 0), 1.0, 0.5);

  {
    const auto mesh = make_icosphere(3, 1.0);
    const char* size = "N=1280 tris";
    const double ts = time_best([&] { acoustic_capacitance(mesh, Exec::serial); }, 2);
    const double tp = time_best([&] { acoustic_capacitance(mesh, Exec::parallel); }, 2);
    row("acoustic capacitance", size, ts, tp);
    const double es = time_best([&] { elastic_capacitance(mesh, 1.0, 1.0, Exec::serial); }, 2);
    const double ep = time_best([&] { elastic_capacitance(mesh, 1.0, 1.0, Exec::parallel); }, 2);
    row("elastic capacitance", size, es, ep);
  }

  {
    const double a = 1.0 / 2048;  // matvec-dominated size
    const auto part = partition_domain(Box{}, a, constant_k(0.0));
    auto config = place_scatterers(part, a, 1.0 / 3.0, 1);
    CapacitanceMatrix cap;
    cap.c_elastic = 8.0 * Mat3::Identity();
    cap.c_acoustic = 2.0 * std::numbers::pi;
    attach_capacitance(config, cap);
    FoldyOptions opt;
    opt.path = FoldySolverPath::iterative;
    const char* size = "M=2048";
    const double ts =
        time_best([&] { solve_foldy(config, medium, wave, opt, Exec::serial); }, 2);
    const double tp =
        time_best([&] { solve_foldy(config, medium, wave, opt, Exec::parallel); }, 2);
    row("foldy matrix-free solve", size, ts, tp);

    const auto amps = solve_foldy(config, medium, wave, opt);
    const auto dirs = cube26_directions();
    const double fs =
        time_best([&] { foldy_farfield(amps, config, medium, wave, dirs, Exec::serial); });
    const double fp =
        time_best([&] { foldy_farfield(amps, config, medium, wave, dirs, Exec::parallel); });
    row("foldy far field", "M=2048, 26 dir", fs, fp);
  }

  {
    const auto grid = make_grid(16);
    const auto p = uniform_potential(grid, 6.0 * Mat3::Identity());
    const char* size = "n=16 (12288)";
    const double ts =
        time_best([&] { solve_lippmann_schwinger(medium, p, wave, {}, Exec::serial); }, 2);
    const double tp =
        time_best([&] { solve_lippmann_schwinger(medium, p, wave, {}, Exec::parallel); }, 2);
    row("lippmann-schwinger solve", size, ts, tp);

    const auto f = solve_lippmann_schwinger(medium, p, wave);
    const auto dirs = cube26_directions();
    const double fs = time_best([&] { ls_farfield(medium, p, f, dirs, Exec::serial); });
    const double fp = time_best([&] { ls_farfield(medium, p, f, dirs, Exec::parallel); });
    row("volume far field", "n=16, 26 dir", fs, fp);
  }

  return 0;
}
