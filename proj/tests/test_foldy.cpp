#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <random>

#include "elastscat/foldy.hpp"
#include "elastscat/kupradze.hpp"
#include "support/oracles.hpp"

using namespace elastscat;

namespace {

CapacitanceMatrix synth_cap(const Mat3& cbar, double cbar_acoustic) {
  CapacitanceMatrix c;
  c.c_elastic = cbar;
  c.c_acoustic = cbar_acoustic;
  c.shape = "synthetic";
  return c;
}

ScattererConfiguration manual_config(std::vector<Vec3> positions, double a,
                                     const CapacitanceMatrix& cap, double s = 1.0) {
  ScattererConfiguration c;
  c.positions = std::move(positions);
  c.a = a;
  c.t = 1.0 / 3.0;
  c.d_actual = c.positions.size() > 1 ? min_pairwise_distance_exhaustive(c.positions) : 1.0;
  c.s_exponent = s;
  c.m_max_const = c.positions.size() * std::pow(a, s);
  attach_capacitance(c, cap);
  return c;
}

const ElasticMedium kMedium = make_medium(1.0, 1.0, 1.0);
const IncidentPlaneWave kWave = make_plane_wave(Vec3(0, 0, 1), Vec3(1, 0, 0), 1.0, 0.5);

}  // namespace

TEST_CASE("single body: Q = -C U^i(z) exactly") {
  const auto cap = synth_cap(7.5 * Mat3::Identity(), 2 * std::numbers::pi);
  const double a = 1.0 / 64;
  const auto config = manual_config({Vec3(0.3, 0.4, 0.5)}, a, cap);
  const auto amps = solve_foldy(config, kMedium, kWave);
  const CVec3 want = -(7.5 * a) * evaluate_incident(kWave, kMedium, config.positions[0]);
  CHECK((amps.q[0] - want).norm() < 1e-14 * want.norm());
  CHECK(amps.residual_norm <= 1e-10);
}

TEST_CASE("two bodies match an independent 6x6 inversion") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.1, 0.9);
  const auto cap = synth_cap(8.0 * Mat3::Identity(), 2 * std::numbers::pi);
  const double a = 1.0 / 50;
  for (int rep = 0; rep < 5; ++rep) {
    const Vec3 z0(u(rng), u(rng), u(rng)), z1(u(rng), u(rng), u(rng));
    if ((z0 - z1).norm() < 0.2) continue;
    const auto config = manual_config({z0, z1}, a, cap);
    const auto amps = solve_foldy(config, kMedium, kWave);

    CMatX b = CMatX::Zero(6, 6);
    const Mat3 cinv = (cap.c_elastic * a).inverse();
    b.block<3, 3>(0, 0) = cinv.cast<cplx>();
    b.block<3, 3>(3, 3) = cinv.cast<cplx>();
    b.block<3, 3>(0, 3) = kupradze_tensor(kMedium, z0, z1);
    b.block<3, 3>(3, 0) = kupradze_tensor(kMedium, z1, z0);
    CVecX rhs(6);
    rhs.segment<3>(0) = -evaluate_incident(kWave, kMedium, z0);
    rhs.segment<3>(3) = -evaluate_incident(kWave, kMedium, z1);
    const CVecX q = b.fullPivLu().solve(rhs);
    CHECK((amps.q[0] - q.segment<3>(0)).norm() < 1e-12 * q.norm());
    CHECK((amps.q[1] - q.segment<3>(3)).norm() < 1e-12 * q.norm());
  }
}

TEST_CASE("dense and matrix-free paths agree") {
  const double a = 1.0 / 512;
  const auto part = partition_domain(Box{}, a, constant_k(0.0));
  auto config = place_scatterers(part, a, 1.0 / 3.0, 5);
  attach_capacitance(config, synth_cap(8.0 * Mat3::Identity(), 2 * std::numbers::pi));

  FoldyOptions dense_opt;
  dense_opt.path = FoldySolverPath::dense;
  FoldyOptions iter_opt;
  iter_opt.path = FoldySolverPath::iterative;

  const auto qd = solve_foldy(config, kMedium, kWave, dense_opt);
  const auto qi = solve_foldy(config, kMedium, kWave, iter_opt);
  CHECK(qd.solver == "dense");
  CHECK(qi.solver == "gmres");
  CHECK(qd.residual_norm <= 1e-10);
  CHECK(qi.residual_norm <= 1e-10);
  double num = 0.0, den = 0.0;
  for (int i = 0; i < config.body_count(); ++i) {
    num += (qd.q[i] - qi.q[i]).squaredNorm();
    den += qd.q[i].squaredNorm();
  }
  CHECK(std::sqrt(num / den) < 1e-8);
}

TEST_CASE("serial and parallel solves are bit-identical") {
  const double a = 1.0 / 64;
  const auto part = partition_domain(Box{}, a, constant_k(0.0));
  auto config = place_scatterers(part, a, 1.0 / 3.0, 5);
  attach_capacitance(config, synth_cap(8.0 * Mat3::Identity(), 2 * std::numbers::pi));
  FoldyOptions opt;
  opt.path = FoldySolverPath::iterative;
  const auto qp = solve_foldy(config, kMedium, kWave, opt, Exec::parallel);
  const auto qs = solve_foldy(config, kMedium, kWave, opt, Exec::serial);
  for (int i = 0; i < config.body_count(); ++i) CHECK((qp.q[i] - qs.q[i]).norm() == 0.0);
}

TEST_CASE("amplitudes are linear in the incident wave") {
  const auto cap = synth_cap(6.0 * Mat3::Identity(), 2 * std::numbers::pi);
  const auto config = manual_config({Vec3(0.2, 0.2, 0.2), Vec3(0.8, 0.7, 0.4)}, 0.01, cap);
  const auto w1 = make_plane_wave(Vec3(0, 0, 1), Vec3(1, 0, 0), 1.0, 0.0);
  const auto w2 = make_plane_wave(Vec3(0, 0, 1), Vec3(1, 0, 0), 0.0, 1.0);
  const cplx ca(0.7, -0.3), cb(-0.2, 1.1);
  const auto combined = make_plane_wave(Vec3(0, 0, 1), Vec3(1, 0, 0), ca, cb);
  const auto q1 = solve_foldy(config, kMedium, w1);
  const auto q2 = solve_foldy(config, kMedium, w2);
  const auto qc = solve_foldy(config, kMedium, combined);
  for (int i = 0; i < 2; ++i)
    CHECK((qc.q[i] - ca * q1.q[i] - cb * q2.q[i]).norm() < 1e-12 * qc.q[i].norm());
}

TEST_CASE("precheck: single small body passes, physical cluster fails condition 2") {
  const auto sphere_like = synth_cap(8.0 * Mat3::Identity(), 2 * std::numbers::pi);
  const auto single = manual_config({Vec3(0.5, 0.5, 0.5)}, 1e-7, sphere_like);
  const auto rep = precheck_invertibility(single, kMedium, std::sqrt(3.0));
  CHECK(rep.distance_ok);
  CHECK(rep.distance_value == 0.0);
  CHECK(rep.capacitance_ok);  // M_max = M a = 1e-7 makes the bound large
  CHECK(rep.capacitance_bound > rep.capacitance_value);
  // the same sphere at coarse a sits outside the sufficient condition
  const auto coarse = manual_config({Vec3(0.5, 0.5, 0.5)}, 1e-2, sphere_like);
  CHECK_FALSE(precheck_invertibility(coarse, kMedium, std::sqrt(3.0)).capacitance_ok);

  const double a = 1.0 / 512;
  const auto part = partition_domain(Box{}, a, constant_k(0.0));
  auto cluster = place_scatterers(part, a, 1.0 / 3.0, 2);
  attach_capacitance(cluster, sphere_like);
  const auto rep2 = precheck_invertibility(cluster, kMedium, std::sqrt(3.0));
  CHECK(rep2.distance_ok);
  CHECK_FALSE(rep2.capacitance_ok);  // 2 pi exceeds the printed bound
  CHECK(rep2.capacitance_value == doctest::Approx(2 * std::numbers::pi));
  CHECK(rep2.capacitance_bound < 1.0);
}

TEST_CASE("precheck flags an unreliable c_ring outside the smallness regime") {
  const auto cap = synth_cap(0.05 * Mat3::Identity(), 0.02);
  const auto config = manual_config({Vec3(0.5, 0.5, 0.5)}, 1e-3, cap);
  const auto hot = make_medium(1.0, 1.0, 2.5);  // kappa_s = 2.5 > 2/sqrt(3)
  const auto rep = precheck_invertibility(config, hot, std::sqrt(3.0));
  CHECK_FALSE(rep.c_ring_reliable);
  const auto rep_ok = precheck_invertibility(config, kMedium, 1.0);
  CHECK(rep_ok.c_ring_reliable);
}

TEST_CASE("solve honors the precheck unless overridden") {
  const double a = 1.0 / 512;
  const auto part = partition_domain(Box{}, a, constant_k(0.0));
  auto cluster = place_scatterers(part, a, 1.0 / 3.0, 2);
  attach_capacitance(cluster, synth_cap(8.0 * Mat3::Identity(), 2 * std::numbers::pi));
  FoldyOptions strict;
  strict.override_precheck = false;
  CHECK_THROWS_WITH_AS(solve_foldy(cluster, kMedium, kWave, strict),
                       doctest::Contains("precheck"), std::invalid_argument);
  FoldyOptions lax;
  lax.override_precheck = true;
  CHECK_NOTHROW(solve_foldy(cluster, kMedium, kWave, lax));
}

TEST_CASE("lemma norm bound holds on randomized prechecked configurations") {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  const double a = 1e-3;
  int accepted = 0;
  while (accepted < 20) {
    const int m = 3 + static_cast<int>(rng() % 18);
    std::vector<Vec3> pts;
    while (static_cast<int>(pts.size()) < m) {
      const Vec3 p(u(rng), u(rng), u(rng));
      bool ok = true;
      for (const auto& q : pts) ok = ok && (p - q).norm() > 0.05;
      if (ok) pts.push_back(p);
    }
    // synthetic capacitance: eigenvalues inside the Lemma 2.1 bracket around
    // a small acoustic value chosen to satisfy the precheck hypothesis
    auto config = manual_config(pts, a, synth_cap(Mat3::Identity(), 1.0));
    auto probe = precheck_invertibility(config, kMedium, std::sqrt(3.0));
    const double ca = 0.5 * probe.capacitance_bound;
    std::uniform_real_distribution<double> eigd(1.05 * ca, 2.95 * ca);
    const Mat3 r = test::random_rotation(rng);
    const Mat3 cbar =
        r * Eigen::DiagonalMatrix<double, 3>(eigd(rng), eigd(rng), eigd(rng)) * r.transpose();
    attach_capacitance(config, synth_cap(cbar, ca));

    const auto rep = precheck_invertibility(config, kMedium, std::sqrt(3.0));
    if (!rep.pass()) continue;
    ++accepted;
    const auto amps = solve_foldy(config, kMedium, kWave);
    double qsum = 0.0, usum = 0.0;
    for (int i = 0; i < m; ++i) {
      qsum += amps.q[i].squaredNorm();
      usum += evaluate_incident(kWave, kMedium, pts[i]).squaredNorm();
    }
    CHECK(qsum <= rep.lemma_rhs_factor * usum);
  }
}

TEST_CASE("far-field polarization: P radial, S tangential") {
  const double a = 1.0 / 128;
  const auto part = partition_domain(Box{}, a, constant_k(0.0));
  auto config = place_scatterers(part, a, 1.0 / 3.0, 9);
  attach_capacitance(config, synth_cap(8.0 * Mat3::Identity(), 2 * std::numbers::pi));
  const auto amps = solve_foldy(config, kMedium, kWave);
  const auto ff = foldy_farfield(amps, config, kMedium, kWave, cube26_directions());
  for (std::size_t d = 0; d < ff.directions.size(); ++d) {
    const Vec3 xh = ff.directions[d];
    const CVec3 cross = xh.cast<cplx>().cross(ff.p_part[d]);
    CHECK(cross.norm() <= 1e-10 * ff.p_part[d].norm() + 1e-300);
    CHECK(std::abs(xh.cast<cplx>().dot(ff.s_part[d])) <= 1e-10 * ff.s_part[d].norm() + 1e-300);
  }
}

TEST_CASE("single sphere far field matches the composed closed form") {
  const double a = 1.0 / 32;
  const double c = 7.0;
  const auto config = manual_config({Vec3(0.31, 0.57, 0.44)}, a, synth_cap(c * Mat3::Identity(), 2.2));
  const auto amps = solve_foldy(config, kMedium, kWave);
  const auto ff = foldy_farfield(amps, config, kMedium, kWave, cube26_directions());
  const cplx i1(0, 1);
  for (std::size_t d = 0; d < ff.directions.size(); ++d) {
    const Vec3 xh = ff.directions[d];
    const CVec3 ui = evaluate_incident(kWave, kMedium, config.positions[0]);
    const cplx phase = std::exp(-i1 * kMedium.kappa_p * xh.dot(config.positions[0]));
    const CVec3 want = -(c * a / (4 * std::numbers::pi * kMedium.c_p * kMedium.c_p)) * phase *
                       xh.cast<cplx>() * (xh.cast<cplx>().dot(ui));
    CHECK((ff.p_part[d] - want).norm() < 1e-13 * (want.norm() + 1e-30));
  }
}

TEST_CASE("translation covariance of the far field") {
  const double a = 1.0 / 64;
  std::vector<Vec3> pts = {{0.2, 0.3, 0.4}, {0.6, 0.5, 0.4}, {0.3, 0.8, 0.6}, {0.7, 0.2, 0.7}};
  const auto cap = synth_cap(8.0 * Mat3::Identity(), 2 * std::numbers::pi);
  const Vec3 h(0.13, -0.07, 0.21);
  const auto dirs = cube26_directions();
  const cplx i1(0, 1);

  for (int mode = 0; mode < 2; ++mode) {
    const auto wave = mode == 0 ? make_plane_wave(Vec3(0, 0, 1), Vec3(1, 0, 0), 1.0, 0.0)
                                : make_plane_wave(Vec3(0, 0, 1), Vec3(1, 0, 0), 0.0, 1.0);
    const double kappa_inc = mode == 0 ? kMedium.kappa_p : kMedium.kappa_s;
    const auto base = manual_config(pts, a, cap);
    auto shifted_pts = pts;
    for (auto& p : shifted_pts) p += h;
    const auto shifted = manual_config(shifted_pts, a, cap);

    const auto ff0 = foldy_farfield(solve_foldy(base, kMedium, wave), base, kMedium, wave, dirs);
    const auto ff1 =
        foldy_farfield(solve_foldy(shifted, kMedium, wave), shifted, kMedium, wave, dirs);
    for (std::size_t d = 0; d < dirs.size(); ++d) {
      const cplx fp =
          std::exp(i1 * (kappa_inc * wave.theta - kMedium.kappa_p * dirs[d]).dot(h));
      const cplx fs =
          std::exp(i1 * (kappa_inc * wave.theta - kMedium.kappa_s * dirs[d]).dot(h));
      CHECK((ff1.p_part[d] - fp * ff0.p_part[d]).norm() <= 1e-10 * (ff0.p_part[d].norm() + 1e-30));
      CHECK((ff1.s_part[d] - fs * ff0.s_part[d]).norm() <= 1e-10 * (ff0.s_part[d].norm() + 1e-30));
    }
  }
}

TEST_CASE("max amplitude scales linearly in a over a sweep") {
  const auto cap = synth_cap(8.0 * Mat3::Identity(), 2 * std::numbers::pi);
  std::vector<double> as, qmax;
  for (int k = 5; k <= 9; ++k) {
    const double a = std::pow(2.0, -k);
    const auto part = partition_domain(Box{}, a, constant_k(0.0));
    auto config = place_scatterers(part, a, 1.0 / 3.0, 77);
    attach_capacitance(config, cap);
    const auto amps = solve_foldy(config, kMedium, kWave);
    double mx = 0.0;
    for (const auto& q : amps.q) mx = std::max(mx, q.norm());
    as.push_back(a);
    qmax.push_back(mx);
  }
  const double slope = test::loglog_slope(as, qmax);
  CHECK(slope >= 0.9);
  CHECK(slope <= 1.1);
}

TEST_CASE("far-field csv has the pinned header and 17-digit payload") {
  const auto cap = synth_cap(5.0 * Mat3::Identity(), 2.0);
  const auto config = manual_config({Vec3(0.5, 0.5, 0.5)}, 0.01, cap);
  const auto amps = solve_foldy(config, kMedium, kWave);
  const auto ff = foldy_farfield(amps, config, kMedium, kWave, {Vec3(0, 0, 1)});
  const auto path = std::filesystem::temp_directory_path() / "elastscat_ff.csv";
  save_farfield_csv(ff, path, "meta=1");
  std::ifstream in(path);
  std::string header, row, comment;
  std::getline(in, header);
  std::getline(in, row);
  std::getline(in, comment);
  CHECK(header ==
        "xhat_x,xhat_y,xhat_z,Re(Up1),Re(Up2),Re(Up3),Im(Up1),Im(Up2),Im(Up3),Re(Us1),Re(Us2),"
        "Re(Us3),Im(Us1),Im(Us2),Im(Us3)");
  CHECK(comment == "# meta=1");
  // reparse the Re(Up3) column bit-exactly
  std::stringstream ss(row);
  std::string tok;
  for (int i = 0; i <= 5; ++i) std::getline(ss, tok, ',');
  CHECK(std::stod(tok) == ff.p_part[0].z().real());
  std::filesystem::remove(path);
}

TEST_CASE("iteration budget exhaustion carries the residual history") {
  const double a = 1.0 / 512;
  const auto part = partition_domain(Box{}, a, constant_k(0.0));
  auto config = place_scatterers(part, a, 1.0 / 3.0, 5);
  attach_capacitance(config, synth_cap(8.0 * Mat3::Identity(), 2 * std::numbers::pi));
  FoldyOptions opt;
  opt.path = FoldySolverPath::iterative;
  opt.max_iterations = 2;  // far below what the system needs
  try {
    solve_foldy(config, kMedium, kWave, opt);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(e.residual_history.size() >= 1);
    CHECK(e.residual_history.back() > 1e-10);
  }
}

TEST_CASE("singular capacitance is rejected") {
  CapacitanceMatrix broken;
  broken.c_elastic = Mat3::Zero();
  broken.c_acoustic = 1.0;
  const auto config = manual_config({Vec3(0.5, 0.5, 0.5)}, 0.01, broken);
  CHECK_THROWS_WITH_AS(solve_foldy(config, kMedium, kWave), doctest::Contains("singular"),
                       NumericalError);
}

TEST_CASE("non-unit directions and mismatched amplitudes are rejected") {
  const auto cap = synth_cap(5.0 * Mat3::Identity(), 2.0);
  const auto config = manual_config({Vec3(0.5, 0.5, 0.5)}, 0.01, cap);
  const auto amps = solve_foldy(config, kMedium, kWave);
  CHECK_THROWS_AS(foldy_farfield(amps, config, kMedium, kWave, {Vec3(0, 0, 2)}),
                  std::invalid_argument);
  ScatteringAmplitudes wrong = amps;
  wrong.q.push_back(CVec3::Zero());
  CHECK_THROWS_AS(foldy_farfield(wrong, config, kMedium, kWave, {Vec3(0, 0, 1)}),
                  std::invalid_argument);
}
