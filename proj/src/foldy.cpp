#include "elastscat/foldy.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "elastscat/dense_solve.hpp"
#include "elastscat/gmres.hpp"
#include "elastscat/kupradze.hpp"

namespace elastscat {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

std::vector<Mat3> inverse_scaled_capacitances(const ScattererConfiguration& config) {
  const int m = config.body_count();
  std::vector<Mat3> inv(m);
  for (int i = 0; i < m; ++i) {
    const Mat3 c = config.capacitance_of(i).c_elastic * config.a;
    inv[i] = c.ldlt().solve(Mat3::Identity());
    if (!inv[i].allFinite()) throw NumericalError("solve_foldy: singular capacitance matrix");
  }
  return inv;
}

CVecX stacked_incident(const ScattererConfiguration& config, const ElasticMedium& medium,
                       const IncidentPlaneWave& wave) {
  const int m = config.body_count();
  CVecX u(3 * m);
  for (int i = 0; i < m; ++i) u.segment<3>(3 * i) = evaluate_incident(wave, medium, config.positions[i]);
  return u;
}

// y = A x with A = diag(C_m^-1) + offdiag Kupradze blocks
void apply_foldy(const ScattererConfiguration& config, const KupradzeEvaluator& kernel,
                 const std::vector<Mat3>& cinv, const CVecX& x, CVecX& y, Exec exec) {
  const int m = config.body_count();
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (int i = 0; i < m; ++i) {
    CVec3 acc = cinv[i].cast<cplx>() * x.segment<3>(3 * i);
    for (int j = 0; j < m; ++j) {
      if (j == i) continue;
      acc += kernel(config.positions[i] - config.positions[j]) * x.segment<3>(3 * j);
    }
    y.segment<3>(3 * i) = acc;
  }
}

}  // namespace

PrecheckReport precheck_invertibility(const ScattererConfiguration& config,
                                      const ElasticMedium& medium, double diam_omega, double c0) {
  PrecheckReport rep;
  const int m = config.body_count();

  rep.distance_bound = c0;
  rep.distance_value =
      m > 1 ? std::sqrt(static_cast<double>(m - 1)) * config.a / config.d_actual : 0.0;
  rep.distance_ok = rep.distance_value <= rep.distance_bound;

  const auto gb = green_bound_constants(medium, diam_omega);
  rep.c_ring = gb.c_ring;
  rep.c_ring_reliable = gb.smallness_ok;

  double max_ca = 0.0;  // per-unit-diameter acoustic capacitances
  for (int i = 0; i < m; ++i) max_ca = std::max(max_ca, config.capacitance_of(i).c_acoustic);
  const double m_max = std::max(config.m_max_const, 1e-300);
  rep.capacitance_value = max_ca;  // = Ca_m a^-1, scale-free
  rep.capacitance_bound =
      std::numbers::pi / (std::sqrt(26.0 * m_max) * gb.c_ring * (medium.lambda + 2.0 * medium.mu));
  rep.capacitance_ok = rep.capacitance_value < rep.capacitance_bound;

  if (rep.capacitance_ok) {
    const double max_ca_scaled = max_ca * config.a;
    const double denom = 1.0 / (medium.lambda + 2.0 * medium.mu) -
                         std::sqrt(26.0 * m_max) * gb.c_ring * max_ca / std::numbers::pi;
    rep.lemma_rhs_factor = (max_ca_scaled * max_ca_scaled) / (denom * denom);
  }
  return rep;
}

ScatteringAmplitudes solve_foldy(const ScattererConfiguration& config,
                                 const ElasticMedium& medium, const IncidentPlaneWave& wave,
                                 const FoldyOptions& opt, Exec exec) {
  const int m = config.body_count();
  if (m < 1) throw std::invalid_argument("solve_foldy: empty configuration");
  if (m > 1 && !(config.d_actual > 0.0))
    throw std::invalid_argument("solve_foldy: coincident scatterer positions");

  if (!opt.override_precheck) {
    const auto rep = precheck_invertibility(config, medium, opt.diam_omega);
    if (!rep.pass()) {
      std::ostringstream os;
      os << "solve_foldy: solvability precheck failed ("
         << (rep.distance_ok ? "" : "distance condition; ")
         << (rep.capacitance_ok ? "" : "capacitance condition") << "); pass override to proceed";
      throw std::invalid_argument(os.str());
    }
  }

  const auto cinv = inverse_scaled_capacitances(config);
  const CVecX rhs = -stacked_incident(config, medium, wave);
  const double rhs_norm = rhs.norm();
  const KupradzeEvaluator kernel(medium);

  ScatteringAmplitudes out;
  const bool dense = opt.path == FoldySolverPath::dense ||
                     (opt.path == FoldySolverPath::automatic && 3 * m <= opt.dense_limit);
  CVecX q;
  if (dense) {
    CMatX a(3 * m, 3 * m);
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
    for (int i = 0; i < m; ++i) {
      a.block<3, 3>(3 * i, 3 * i) = cinv[i].cast<cplx>();
      for (int j = 0; j < m; ++j)
        if (j != i)
          a.block<3, 3>(3 * i, 3 * j) = kernel(config.positions[i] - config.positions[j]);
    }
    ComplexSymmetricFactor f(std::move(a));
    q = f.solve(rhs);
    out.solver = "dense";
  } else {
    auto apply = [&](const CVecX& x, CVecX& y) { apply_foldy(config, kernel, cinv, x, y, exec); };
    GmresOptions gopt;
    gopt.tol = opt.tol;
    gopt.max_iterations = opt.max_iterations;
    auto res = gmres(apply, rhs, gopt);
    q = std::move(res.x);
    out.iterations = res.iterations;
    out.residual_history = std::move(res.residual_history);
    out.solver = "gmres";
  }

  CVecX check(3 * m);
  apply_foldy(config, kernel, cinv, q, check, exec);
  out.residual_norm = (check - rhs).norm() / rhs_norm;
  if (!(out.residual_norm <= opt.tol))
    throw NumericalError("solve_foldy: residual contract violated", out.residual_history);

  out.q.resize(m);
  for (int i = 0; i < m; ++i) out.q[i] = q.segment<3>(3 * i);
  return out;
}

FarFieldPattern foldy_farfield(const ScatteringAmplitudes& amps,
                               const ScattererConfiguration& config, const ElasticMedium& medium,
                               const IncidentPlaneWave& wave,
                               const std::vector<Vec3>& directions, Exec exec) {
  if (static_cast<int>(amps.q.size()) != config.body_count())
    throw std::invalid_argument("foldy_farfield: amplitudes do not match the configuration");
  for (const auto& d : directions)
    if (std::abs(d.norm() - 1.0) > 1e-12)
      throw std::invalid_argument("foldy_farfield: directions must be unit vectors");

  FarFieldPattern p;
  p.directions = directions;
  p.medium = medium;
  p.wave = wave;
  const auto nd = static_cast<int>(directions.size());
  p.p_part.resize(nd);
  p.s_part.resize(nd);
  const cplx i1(0.0, 1.0);
  const int m = config.body_count();
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (int d = 0; d < nd; ++d) {
    const Vec3 xh = directions[d];
    CVec3 sum_p = CVec3::Zero(), sum_s = CVec3::Zero();
    for (int j = 0; j < m; ++j) {
      const double phase = xh.dot(config.positions[j]);
      sum_p += std::exp(-i1 * medium.kappa_p * phase) * amps.q[j];
      sum_s += std::exp(-i1 * medium.kappa_s * phase) * amps.q[j];
    }
    const CVec3 radial = xh.cast<cplx>() * (xh.cast<cplx>().dot(sum_p));
    p.p_part[d] = radial / (kFourPi * medium.c_p * medium.c_p);
    p.s_part[d] = (sum_s - xh.cast<cplx>() * (xh.cast<cplx>().dot(sum_s))) /
                  (kFourPi * medium.c_s * medium.c_s);
  }
  return p;
}

std::vector<Vec3> cube26_directions() {
  std::vector<Vec3> dirs;
  for (int x = -1; x <= 1; ++x)
    for (int y = -1; y <= 1; ++y)
      for (int z = -1; z <= 1; ++z) {
        if (x == 0 && y == 0 && z == 0) continue;
        dirs.push_back(Vec3(x, y, z).normalized());
      }
  return dirs;
}

void save_farfield_csv(const FarFieldPattern& p, const std::filesystem::path& path,
                       const std::string& meta) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open far-field csv for writing: " + path.string());
  std::fprintf(f,
               "xhat_x,xhat_y,xhat_z,Re(Up1),Re(Up2),Re(Up3),Im(Up1),Im(Up2),Im(Up3),"
               "Re(Us1),Re(Us2),Re(Us3),Im(Us1),Im(Us2),Im(Us3)\n");
  for (std::size_t i = 0; i < p.directions.size(); ++i) {
    const auto& d = p.directions[i];
    const auto& up = p.p_part[i];
    const auto& us = p.s_part[i];
    std::fprintf(f,
                 "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                 "%.17g,%.17g,%.17g\n",
                 d.x(), d.y(), d.z(), up.x().real(), up.y().real(), up.z().real(), up.x().imag(),
                 up.y().imag(), up.z().imag(), us.x().real(), us.y().real(), us.z().real(),
                 us.x().imag(), us.y().imag(), us.z().imag());
  }
  if (!meta.empty()) std::fprintf(f, "# %s\n", meta.c_str());
  std::fclose(f);
}

}  // namespace elastscat
