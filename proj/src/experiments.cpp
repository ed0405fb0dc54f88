#include "elastscat/experiments.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace elastscat {

namespace {

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::array<double, 3> fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  const int n = static_cast<int>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / n;
  double rss = 0;
  for (int i = 0; i < n; ++i) {
    const double r = std::log(y[i]) - slope * std::log(x[i]) - intercept;
    rss += r * r;
  }
  return {slope, intercept, std::sqrt(rss / n)};
}

double farfield_discrepancy(const FarFieldPattern& a, const FarFieldPattern& b) {
  if (a.directions.size() != b.directions.size())
    throw std::invalid_argument("farfield_discrepancy: direction sets differ");
  double gap = 0.0;
  for (std::size_t d = 0; d < a.directions.size(); ++d)
    gap = std::max({gap, (a.p_part[d] - b.p_part[d]).norm(), (a.s_part[d] - b.s_part[d]).norm()});
  return gap;
}

double farfield_max_norm(const FarFieldPattern& a) {
  double m = 0.0;
  for (std::size_t d = 0; d < a.directions.size(); ++d)
    m = std::max({m, a.p_part[d].norm(), a.s_part[d].norm()});
  return m;
}

SweepResult convergence_sweep(const SweepSpec& spec, const CapacitanceMatrix& cap, Exec exec) {
  if (spec.a_values.size() < 4)
    throw std::invalid_argument("convergence_sweep: the rate fit needs at least 4 sizes");
  for (std::size_t i = 1; i < spec.a_values.size(); ++i)
    if (!(spec.a_values[i] < spec.a_values[i - 1]))
      throw std::invalid_argument("convergence_sweep: a values must decrease strictly");
  if (spec.t < 1.0 / 3.0 - 1e-12 || spec.t >= 7.0 / 12.0)
    throw std::invalid_argument("convergence_sweep: t must lie in [1/3, 7/12)");
  if (spec.t >= 0.5)
    throw std::invalid_argument(
        "convergence_sweep: rate fitting refuses t >= 1/2 (vacuous exponent)");

  SweepResult res;
  res.predicted_exponent = spec.predicted_exponent();
  res.t_range_warning = spec.t > 1.0 / 3.0 + 1e-12;

  // equivalent medium once: the limit potential (K+1) C0 with C0 = cap
  {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const auto grid = make_grid(spec.grid_n);
      const auto potential = limit_potential(grid, spec.k, cap.c_elastic);
      const auto field = solve_lippmann_schwinger(spec.medium, potential, spec.wave, {}, exec);
      res.ls_pattern = ls_farfield(spec.medium, potential, field, spec.directions, exec);
    } catch (const std::exception& e) {
      res.aborted = true;
      res.abort_stage = "lippmann-schwinger";
      res.abort_message = e.what();
      return res;
    }
    res.ls_runtime_s = seconds_since(t0);
  }

  for (const double a : spec.a_values) {
    const auto t0 = std::chrono::steady_clock::now();
    SweepPoint pt;
    pt.a = a;
    std::string stage = "partition";
    try {
      const auto part = partition_domain(Box{}, a, spec.k);
      stage = "placement";
      PlacementOptions popt;
      popt.d_min = spec.d_min;
      popt.jitter = spec.jitter;
      auto config = place_scatterers(part, a, spec.t, spec.seed, popt);
      attach_capacitance(config, cap);
      pt.bodies = config.body_count();
      pt.d_actual = config.d_actual;

      stage = "precheck";
      const auto rep = precheck_invertibility(config, spec.medium, std::sqrt(3.0));
      pt.precheck_pass = rep.pass();
      if (spec.strict_precheck && !rep.pass())
        throw NumericalError("sufficient conditions failed and strict_precheck is set");

      stage = "foldy";
      FoldyOptions fopt;
      fopt.override_precheck = !spec.strict_precheck;
      const auto amps = solve_foldy(config, spec.medium, spec.wave, fopt, exec);

      stage = "farfield";
      auto ff = foldy_farfield(amps, config, spec.medium, spec.wave, spec.directions, exec);
      pt.discrepancy = farfield_discrepancy(ff, res.ls_pattern);
      pt.runtime_s = seconds_since(t0);
      res.points.push_back(pt);
      res.foldy_patterns.push_back(std::move(ff));
    } catch (const std::exception& e) {
      res.aborted = true;
      res.abort_stage = stage;
      std::ostringstream os;
      os << "a = " << a << ": " << e.what();
      res.abort_message = os.str();
      return res;
    }
  }

  std::vector<double> as, es;
  for (const auto& p : res.points) {
    as.push_back(p.a);
    es.push_back(p.discrepancy);
  }
  const auto fit = fit_loglog(as, es);
  res.slope = fit[0];
  res.intercept = fit[1];
  res.fit_residual = fit[2];

  res.monotone_violations = 0;
  for (std::size_t i = 1; i < es.size(); ++i) {
    if (es[i] > es[i - 1] * (1.0 + 1e-12)) {
      ++res.monotone_violations;
      if (res.violation_index < 0) res.violation_index = static_cast<int>(i);
    }
  }
  res.monotone_ok = res.monotone_violations <= 1;
  return res;
}

NegativeDensityReport run_negative_density(const NegativeDensityParams& p, Exec exec) {
  const double w2 = p.medium.omega * p.medium.omega;
  Eigen::SelfAdjointEigenSolver<Mat3> ceig(p.c0);
  if (!(p.k_plus_1 * ceig.eigenvalues()(0) > w2 * p.rho)) {
    std::ostringstream os;
    os << "negative_density requires (K+1) c > omega^2 rho; got (K+1) c_min = "
       << p.k_plus_1 * ceig.eigenvalues()(0) << " <= " << w2 * p.rho;
    throw std::invalid_argument(os.str());
  }

  NegativeDensityReport rep;
  rep.effective = effective_density(p.rho, p.k_plus_1, p.c0, p.medium.omega);
  Eigen::SelfAdjointEigenSolver<Mat3> eig(rep.effective);
  rep.eigenvalues = eig.eigenvalues();
  if (!(rep.eigenvalues(2) < 0.0))
    throw NumericalError("negative_density: effective density is not negative definite");

  const auto grid = make_grid(p.grid_n);
  const auto potential = uniform_potential(grid, p.k_plus_1 * p.c0);
  const auto field = solve_lippmann_schwinger(p.medium, potential, p.wave, {}, exec);
  rep.pattern = ls_farfield(p.medium, potential, field, cube26_directions(), exec);
  rep.farfield_max = farfield_max_norm(rep.pattern);
  return rep;
}

CloakReport run_cloak(const CloakParams& p, Exec exec) {
  const double w2 = p.medium.omega * p.medium.omega;
  const auto rho = [&](const Vec3& z) { return 1.0 + (p.k(z) + 1.0) * p.c_scalar / w2; };
  const auto grid = make_grid(p.grid_n);
  const auto dirs = cube26_directions();

  CloakReport rep;
  {
    auto rho_only = uniform_potential(grid, Mat3::Zero());
    add_density_contrast(rho_only, p.medium.omega, rho);
    const auto field = solve_lippmann_schwinger(p.medium, rho_only, p.wave, {}, exec);
    rep.rho_alone_max = farfield_max_norm(ls_farfield(p.medium, rho_only, field, dirs, exec));
  }
  {
    auto nulled = limit_potential(grid, p.k, p.c_scalar * Mat3::Identity());
    add_density_contrast(nulled, p.medium.omega, rho);
    const auto field = solve_lippmann_schwinger(p.medium, nulled, p.wave, {}, exec);
    rep.nulled_max = farfield_max_norm(ls_farfield(p.medium, nulled, field, dirs, exec));
  }
  for (const double a : p.a_values) {
    const auto part = partition_domain(Box{}, a, p.k);
    auto stair = staircase_potential(grid, part, p.c_scalar * Mat3::Identity());
    add_density_contrast(stair, p.medium.omega, rho);
    const auto field = solve_lippmann_schwinger(p.medium, stair, p.wave, {}, exec);
    const double m = farfield_max_norm(ls_farfield(p.medium, stair, field, dirs, exec));
    rep.discrete_max.push_back(m);
    rep.discrete_ratio.push_back(m / rep.rho_alone_max);
  }
  return rep;
}

VanishingReport run_vanishing(const VanishingParams& p, Exec exec) {
  if (!(p.s > 0.0 && p.s < 1.0))
    throw std::invalid_argument("vanishing scenario requires 0 < s < 1");
  VanishingReport rep;
  const auto dirs = cube26_directions();
  for (int i = 0; i <= p.halvings; ++i) {
    const double a = p.a_start / std::pow(2.0, i);
    const auto part = partition_domain(Box{}, a, constant_k(0.0));
    PlacementOptions popt;
    popt.count_scale = std::pow(a, 1.0 - p.s);
    popt.s_exponent = p.s;
    auto config = place_scatterers(part, a, p.t, p.seed, popt);
    attach_capacitance(config, p.cap);
    const auto amps = solve_foldy(config, p.medium, p.wave, {}, exec);
    const auto ff = foldy_farfield(amps, config, p.medium, p.wave, dirs, exec);
    rep.a_values.push_back(a);
    rep.bodies.push_back(config.body_count());
    rep.farfield_max.push_back(farfield_max_norm(ff));
  }
  rep.strictly_decreasing = true;
  for (std::size_t i = 1; i < rep.farfield_max.size(); ++i)
    rep.strictly_decreasing =
        rep.strictly_decreasing && rep.farfield_max[i] < rep.farfield_max[i - 1];
  return rep;
}

}  // namespace elastscat
