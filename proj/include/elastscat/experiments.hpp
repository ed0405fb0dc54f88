#pragma once

#include "elastscat/foldy.hpp"
#include "elastscat/lippmann.hpp"

namespace elastscat {

/// Theorem-style sweep: cluster far fields against the equivalent-medium far
/// field across a decreasing list of body sizes.
struct SweepSpec {
  std::vector<double> a_values;  // strictly decreasing, at least 4 entries
  double t = 1.0 / 3.0;          // admitted range [1/3, 7/12); rate fits refuse t >= 1/2
  KField k = constant_k(0.0);
  double gamma = 1.0;  // Holder exponent of K (experiment metadata)
  ElasticMedium medium = make_medium(1.0, 1.0, 1.0);
  IncidentPlaneWave wave = make_plane_wave(Vec3(0, 0, 1), Vec3(1, 0, 0), 1.0, 0.5);
  std::vector<Vec3> directions = cube26_directions();
  uint64_t seed = 1;
  int grid_n = 20;
  double d_min = 0.5;
  double jitter = 0.0;
  bool strict_precheck = false;  // abort when the sufficient conditions fail

  double predicted_exponent() const { return std::min({gamma, 1.0 / 3.0, 1.5 - 3.0 * t}); }
};

struct SweepPoint {
  double a = 0.0;
  int bodies = 0;
  double d_actual = 0.0;
  double discrepancy = 0.0;  // max over directions of the P/S far-field gap
  double runtime_s = 0.0;
  bool precheck_pass = false;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  double slope = 0.0;
  double intercept = 0.0;
  double fit_residual = 0.0;
  double predicted_exponent = 0.0;
  int monotone_violations = 0;
  int violation_index = -1;  // first preasymptotic violation, -1 if none
  bool monotone_ok = false;  // non-increasing with at most one violation
  bool t_range_warning = false;

  bool aborted = false;
  std::string abort_stage;
  std::string abort_message;

  std::vector<FarFieldPattern> foldy_patterns;  // one per a
  FarFieldPattern ls_pattern;
  double ls_runtime_s = 0.0;
};

/// Runs the sweep with the given per-unit-diameter capacitance of the common
/// reference shape. Stage failures abort with the stage named, keeping the
/// points finished so far.
SweepResult convergence_sweep(const SweepSpec& spec, const CapacitanceMatrix& cap,
                              Exec exec = Exec::parallel);

// scenarios

struct NegativeDensityParams {
  double rho = 1.0;
  double k_plus_1 = 2.0;
  Mat3 c0 = Mat3::Identity();
  ElasticMedium medium = make_medium(1.0, 1.0, 1.0);
  IncidentPlaneWave wave = make_plane_wave(Vec3(0, 0, 1), Vec3(1, 0, 0), 1.0, 0.5);
  int grid_n = 12;
};

struct NegativeDensityReport {
  Mat3 effective;
  Vec3 eigenvalues;
  double farfield_max = 0.0;
  FarFieldPattern pattern;
};

/// Requires (K+1) c exceeding omega^2 rho (rejected otherwise, naming the
/// inequality); asserts a negative-definite equivalent density and emits the
/// equivalent-medium far field.
NegativeDensityReport run_negative_density(const NegativeDensityParams& p,
                                           Exec exec = Exec::parallel);

struct CloakParams {
  KField k = constant_k(0.0);
  double c_scalar = 1.5;  // shared scalar capacitance entering the contrast
  ElasticMedium medium = make_medium(1.0, 1.0, 4.0);
  IncidentPlaneWave wave = make_plane_wave(Vec3(0, 0, 1), Vec3(1, 0, 0), 1.0, 0.5);
  int grid_n = 12;
  std::vector<double> a_values = {1.0 / 32.0, 1.0 / 64.0};  // discrete-trend sizes
};

struct CloakReport {
  double rho_alone_max = 0.0;   // far field of the density contrast alone
  double nulled_max = 0.0;      // exact contrast null (quadrature floor)
  std::vector<double> discrete_max;    // staircase perforation, per a
  std::vector<double> discrete_ratio;  // discrete_max / rho_alone_max
};

/// rho(y) = 1 + (K(y)+1) c / omega^2 inside the domain; compares the density
/// contrast alone against the exact null and against staircase perforations
/// at the requested sizes.
CloakReport run_cloak(const CloakParams& p, Exec exec = Exec::parallel);

struct VanishingParams {
  double s = 0.8;  // M = O(a^-s), s < 1
  double t = 1.0 / 3.0;
  double a_start = 1.0 / 32.0;
  int halvings = 4;
  CapacitanceMatrix cap;
  ElasticMedium medium = make_medium(1.0, 1.0, 1.0);
  IncidentPlaneWave wave = make_plane_wave(Vec3(0, 0, 1), Vec3(1, 0, 0), 1.0, 0.5);
  uint64_t seed = 1;
};

struct VanishingReport {
  std::vector<double> a_values;
  std::vector<int> bodies;
  std::vector<double> farfield_max;
  bool strictly_decreasing = false;
};

/// Thinned sweep M = O(a^-s): the cluster far field must fade as a -> 0.
VanishingReport run_vanishing(const VanishingParams& p, Exec exec = Exec::parallel);

/// Least-squares fit of log(y) on log(x); returns {slope, intercept, rms}.
std::array<double, 3> fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

/// Max over directions of the componentwise P/S far-field gap.
double farfield_discrepancy(const FarFieldPattern& a, const FarFieldPattern& b);
double farfield_max_norm(const FarFieldPattern& a);

}  // namespace elastscat
