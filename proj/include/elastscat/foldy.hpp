#pragma once

#include "elastscat/distribution.hpp"
#include "elastscat/medium.hpp"
#include "elastscat/types.hpp"

namespace elastscat {

/// Per-body scattering amplitudes Q_m solving
///   C_m^-1 Q_m + sum_{j != m} G(z_m, z_j) Q_j = -U^i(z_m),   C_m = Cbar_m a.
struct ScatteringAmplitudes {
  std::vector<CVec3> q;
  double residual_norm = 0.0;  // relative, against the stacked right-hand side
  std::string solver;          // "dense" or "gmres"
  int iterations = 0;
  std::vector<double> residual_history;
};

/// Sampled far-field pattern; p_part is parallel to the direction, s_part
/// orthogonal to it.
struct FarFieldPattern {
  std::vector<Vec3> directions;
  std::vector<CVec3> p_part;
  std::vector<CVec3> s_part;
  ElasticMedium medium;
  IncidentPlaneWave wave;
};

/// Sufficient-condition report for the solvability of the amplitude system:
///   (1) sqrt(M-1) a / d <= c0
///   (2) max_m Ca_m a^-1 < pi / (sqrt(26 M_max) c_ring (lambda + 2 mu))
/// Condition (2) uses M_max from the configuration and c_ring from
/// green_bound_constants; c_ring_reliable is false outside the smallness
/// regime. Both margins are (bound - value).
struct PrecheckReport {
  bool distance_ok = false;
  double distance_value = 0.0;
  double distance_bound = 0.0;
  bool capacitance_ok = false;
  double capacitance_value = 0.0;
  double capacitance_bound = 0.0;
  bool c_ring_reliable = true;
  double c_ring = 0.0;
  double lemma_rhs_factor = 0.0;  // sum ||Q||^2 <= factor * sum ||U^i(z_m)||^2 when (2) holds

  bool pass() const { return distance_ok && capacitance_ok; }
};

PrecheckReport precheck_invertibility(const ScattererConfiguration& config,
                                      const ElasticMedium& medium, double diam_omega,
                                      double c0 = 1.0);

enum class FoldySolverPath { automatic, dense, iterative };

struct FoldyOptions {
  double tol = 1e-10;
  int dense_limit = 6000;  // dense direct for 3M <= dense_limit
  FoldySolverPath path = FoldySolverPath::automatic;
  int max_iterations = 0;  // 0 -> ceil(10 sqrt(3M))
  bool override_precheck = true;
  double diam_omega = std::sqrt(3.0);  // for the precheck constants
};

/// Solves the amplitude system. Unless override_precheck is set, failing
/// sufficient conditions abort the solve. Relative residual <= tol on both
/// solver paths or NumericalError with the residual history.
ScatteringAmplitudes solve_foldy(const ScattererConfiguration& config,
                                 const ElasticMedium& medium, const IncidentPlaneWave& wave,
                                 const FoldyOptions& opt = {}, Exec exec = Exec::parallel);

/// Dominant-term far fields of the solved cluster:
///   Up(xh) = (xh (x) xh) / (4 pi cp^2) sum_m exp(-i kp xh.z_m) Q_m
///   Us(xh) = (I - xh (x) xh) / (4 pi cs^2) sum_m exp(-i ks xh.z_m) Q_m
/// The expansion's remainder orders are error budgets, never added here.
FarFieldPattern foldy_farfield(const ScatteringAmplitudes& amps,
                               const ScattererConfiguration& config, const ElasticMedium& medium,
                               const IncidentPlaneWave& wave,
                               const std::vector<Vec3>& directions, Exec exec = Exec::parallel);

/// The 26 face/edge/corner directions of the cube, normalized.
std::vector<Vec3> cube26_directions();

/// CSV export, 17 significant digits, header
/// xhat_x,xhat_y,xhat_z,Re(Up1)..Re(Up3),Im(Up1)..,Re(Us1)..,Im(Us3).
/// A nonempty meta string is appended as a trailing "# ..." comment line.
void save_farfield_csv(const FarFieldPattern& p, const std::filesystem::path& path,
                       const std::string& meta = "");

}  // namespace elastscat
