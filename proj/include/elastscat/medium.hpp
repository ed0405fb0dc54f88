#pragma once

#include "elastscat/types.hpp"

namespace elastscat {

/// Homogeneous isotropic elastic background. Immutable after construction;
/// construction rejects non-physical Lame pairs (mu > 0, 3*lambda + 2*mu > 0).
struct ElasticMedium {
  double lambda = 1.0;
  double mu = 1.0;
  double omega = 1.0;
  double rho_background = 1.0;

  // derived
  double c_p = 0.0;      // pressure wave speed sqrt(lambda + 2 mu)
  double c_s = 0.0;      // shear wave speed sqrt(mu)
  double kappa_p = 0.0;  // omega / c_p
  double kappa_s = 0.0;  // omega / c_s
};

ElasticMedium make_medium(double lambda, double mu, double omega, double rho_background = 1.0);

/// Plane incident wave: alpha * theta * exp(i kp theta.x) + beta * theta_perp * exp(i ks theta.x).
struct IncidentPlaneWave {
  Vec3 theta = Vec3::UnitZ();
  Vec3 theta_perp = Vec3::UnitX();
  cplx alpha{1.0, 0.0};
  cplx beta{0.0, 0.0};
};

IncidentPlaneWave make_plane_wave(const Vec3& theta, const Vec3& theta_perp, cplx alpha, cplx beta);

CVec3 evaluate_incident(const IncidentPlaneWave& w, const ElasticMedium& m, const Vec3& x);

/// Constants bounding the fundamental tensor and its gradient on a domain of
/// the given diameter: |G| <= c_ring/(4 pi r), |grad G| <= c_ring/(4 pi r^2).
/// Valid under the smallness condition max(kappa_s, kappa_p) < 2/diam; outside
/// it the constants are still evaluated but flagged unreliable.
struct GreenBoundConstants {
  double c7 = 0.0;
  double c8 = 0.0;
  double c9 = 0.0;
  double c10 = 0.0;
  int n_omega = 0;
  double c_ring = 0.0;
  bool smallness_ok = true;
  double offending_wavenumber = 0.0;  // set when smallness_ok is false
};

GreenBoundConstants green_bound_constants(const ElasticMedium& m, double diam_omega);

}  // namespace elastscat
