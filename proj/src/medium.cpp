#include "elastscat/medium.hpp"

#include <cmath>
#include <sstream>

namespace elastscat {

ElasticMedium make_medium(double lambda, double mu, double omega, double rho_background) {
  if (!(mu > 0.0)) {
    std::ostringstream os;
    os << "invalid Lame pair: mu = " << mu << " violates mu > 0";
    throw std::invalid_argument(os.str());
  }
  if (!(3.0 * lambda + 2.0 * mu > 0.0)) {
    std::ostringstream os;
    os << "invalid Lame pair: 3*lambda + 2*mu = " << 3.0 * lambda + 2.0 * mu
       << " violates 3*lambda + 2*mu > 0";
    throw std::invalid_argument(os.str());
  }
  if (!(omega >= 0.0)) throw std::invalid_argument("omega must be >= 0");

  ElasticMedium m;
  m.lambda = lambda;
  m.mu = mu;
  m.omega = omega;
  m.rho_background = rho_background;
  m.c_p = std::sqrt(lambda + 2.0 * mu);
  m.c_s = std::sqrt(mu);
  m.kappa_p = omega / m.c_p;
  m.kappa_s = omega / m.c_s;
  return m;
}

IncidentPlaneWave make_plane_wave(const Vec3& theta, const Vec3& theta_perp, cplx alpha,
                                  cplx beta) {
  constexpr double tol = 1e-12;
  if (std::abs(theta.norm() - 1.0) > tol) throw std::invalid_argument("theta must be a unit vector");
  if (std::abs(theta_perp.norm() - 1.0) > tol)
    throw std::invalid_argument("theta_perp must be a unit vector");
  if (std::abs(theta.dot(theta_perp)) > tol)
    throw std::invalid_argument("theta_perp must be orthogonal to theta");
  return IncidentPlaneWave{theta, theta_perp, alpha, beta};
}

CVec3 evaluate_incident(const IncidentPlaneWave& w, const ElasticMedium& m, const Vec3& x) {
  const cplx i(0.0, 1.0);
  const cplx phase_p = std::exp(i * m.kappa_p * w.theta.dot(x));
  const cplx phase_s = std::exp(i * m.kappa_s * w.theta.dot(x));
  return w.alpha * phase_p * w.theta.cast<cplx>() + w.beta * phase_s * w.theta_perp.cast<cplx>();
}

namespace {

// (1 - x^n)/(1 - x), continuous through x = 1.
double geometric_sum(double x, int n) {
  if (n <= 0) return 0.0;
  if (std::abs(1.0 - x) < 1e-12) return static_cast<double>(n);
  return (1.0 - std::pow(x, n)) / (1.0 - x);
}

}  // namespace

GreenBoundConstants green_bound_constants(const ElasticMedium& m, double diam_omega) {
  if (!(diam_omega > 0.0)) throw std::invalid_argument("diam_omega must be positive");

  GreenBoundConstants g;
  const double cs2 = m.c_s * m.c_s;
  const double cp2 = m.c_p * m.c_p;
  g.c7 = 1.0 / cs2 + 2.0 / cp2;
  g.c9 = 3.0 * (1.0 / cs2 + 1.0 / cp2);

  const double kmax = std::max(m.kappa_s, m.kappa_p);
  g.smallness_ok = kmax < 2.0 / diam_omega;
  if (!g.smallness_ok) g.offending_wavenumber = kmax;

  g.n_omega = static_cast<int>(std::floor(2.0 * diam_omega * kmax * std::exp(2.0)));
  const double tail = std::pow(2.0, 1.0 - g.n_omega);
  const double gs = geometric_sum(0.5 * m.kappa_s * diam_omega, g.n_omega);
  const double gp = geometric_sum(0.5 * m.kappa_p * diam_omega, g.n_omega);

  g.c8 = 2.0 * (m.kappa_s / cs2) * (gs + tail) + (m.kappa_p / cp2) * (gp + tail);
  const double w2 = m.omega * m.omega;
  g.c10 = 2.0 * (w2 / (cs2 * cs2)) * (1.0 / 8.0 + gs + tail) +
          (w2 / (cp2 * cp2)) * (1.0 / 4.0 + gp + tail);

  g.c_ring = std::max({g.c7, g.c8 * diam_omega, g.c8, g.c10 * diam_omega});
  return g;
}

}  // namespace elastscat
