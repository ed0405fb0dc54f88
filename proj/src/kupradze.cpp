#include "elastscat/kupradze.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace elastscat {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;
constexpr double kEightPi = 8.0 * std::numbers::pi;

struct Helmholtz {
  cplx phi, dphi, d2phi, d3phi;
};

// exp(i k r)/(4 pi r) and its first three radial derivatives.
Helmholtz helmholtz_kernel(double kappa, double r) {
  const cplx i(0.0, 1.0);
  const cplx e = std::exp(i * kappa * r) / (kFourPi * r);
  const double inv_r = 1.0 / r;
  const cplx ik = i * kappa;
  Helmholtz h;
  h.phi = e;
  h.dphi = e * (ik - inv_r);
  h.d2phi = e * (-kappa * kappa - 2.0 * ik * inv_r + 2.0 * inv_r * inv_r);
  h.d3phi = e * (-i * kappa * kappa * kappa + 3.0 * kappa * kappa * inv_r +
                 6.0 * ik * inv_r * inv_r - 6.0 * inv_r * inv_r * inv_r);
  return h;
}

}  // namespace

KupradzeEvaluator::KupradzeEvaluator(const ElasticMedium& m)
    : static_branch_(m.omega == 0.0),
      mu_(m.mu),
      omega2_(m.omega * m.omega),
      kp_(m.kappa_p),
      ks_(m.kappa_s) {
  const double lp2m = m.lambda + 2.0 * m.mu;
  kelvin_a_ = (1.0 / m.mu + 1.0 / lp2m) / kEightPi;
  kelvin_b_ = (1.0 / m.mu - 1.0 / lp2m) / kEightPi;
}

KupradzeEvaluator::Radial KupradzeEvaluator::radial(double r, bool with_derivatives) const {
  Radial out;
  if (static_branch_) {
    const double inv_r = 1.0 / r;
    out.a = kelvin_a_ * inv_r;
    out.b = kelvin_b_ * inv_r * inv_r * inv_r;
    if (with_derivatives) {
      out.ap = -kelvin_a_ * inv_r * inv_r;
      out.bp = -3.0 * kelvin_b_ * inv_r * inv_r * inv_r * inv_r;
    }
    return out;
  }
  const Helmholtz s = helmholtz_kernel(ks_, r);
  const Helmholtz p = helmholtz_kernel(kp_, r);
  const double inv_r = 1.0 / r;
  const double inv_w2 = 1.0 / omega2_;
  const cplx d1 = s.dphi - p.dphi;
  const cplx d2 = s.d2phi - p.d2phi;
  const cplx d3 = s.d3phi - p.d3phi;
  out.a = s.phi / mu_ + inv_w2 * d1 * inv_r;
  out.b = inv_w2 * (d2 - d1 * inv_r) * inv_r * inv_r;
  if (with_derivatives) {
    out.ap = s.dphi / mu_ + inv_w2 * (d2 * inv_r - d1 * inv_r * inv_r);
    out.bp = inv_w2 * (d3 - 3.0 * d2 * inv_r + 3.0 * d1 * inv_r * inv_r) * inv_r * inv_r;
  }
  return out;
}

CMat3 KupradzeEvaluator::operator()(const Vec3& u) const {
  const double r = u.norm();
  const Radial c = radial(r, false);
  CMat3 g = (c.b * (u * u.transpose()).cast<cplx>());
  g += c.a * CMat3::Identity();
  return g;
}

std::array<CMat3, 3> KupradzeEvaluator::gradient(const Vec3& u) const {
  const double r = u.norm();
  const Radial c = radial(r, true);
  const Vec3 ur = u / r;
  std::array<CMat3, 3> g;
  for (int k = 0; k < 3; ++k) {
    CMat3 gk = -(c.ap * ur[k]) * CMat3::Identity();
    gk -= (c.bp * ur[k]) * (u * u.transpose()).cast<cplx>();
    for (int j = 0; j < 3; ++j) {
      gk(k, j) -= c.b * u[j];  // d(u_i u_j)/dy_k, delta_{ik} part
      gk(j, k) -= c.b * u[j];  // delta_{jk} part
    }
    g[k] = gk;
  }
  return g;
}

namespace {

void check_separation(const Vec3& x, const Vec3& y, double cutoff) {
  const double r = (x - y).norm();
  if (r <= cutoff) {
    std::ostringstream os;
    os << "singular kernel evaluation: |x - y| = " << r << " <= cutoff " << cutoff;
    throw std::invalid_argument(os.str());
  }
}

}  // namespace

CMat3 kupradze_tensor(const ElasticMedium& m, const Vec3& x, const Vec3& y, double cutoff) {
  check_separation(x, y, cutoff);
  return KupradzeEvaluator(m)(x - y);
}

std::array<CMat3, 3> kupradze_gradient(const ElasticMedium& m, const Vec3& x, const Vec3& y,
                                       double cutoff) {
  check_separation(x, y, cutoff);
  return KupradzeEvaluator(m).gradient(x - y);
}

Mat3 kelvin_tensor(double lambda, double mu, const Vec3& x, const Vec3& y, double cutoff) {
  check_separation(x, y, cutoff);
  const Vec3 u = x - y;
  const double r = u.norm();
  const double lp2m = lambda + 2.0 * mu;
  const double a = (1.0 / mu + 1.0 / lp2m) / (kEightPi * r);
  const double b = (1.0 / mu - 1.0 / lp2m) / (kEightPi * r * r * r);
  return a * Mat3::Identity() + b * (u * u.transpose());
}

}  // namespace elastscat
