#pragma once

#include "elastscat/medium.hpp"
#include "elastscat/types.hpp"

namespace elastscat {

/// Fundamental tensor of the time-harmonic Navier operator and its gradient,
/// evaluated through the closed form built from the two Helmholtz kernels
/// exp(i k r)/(4 pi r). The tensor has the isotropic form
///   G(x,y) = A(r) I + B(r) u (x) u,        u = x - y, r = |u|,
/// and the static (omega = 0) limit is the Kelvin tensor, handled by a
/// dedicated branch so no 1/omega^2 cancellation occurs.
///
/// Accuracy note: for omega > 0 the A, B combinations lose roughly
/// (eps / (kappa r)^2) relative accuracy as kappa*r -> 0; callers working at
/// sub-wavelength separations in a dynamic medium should expect that loss.
class KupradzeEvaluator {
 public:
  explicit KupradzeEvaluator(const ElasticMedium& m);

  /// G(x,y) for u = x - y, |u| > 0. No cutoff checks; see kupradze_tensor.
  CMat3 operator()(const Vec3& u) const;

  /// grad_y G(x,y): component (i,j,k) = d G_ij / d y_k.
  std::array<CMat3, 3> gradient(const Vec3& u) const;

  bool is_static() const { return static_branch_; }

 private:
  struct Radial {
    cplx a, b;    // G = a I + b u(x)u
    cplx ap, bp;  // d/dr of a, b
  };
  Radial radial(double r, bool with_derivatives) const;

  bool static_branch_;
  double mu_, omega2_, kp_, ks_;
  double kelvin_a_, kelvin_b_;  // (1/8pi)(1/mu +- 1/(lambda+2mu))
};

inline constexpr double kDefaultCoincidenceCutoff = 1e-10;

/// Full tensor with coincidence checks: throws std::invalid_argument when
/// |x - y| <= cutoff (singularity diagnostic). Pure function, thread safe.
CMat3 kupradze_tensor(const ElasticMedium& m, const Vec3& x, const Vec3& y,
                      double cutoff = kDefaultCoincidenceCutoff);

/// grad_y of the tensor, same checks as kupradze_tensor.
std::array<CMat3, 3> kupradze_gradient(const ElasticMedium& m, const Vec3& x, const Vec3& y,
                                       double cutoff = kDefaultCoincidenceCutoff);

/// Static (Kelvin) tensor of the elastostatic operator; independent of omega.
Mat3 kelvin_tensor(double lambda, double mu, const Vec3& x, const Vec3& y,
                   double cutoff = kDefaultCoincidenceCutoff);

}  // namespace elastscat
