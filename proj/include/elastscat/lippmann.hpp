#pragma once

#include "elastscat/distribution.hpp"
#include "elastscat/foldy.hpp"
#include "elastscat/medium.hpp"
#include "elastscat/types.hpp"

namespace elastscat {

/// Uniform cubic voxel grid over a box domain.
struct VoxelGrid {
  Box domain;
  int n = 8;  // voxels per axis

  double spacing() const { return (domain.hi.x() - domain.lo.x()) / n; }
  int total() const { return n * n * n; }
  int flat(int ix, int iy, int iz) const { return ix + n * (iy + n * iz); }
  Vec3 center(int ix, int iy, int iz) const {
    const double h = spacing();
    return domain.lo + h * Vec3(ix + 0.5, iy + 0.5, iz + 0.5);
  }
  Vec3 center(int idx) const { return center(idx % n, (idx / n) % n, idx / (n * n)); }
};

VoxelGrid make_grid(int n, const Box& domain = {});

/// Per-voxel 3x3 potential q(y) and background density rho(y); q = 0 and
/// rho = 1 outside the domain by construction.
struct PotentialField {
  VoxelGrid grid;
  std::vector<Mat3> q;
  std::vector<double> rho;

  bool is_zero() const;
};

PotentialField uniform_potential(const VoxelGrid& grid, const Mat3& q0);
/// Limit potential (K(y)+1) C0 sampled at voxel centers.
PotentialField limit_potential(const VoxelGrid& grid, const KField& k, const Mat3& c0);
/// Staircase potential K_a C_a: (K(z_m)+1) Cbar on voxels whose center lies
/// in cell m, zero on uncovered slivers.
PotentialField staircase_potential(const VoxelGrid& grid, const CubePartition& partition,
                                   const Mat3& cbar);
/// Folds a variable background density into the potential:
/// q += omega^2 (1 - rho(y)) I.
void add_density_contrast(PotentialField& p, double omega,
                          const std::function<double(const Vec3&)>& rho);

/// Pointwise equivalent density rho I - (K+1) C0 / omega^2; omega = 0 rejected.
Mat3 effective_density(double rho, double k_plus_1, const Mat3& c0, double omega);
std::vector<Mat3> effective_density(const VoxelGrid& grid,
                                    const std::function<double(const Vec3&)>& rho,
                                    const std::function<double(const Vec3&)>& k_plus_1,
                                    const Mat3& c0, double omega);

/// Total field sampled at voxel centers.
struct VolumeField {
  VoxelGrid grid;
  std::vector<CVec3> u;
  double residual_norm = 0.0;
  int iterations = 0;
  std::string solver;
  std::vector<double> residual_history;
};

enum class LsSolverPath { matrix_free, dense };

struct LsOptions {
  double tol = 1e-8;
  int max_iterations = 0;          // 0 -> ceil(10 sqrt(3 n^3))
  LsSolverPath path = LsSolverPath::matrix_free;
  uint64_t random_start_seed = 0;  // nonzero: random initial iterate
};

/// Discrete solution of  Y(z) + int G(z,y) q(y) Y(y) dy = -U^i(z)  by
/// collocation at voxel centers: midpoint rule off the diagonal, the self
/// voxel integrated as the analytic Kelvin integral over the equal-volume
/// ball plus the midpoint value of the smooth dynamic remainder. The dense
/// path (n <= 12) is the test oracle; both must meet the residual contract.
VolumeField solve_lippmann_schwinger(const ElasticMedium& medium, const PotentialField& potential,
                                     const IncidentPlaneWave& wave, const LsOptions& opt = {},
                                     Exec exec = Exec::parallel);

/// One application of the discrete operator (I + G q) to a stacked field;
/// building block for Born-series checks.
CVecX apply_ls_operator(const ElasticMedium& medium, const PotentialField& potential,
                        const CVecX& x, Exec exec = Exec::parallel);

/// Far field of the volume potential with the same midpoint quadrature:
///   Up(xh) = (xh (x) xh)/(4 pi cp^2) sum_j exp(-i kp xh.z_j) q_j Y_j h^3
/// and the orthogonal-projector S analog at kappa_s.
FarFieldPattern ls_farfield(const ElasticMedium& medium, const PotentialField& potential,
                            const VolumeField& field, const std::vector<Vec3>& directions,
                            Exec exec = Exec::parallel);

/// CSV "ix,iy,iz,Re(u1),Re(u2),Re(u3),Im(u1),Im(u2),Im(u3)".
void save_volume_csv(const VolumeField& f, const std::filesystem::path& path,
                     const std::string& meta = "");

}  // namespace elastscat
