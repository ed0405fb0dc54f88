#include "elastscat/lippmann.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "elastscat/dense_solve.hpp"
#include "elastscat/gmres.hpp"
#include "elastscat/kupradze.hpp"

namespace elastscat {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

// Kernel values tabulated over voxel index offsets; entry 0 holds the self
// integral so the matvec is a pure table convolution against W_j = q_j Y_j.
class KernelTable {
 public:
  KernelTable(const ElasticMedium& medium, const VoxelGrid& grid, Exec exec) : n_(grid.n) {
    const double h = grid.spacing();
    const double h3 = h * h * h;
    const int w = 2 * n_ - 1;
    table_.resize(static_cast<std::size_t>(w) * w * w);
    const KupradzeEvaluator kernel(medium);
#pragma omp parallel for collapse(2) schedule(static) if (exec == Exec::parallel)
    for (int dz = -(n_ - 1); dz <= n_ - 1; ++dz)
      for (int dy = -(n_ - 1); dy <= n_ - 1; ++dy)
        for (int dx = -(n_ - 1); dx <= n_ - 1; ++dx) {
          if (dx == 0 && dy == 0 && dz == 0) continue;
          at(dx, dy, dz) = h3 * kernel(h * Vec3(dx, dy, dz));
        }

    // self voxel: analytic Kelvin integral over the equal-volume ball plus
    // the midpoint value of the smooth remainder (the r -> 0 limit of
    // G - G_kelvin, the l = 1 series term)
    const double radius = h * std::cbrt(3.0 / kFourPi);
    const double lp2m = medium.lambda + 2.0 * medium.mu;
    const double a0 = (1.0 / medium.mu + 1.0 / lp2m) / (8.0 * std::numbers::pi);
    const double b0 = (1.0 / medium.mu - 1.0 / lp2m) / (8.0 * std::numbers::pi);
    CMat3 self = (2.0 * std::numbers::pi * radius * radius * (a0 + b0 / 3.0)) * CMat3::Identity();
    if (medium.omega > 0.0) {
      const cplx i1(0.0, 1.0);
      const double ks = medium.kappa_s, kp = medium.kappa_p;
      self += h3 * (i1 * (2.0 * ks * ks * ks + kp * kp * kp) /
                    (12.0 * std::numbers::pi * medium.omega * medium.omega)) *
              CMat3::Identity();
    }
    at(0, 0, 0) = self;
  }

  const CMat3& at(int dx, int dy, int dz) const {
    return table_[idx(dx, dy, dz)];
  }

 private:
  CMat3& at(int dx, int dy, int dz) { return table_[idx(dx, dy, dz)]; }
  std::size_t idx(int dx, int dy, int dz) const {
    const int w = 2 * n_ - 1;
    return static_cast<std::size_t>(dx + n_ - 1) +
           static_cast<std::size_t>(w) *
               (static_cast<std::size_t>(dy + n_ - 1) + static_cast<std::size_t>(w) * (dz + n_ - 1));
  }
  int n_;
  std::vector<CMat3> table_;
};

// y = (I + G q) x
void apply_ls(const VoxelGrid& grid, const KernelTable& table, const std::vector<Mat3>& q,
              const CVecX& x, CVecX& y, Exec exec) {
  const int n = grid.n;
  const int total = grid.total();
  std::vector<CVec3> w(total);
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (int j = 0; j < total; ++j) w[j] = q[j].cast<cplx>() * x.segment<3>(3 * j);

#pragma omp parallel for collapse(2) schedule(static) if (exec == Exec::parallel)
  for (int iz = 0; iz < n; ++iz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        const int i = grid.flat(ix, iy, iz);
        CVec3 acc = x.segment<3>(3 * i);
        for (int jz = 0; jz < n; ++jz)
          for (int jy = 0; jy < n; ++jy) {
            const CMat3* trow = &table.at(ix - 0, iy - jy, iz - jz);
            const CVec3* wrow = &w[grid.flat(0, jy, jz)];
            for (int jx = 0; jx < n; ++jx) acc += trow[-jx] * wrow[jx];
          }
        y.segment<3>(3 * i) = acc;
      }
}

CVecX stacked_incident(const VoxelGrid& grid, const ElasticMedium& medium,
                       const IncidentPlaneWave& wave) {
  CVecX u(3 * grid.total());
  for (int i = 0; i < grid.total(); ++i)
    u.segment<3>(3 * i) = evaluate_incident(wave, medium, grid.center(i));
  return u;
}

}  // namespace

VoxelGrid make_grid(int n, const Box& domain) {
  if (n < 4) throw std::invalid_argument("grid resolution must be at least 4");
  const Vec3 ext = domain.hi - domain.lo;
  if (std::abs(ext.x() - ext.y()) > 1e-12 || std::abs(ext.x() - ext.z()) > 1e-12)
    throw std::invalid_argument("voxel grid requires a cubic domain");
  return VoxelGrid{domain, n};
}

bool PotentialField::is_zero() const {
  for (const auto& m : q)
    if (m.cwiseAbs().maxCoeff() != 0.0) return false;
  return true;
}

PotentialField uniform_potential(const VoxelGrid& grid, const Mat3& q0) {
  PotentialField p;
  p.grid = grid;
  p.q.assign(grid.total(), q0);
  p.rho.assign(grid.total(), 1.0);
  return p;
}

PotentialField limit_potential(const VoxelGrid& grid, const KField& k, const Mat3& c0) {
  PotentialField p;
  p.grid = grid;
  p.q.resize(grid.total());
  p.rho.assign(grid.total(), 1.0);
  for (int i = 0; i < grid.total(); ++i) p.q[i] = (k(grid.center(i)) + 1.0) * c0;
  return p;
}

PotentialField staircase_potential(const VoxelGrid& grid, const CubePartition& partition,
                                   const Mat3& cbar) {
  PotentialField p;
  p.grid = grid;
  p.q.assign(grid.total(), Mat3::Zero());
  p.rho.assign(grid.total(), 1.0);
  for (int i = 0; i < grid.total(); ++i) {
    const Vec3 z = grid.center(i);
    for (const auto& cell : partition.cells) {
      const Vec3 d = (z - cell.center).cwiseAbs() - cell.edges / 2;
      if (d.maxCoeff() <= 0.0) {
        p.q[i] = (partition.k(cell.center) + 1.0) * cbar;
        break;
      }
    }
  }
  return p;
}

void add_density_contrast(PotentialField& p, double omega,
                          const std::function<double(const Vec3&)>& rho) {
  const double w2 = omega * omega;
  for (int i = 0; i < p.grid.total(); ++i) {
    const double r = rho(p.grid.center(i));
    p.rho[i] = r;
    p.q[i] += w2 * (1.0 - r) * Mat3::Identity();
  }
}

Mat3 effective_density(double rho, double k_plus_1, const Mat3& c0, double omega) {
  if (!(omega > 0.0)) throw std::invalid_argument("effective_density: omega must be positive");
  return rho * Mat3::Identity() - k_plus_1 * c0 / (omega * omega);
}

std::vector<Mat3> effective_density(const VoxelGrid& grid,
                                    const std::function<double(const Vec3&)>& rho,
                                    const std::function<double(const Vec3&)>& k_plus_1,
                                    const Mat3& c0, double omega) {
  if (!(omega > 0.0)) throw std::invalid_argument("effective_density: omega must be positive");
  std::vector<Mat3> out(grid.total());
  for (int i = 0; i < grid.total(); ++i) {
    const Vec3 z = grid.center(i);
    out[i] = effective_density(rho(z), k_plus_1(z), c0, omega);
  }
  return out;
}

VolumeField solve_lippmann_schwinger(const ElasticMedium& medium, const PotentialField& potential,
                                     const IncidentPlaneWave& wave, const LsOptions& opt,
                                     Exec exec) {
  const VoxelGrid& grid = potential.grid;
  if (static_cast<int>(potential.q.size()) != grid.total())
    throw std::invalid_argument("potential does not match its grid");

  const KernelTable table(medium, grid, exec);
  const CVecX rhs = -stacked_incident(grid, medium, wave);

  VolumeField out;
  out.grid = grid;
  CVecX y;
  if (opt.path == LsSolverPath::dense) {
    if (grid.n > 12)
      throw std::invalid_argument("dense oracle path is limited to n <= 12");
    const int total = grid.total();
    CMatX a = CMatX::Identity(3 * total, 3 * total);
    for (int i = 0; i < total; ++i) {
      const int ix = i % grid.n, iy = (i / grid.n) % grid.n, iz = i / (grid.n * grid.n);
      for (int j = 0; j < total; ++j) {
        const int jx = j % grid.n, jy = (j / grid.n) % grid.n, jz = j / (grid.n * grid.n);
        a.block<3, 3>(3 * i, 3 * j) +=
            table.at(ix - jx, iy - jy, iz - jz) * potential.q[j].cast<cplx>();
      }
    }
    ComplexLuFactor f(std::move(a));
    y = f.solve(rhs);
    out.solver = "dense";
  } else {
    auto apply = [&](const CVecX& x, CVecX& ax) {
      apply_ls(grid, table, potential.q, x, ax, exec);
    };
    GmresOptions gopt;
    gopt.tol = opt.tol;
    gopt.max_iterations = opt.max_iterations;
    gopt.random_start_seed = opt.random_start_seed;
    auto res = gmres(apply, rhs, gopt);
    y = std::move(res.x);
    out.iterations = res.iterations;
    out.residual_history = std::move(res.residual_history);
    out.solver = "gmres";
  }

  CVecX check(y.size());
  apply_ls(grid, table, potential.q, y, check, exec);
  out.residual_norm = (check - rhs).norm() / rhs.norm();
  if (!(out.residual_norm <= opt.tol))
    throw NumericalError("lippmann-schwinger: residual contract violated", out.residual_history);

  out.u.resize(grid.total());
  for (int i = 0; i < grid.total(); ++i) out.u[i] = y.segment<3>(3 * i);
  return out;
}

CVecX apply_ls_operator(const ElasticMedium& medium, const PotentialField& potential,
                        const CVecX& x, Exec exec) {
  if (x.size() != 3 * potential.grid.total())
    throw std::invalid_argument("apply_ls_operator: size mismatch");
  const KernelTable table(medium, potential.grid, exec);
  CVecX y(x.size());
  apply_ls(potential.grid, table, potential.q, x, y, exec);
  return y;
}

FarFieldPattern ls_farfield(const ElasticMedium& medium, const PotentialField& potential,
                            const VolumeField& field, const std::vector<Vec3>& directions,
                            Exec exec) {
  const VoxelGrid& grid = potential.grid;
  if (field.grid.n != grid.n ||
      (field.grid.domain.lo - grid.domain.lo).norm() > 0.0 ||
      (field.grid.domain.hi - grid.domain.hi).norm() > 0.0)
    throw std::invalid_argument("ls_farfield: field grid does not match the potential grid");
  for (const auto& d : directions)
    if (std::abs(d.norm() - 1.0) > 1e-12)
      throw std::invalid_argument("ls_farfield: directions must be unit vectors");

  const double h3 = std::pow(grid.spacing(), 3);
  const int total = grid.total();
  std::vector<CVec3> w(total);
  for (int j = 0; j < total; ++j) w[j] = potential.q[j].cast<cplx>() * field.u[j];

  FarFieldPattern p;
  p.directions = directions;
  p.medium = medium;
  const auto nd = static_cast<int>(directions.size());
  p.p_part.resize(nd);
  p.s_part.resize(nd);
  const cplx i1(0.0, 1.0);
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
  for (int d = 0; d < nd; ++d) {
    const Vec3 xh = directions[d];
    CVec3 sum_p = CVec3::Zero(), sum_s = CVec3::Zero();
    for (int j = 0; j < total; ++j) {
      const double phase = xh.dot(grid.center(j));
      sum_p += std::exp(-i1 * medium.kappa_p * phase) * w[j];
      sum_s += std::exp(-i1 * medium.kappa_s * phase) * w[j];
    }
    p.p_part[d] =
        xh.cast<cplx>() * (xh.cast<cplx>().dot(sum_p)) * (h3 / (kFourPi * medium.c_p * medium.c_p));
    p.s_part[d] = (sum_s - xh.cast<cplx>() * (xh.cast<cplx>().dot(sum_s))) *
                  (h3 / (kFourPi * medium.c_s * medium.c_s));
  }
  return p;
}

void save_volume_csv(const VolumeField& f, const std::filesystem::path& path,
                     const std::string& meta) {
  std::FILE* out = std::fopen(path.c_str(), "w");
  if (!out) throw std::runtime_error("cannot open volume csv for writing: " + path.string());
  std::fprintf(out, "ix,iy,iz,Re(u1),Re(u2),Re(u3),Im(u1),Im(u2),Im(u3)\n");
  const int n = f.grid.n;
  for (int iz = 0; iz < n; ++iz)
    for (int iy = 0; iy < n; ++iy)
      for (int ix = 0; ix < n; ++ix) {
        const auto& u = f.u[f.grid.flat(ix, iy, iz)];
        std::fprintf(out, "%d,%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", ix, iy, iz,
                     u.x().real(), u.y().real(), u.z().real(), u.x().imag(), u.y().imag(),
                     u.z().imag());
      }
  if (!meta.empty()) std::fprintf(out, "# %s\n", meta.c_str());
  std::fclose(out);
}

}  // namespace elastscat
