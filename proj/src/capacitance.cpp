#include "elastscat/capacitance.hpp"

#include <cmath>
#include <fstream>
#include <memory>
#include <nlohmann/json.hpp>
#include <numbers>
#include <sstream>

#include "elastscat/dense_solve.hpp"

namespace elastscat {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;
constexpr double kEightPi = 8.0 * std::numbers::pi;

// Exact wedge integrals around an in-plane point p for the edge (a, b), in
// polar coordinates centered at p:
//   int 1/|p-s| dA      = d [ asinh(xi/d) ]
//   int u u^T/|p-s|^3 dA = d [ xi/rho ] ed ed^T - d^2 [ 1/rho ] (ed t^T + t ed^T)
//                          + d [ asinh(xi/d) - xi/rho ] t t^T
// where t = edge tangent, d = distance from p to the edge line, ed = unit
// vector toward the foot, xi = signed offsets of a, b along t and rho their
// distances to p. Degenerate slivers (p on the edge line) contribute zero.
struct WedgeIntegrals {
  double ip = 0.0;
  Mat3 it = Mat3::Zero();
};

WedgeIntegrals wedge_integrals(const Vec3& p, const Vec3& a, const Vec3& b) {
  WedgeIntegrals out;
  const Vec3 t = (b - a).normalized();
  const Vec3 foot = a + (p - a).dot(t) * t;
  const double d = (foot - p).norm();
  if (d < 1e-14 * (b - a).norm()) return out;
  const Vec3 ed = (foot - p) / d;
  const double xa = (a - foot).dot(t), xb = (b - foot).dot(t);
  const double ra = (a - p).norm(), rb = (b - p).norm();
  const double dasinh = std::asinh(xb / d) - std::asinh(xa / d);
  out.ip = d * dasinh;
  out.it = d * (xb / rb - xa / ra) * (ed * ed.transpose()) -
           d * d * (1.0 / rb - 1.0 / ra) * (ed * t.transpose() + t * ed.transpose()) +
           (d * dasinh - d * (xb / rb - xa / ra)) * (t * t.transpose());
  return out;
}

struct Geometry {
  std::vector<Vec3> centroids;
  std::vector<double> areas;
  std::vector<TriangleSelfIntegrals> self;
  double mean_h = 0.0;  // mean triangle diameter proxy
};

Geometry precompute_geometry(const SurfaceMesh& mesh) {
  const auto n = mesh.triangle_count();
  Geometry g;
  g.centroids.resize(n);
  g.areas.resize(n);
  g.self.resize(n);
  double hsum = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    g.centroids[t] = mesh.triangle_centroid(t);
    g.areas[t] = mesh.triangle_area(t);
    const auto& tri = mesh.triangles[t];
    g.self[t] = triangle_self_integrals(mesh.vertices[tri[0]], mesh.vertices[tri[1]],
                                        mesh.vertices[tri[2]]);
    hsum += std::sqrt(g.areas[t]);
  }
  g.mean_h = hsum / static_cast<double>(n);
  return g;
}

// Scalar collocation matrix of the 1/|x-y| kernel, columns rescaled by
// triangle areas so the matrix is symmetric; solutions y relate to densities
// by sigma_j = y_j / area_j and functionals sum y directly.
MatX assemble_scalar(const Geometry& g, Exec exec) {
  const auto n = static_cast<Eigen::Index>(g.centroids.size());
  MatX s(n, n);
#pragma omp parallel for schedule(dynamic, 32) if (exec == Exec::parallel)
  for (Eigen::Index i = 0; i < n; ++i) {
    s(i, i) = g.self[i].ip / g.areas[i];
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = 1.0 / (g.centroids[i] - g.centroids[j]).norm();
      s(i, j) = v;
      s(j, i) = v;
    }
  }
  return s;
}

// Kelvin-kernel collocation matrix, same symmetric rescaling. With
// a0 = (1/8pi)(1/mu + 1/(lambda+2mu)) and b0 = (1/8pi)(1/mu - 1/(lambda+2mu)):
//   S_ij = a0/r I + b0 (u)(u)^T/r^3.
void assemble_kelvin(const Geometry& g, double a0, double b0, MatX& s, Exec exec) {
  const auto n = static_cast<Eigen::Index>(g.centroids.size());
  s.resize(3 * n, 3 * n);
#pragma omp parallel for schedule(dynamic, 16) if (exec == Exec::parallel)
  for (Eigen::Index i = 0; i < n; ++i) {
    const Mat3 diag =
        (a0 * g.self[i].ip * Mat3::Identity() + b0 * g.self[i].it) / g.areas[i];
    s.block<3, 3>(3 * i, 3 * i) = diag;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const Vec3 u = g.centroids[i] - g.centroids[j];
      const double r = u.norm();
      const Mat3 block =
          (a0 / r) * Mat3::Identity() + (b0 / (r * r * r)) * (u * u.transpose());
      s.block<3, 3>(3 * i, 3 * j) = block;
      s.block<3, 3>(3 * j, 3 * i) = block;
    }
  }
}

struct LameCoefficients {
  double a0, b0;
};

LameCoefficients kelvin_coefficients(double lambda, double mu) {
  if (!(mu > 0.0) || !(3.0 * lambda + 2.0 * mu > 0.0))
    throw std::invalid_argument("elastic_capacitance: invalid Lame pair");
  const double lp2m = lambda + 2.0 * mu;
  return {(1.0 / mu + 1.0 / lp2m) / kEightPi, (1.0 / mu - 1.0 / lp2m) / kEightPi};
}

MatX identity_rhs(Eigen::Index n) {
  MatX e = MatX::Zero(3 * n, 3);
  for (Eigen::Index i = 0; i < n; ++i) e.block<3, 3>(3 * i, 0) = Mat3::Identity();
  return e;
}

Mat3 sum_blocks(const MatX& y) {
  Mat3 c = Mat3::Zero();
  for (Eigen::Index i = 0; i < y.rows() / 3; ++i) c += y.block<3, 3>(3 * i, 0);
  return c;
}

CapacitanceMatrix finalize(const SurfaceMesh& mesh, double lambda, double mu, const Mat3& c_raw,
                           double c_acoustic_raw, const Geometry& g, double rcond) {
  CapacitanceMatrix out;
  out.shape = mesh.label;
  out.level = mesh.level;
  out.lambda = lambda;
  out.mu = mu;
  out.asymmetry = (c_raw - c_raw.transpose()).cwiseAbs().maxCoeff();
  out.c_elastic = 0.5 * (c_raw + c_raw.transpose()) / mesh.diameter;
  out.c_acoustic = c_acoustic_raw / mesh.diameter;
  const double h_rel = g.mean_h / mesh.diameter;
  out.err_estimate = h_rel * h_rel * out.c_elastic.norm();
  out.rcond = rcond;
  if (out.asymmetry > 10.0 * out.err_estimate * mesh.diameter)
    throw NumericalError("elastic_capacitance: asymmetry exceeds 10x the quadrature estimate");
  return out;
}

void check_conditioning(double rcond) {
  if (rcond < 1e-14) {
    std::ostringstream os;
    os << "collocation matrix is numerically singular (rcond = " << rcond << ")";
    throw NumericalError(os.str());
  }
}

}  // namespace

TriangleSelfIntegrals triangle_self_integrals(const Vec3& v0, const Vec3& v1, const Vec3& v2) {
  const Vec3 p = (v0 + v1 + v2) / 3.0;
  TriangleSelfIntegrals out;
  const Vec3 verts[3] = {v0, v1, v2};
  for (int e = 0; e < 3; ++e) {
    const auto w = wedge_integrals(p, verts[e], verts[(e + 1) % 3]);
    out.ip += w.ip;
    out.it += w.it;
  }
  return out;
}

double acoustic_capacitance(const SurfaceMesh& mesh, Exec exec) {
  validate_mesh(mesh);
  const Geometry g = precompute_geometry(mesh);
  const MatX s = assemble_scalar(g, exec);
  SymmetricFactor f(s);
  check_conditioning(f.rcond());
  const VecX y = f.solve(VecX::Constant(s.rows(), kFourPi));
  return y.sum();
}

CapacitanceMatrix elastic_capacitance(const SurfaceMesh& mesh, double lambda, double mu,
                                      Exec exec) {
  const std::pair<double, double> pair{lambda, mu};
  return elastic_capacitance_family(mesh, std::span(&pair, 1), exec).front();
}

std::vector<CapacitanceMatrix> elastic_capacitance_family(
    const SurfaceMesh& mesh, std::span<const std::pair<double, double>> lame_pairs, Exec exec,
    std::size_t reuse_threshold) {
  validate_mesh(mesh);
  if (lame_pairs.empty()) return {};
  const Geometry g = precompute_geometry(mesh);
  const auto n = static_cast<Eigen::Index>(mesh.triangle_count());

  // acoustic value on the same mesh and quadrature
  double c_acoustic = 0.0;
  {
    const MatX s = assemble_scalar(g, exec);
    SymmetricFactor f(s);
    check_conditioning(f.rcond());
    c_acoustic = f.solve(VecX::Constant(n, kFourPi)).sum();
  }

  const MatX e = identity_rhs(n);
  std::vector<CapacitanceMatrix> out;

  const bool reuse_path =
      static_cast<std::size_t>(3 * n) >= reuse_threshold && lame_pairs.size() > 1;
  if (!reuse_path) {
    MatX s;
    for (const auto& [lambda, mu] : lame_pairs) {
      const auto [a0, b0] = kelvin_coefficients(lambda, mu);
      assemble_kelvin(g, a0, b0, s, exec);
      SymmetricFactor f(std::move(s));
      check_conditioning(f.rcond());
      const MatX y = f.solve(e);
      out.push_back(finalize(mesh, lambda, mu, sum_blocks(y), c_acoustic, g, f.rcond()));
      s = MatX();  // moved-from; reallocate next round
    }
    return out;
  }

  // Assemble the pencil once: A_k = alpha_k M1 + beta_k (Sp (x) I). A single
  // single-precision Cholesky of M1 preconditions a damped block refinement
  // for every pair, with double-precision residuals; the conditioning here
  // (rcond ~ 1e-3) is far inside the mixed-precision safety range.
  const auto [a1, b1] = kelvin_coefficients(lame_pairs[0].first, lame_pairs[0].second);
  const MatX sp = assemble_scalar(g, exec);
  MatX m1;
  assemble_kelvin(g, a1, b1, m1, exec);

  std::unique_ptr<FloatCholesky> f1;
  try {
    f1 = std::make_unique<FloatCholesky>(m1);
    check_conditioning(f1->rcond());
  } catch (const NumericalError&) {
    f1.reset();
  }

  auto apply_scalar_blocks = [&](const MatX& x) {
    // (Sp (x) I3) x for block-structured x, via a 3 x n reshape per column
    MatX y(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      Eigen::Map<const Eigen::Matrix<double, 3, Eigen::Dynamic>> xm(x.col(c).data(), 3, n);
      Eigen::Map<Eigen::Matrix<double, 3, Eigen::Dynamic>> ym(y.col(c).data(), 3, n);
      ym.noalias() = xm * sp.transpose();
    }
    return y;
  };

  const double enorm = e.norm();
  for (std::size_t k = 0; k < lame_pairs.size(); ++k) {
    const auto [ak, bk] = kelvin_coefficients(lame_pairs[k].first, lame_pairs[k].second);
    const double alpha = bk / b1;
    const double beta = ak - bk * a1 / b1;
    // spectrum of M1^-1 A_k lies between alpha and alpha + beta/a1 for a
    // positive-definite pencil
    const double e_lo = std::min(alpha, alpha + beta / a1);
    const double e_hi = std::max(alpha, alpha + beta / a1);
    bool converged = false;
    MatX y;
    if (f1 && e_lo > 0.0) {
      const double omega = 2.0 / (e_lo + e_hi);
      auto apply = [&](const MatX& x) {
        MatX r = alpha * (m1.selfadjointView<Eigen::Lower>() * x);
        r.noalias() += beta * apply_scalar_blocks(x);
        return r;
      };
      y = omega * f1->solve(e);
      double prev = 1e300;
      for (int it = 0; it < 200; ++it) {
        const MatX resid = e - apply(y);
        const double rel = resid.norm() / enorm;
        if (rel < 1e-12) {
          converged = true;
          break;
        }
        if (rel > 0.9 * prev) break;  // stalling; fall back to a fresh factorization
        prev = rel;
        y += omega * f1->solve(resid);
      }
    }
    if (converged) {
      out.push_back(finalize(mesh, lame_pairs[k].first, lame_pairs[k].second, sum_blocks(y),
                             c_acoustic, g, f1->rcond()));
    } else {
      MatX s;
      assemble_kelvin(g, ak, bk, s, exec);
      SymmetricFactor f(std::move(s));
      check_conditioning(f.rcond());
      out.push_back(finalize(mesh, lame_pairs[k].first, lame_pairs[k].second,
                             sum_blocks(f.solve(e)), c_acoustic, g, f.rcond()));
    }
  }
  return out;
}

CapacitanceMatrix conjugate_capacitance(const CapacitanceMatrix& c, const Mat3& r) {
  if ((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("conjugate_capacitance: matrix is not unitary");
  CapacitanceMatrix out = c;
  out.c_elastic = r * c.c_elastic * r.transpose();
  return out;
}

std::string capacitance_cache_name(const std::string& shape, int level, double lambda,
                                   double mu) {
  std::ostringstream os;
  os << "cap_" << shape << "_L" << level << "_" << std::hexfloat << lambda << "_" << mu
     << ".json";
  auto s = os.str();
  for (auto& ch : s)
    if (ch == '.' || ch == '+' || ch == '-') ch = 'm';
  return s;
}

void save_capacitance(const CapacitanceMatrix& c, const std::filesystem::path& path) {
  nlohmann::json j;
  j["shape"] = c.shape;
  j["level"] = c.level;
  j["lambda"] = c.lambda;
  j["mu"] = c.mu;
  j["c_acoustic"] = c.c_acoustic;
  auto& m = j["c_elastic"];
  for (int i = 0; i < 3; ++i) m.push_back({c.c_elastic(i, 0), c.c_elastic(i, 1), c.c_elastic(i, 2)});
  j["err_estimate"] = c.err_estimate;
  j["asymmetry"] = c.asymmetry;
  j["rcond"] = c.rcond;
  std::ofstream(path) << j.dump(2) << "\n";
}

CapacitanceMatrix load_capacitance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open capacitance cache: " + path.string());
  nlohmann::json j;
  in >> j;
  CapacitanceMatrix c;
  c.shape = j.at("shape").get<std::string>();
  c.level = j.at("level").get<int>();
  c.lambda = j.at("lambda").get<double>();
  c.mu = j.at("mu").get<double>();
  c.c_acoustic = j.at("c_acoustic").get<double>();
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) c.c_elastic(i, k) = j.at("c_elastic")[i][k].get<double>();
  c.err_estimate = j.at("err_estimate").get<double>();
  c.asymmetry = j.value("asymmetry", 0.0);
  c.rcond = j.value("rcond", 0.0);
  return c;
}

}  // namespace elastscat
