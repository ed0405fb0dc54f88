#pragma once

#include <filesystem>
#include <span>

#include "elastscat/surface_mesh.hpp"
#include "elastscat/types.hpp"

namespace elastscat {

/// Capacitance of a reference body, normalized per unit diameter: the body of
/// diameter a has elastic capacitance c_elastic * a and acoustic capacitance
/// c_acoustic * a.
struct CapacitanceMatrix {
  Mat3 c_elastic = Mat3::Zero();  // symmetric positive definite
  double c_acoustic = 0.0;

  std::string shape;
  int level = 0;
  double lambda = 0.0;
  double mu = 0.0;
  double err_estimate = 0.0;  // discretization error estimate, same scale as c_elastic
  double asymmetry = 0.0;     // ||C - C^T||_max of the un-symmetrized solve
  double rcond = 0.0;         // reciprocal condition estimate of the collocation matrix
};

/// Acoustic capacitance of the meshed body (not diameter-normalized):
/// collocates the first-kind single-layer equation at triangle centroids with
/// piecewise-constant densities and an analytic in-plane self-term, then
/// integrates the density.
double acoustic_capacitance(const SurfaceMesh& mesh, Exec exec = Exec::parallel);

/// Elastic capacitance via the Kelvin-kernel first-kind equation, solved
/// columnwise; same collocation scheme, Duffy quadrature on the self tensor
/// term. Output is diameter-normalized (see CapacitanceMatrix).
CapacitanceMatrix elastic_capacitance(const SurfaceMesh& mesh, double lambda, double mu,
                                      Exec exec = Exec::parallel);

/// Capacitances of one mesh for several Lame pairs. Large systems factor the
/// first pair only and solve the remaining pairs by preconditioned iteration
/// on the same kernel pencil, falling back to fresh factorizations when the
/// iteration stalls.
std::vector<CapacitanceMatrix> elastic_capacitance_family(
    const SurfaceMesh& mesh, std::span<const std::pair<double, double>> lame_pairs,
    Exec exec = Exec::parallel, std::size_t reuse_threshold = 8000);

/// R C R^T for unitary R. Rejects non-unitary input (1e-12).
CapacitanceMatrix conjugate_capacitance(const CapacitanceMatrix& c, const Mat3& r);

/// Singular part integrals of one triangle at its centroid:
///   ip = int_T 1/|c-s| dA,   it = int_T (u)(u)^T/|c-s|^3 dA, u = c - s.
/// Both are evaluated by exact in-plane wedge formulas (the centroid split);
/// tr(it) = ip holds identically.
struct TriangleSelfIntegrals {
  double ip = 0.0;
  Mat3 it = Mat3::Zero();
};
TriangleSelfIntegrals triangle_self_integrals(const Vec3& v0, const Vec3& v1, const Vec3& v2);

// cache records: JSON {shape, level, lambda, mu, c_acoustic, c_elastic, err_estimate}
std::string capacitance_cache_name(const std::string& shape, int level, double lambda, double mu);
void save_capacitance(const CapacitanceMatrix& c, const std::filesystem::path& path);
CapacitanceMatrix load_capacitance(const std::filesystem::path& path);

}  // namespace elastscat
