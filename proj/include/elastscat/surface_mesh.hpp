#pragma once

#include <array>
#include <filesystem>
#include <string>

#include "elastscat/types.hpp"

namespace elastscat {

/// Closed triangulated surface with outward-consistent winding.
struct SurfaceMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;

  std::string label;      // shape label, e.g. "sphere"
  int level = 0;          // refinement level
  double diameter = 0.0;  // Euclidean diameter of the vertex set

  std::size_t triangle_count() const { return triangles.size(); }
  Vec3 triangle_centroid(std::size_t t) const;
  double triangle_area(std::size_t t) const;
};

/// Checks the mesh invariants: every directed edge used exactly once (closed,
/// orientable, consistently wound), outward orientation (positive enclosed
/// volume), positive diameter. Throws std::invalid_argument on violation.
void validate_mesh(const SurfaceMesh& mesh);

double mesh_diameter(const SurfaceMesh& mesh);
double mesh_signed_volume(const SurfaceMesh& mesh);

/// Icosahedron subdivided `level` times, projected onto the sphere.
SurfaceMesh make_icosphere(int level, double radius = 1.0);
/// Cube surface; each face carries (2^level)^2 quads split into triangles.
SurfaceMesh make_cube(int level, double edge = 1.0);
/// Icosphere stretched to the given semi-axes.
SurfaceMesh make_ellipsoid(int level, const Vec3& semi_axes);

SurfaceMesh rotate_mesh(const SurfaceMesh& mesh, const Mat3& r);
SurfaceMesh scale_mesh(const SurfaceMesh& mesh, double s);

/// ASCII format: "nv nt", nv lines "x y z", nt lines "i j k" (0-based),
/// 17 significant digits; write/read round-trips bit-exactly.
void save_mesh(const SurfaceMesh& mesh, const std::filesystem::path& path);
SurfaceMesh load_mesh(const std::filesystem::path& path);

}  // namespace elastscat
