#include "elastscat/surface_mesh.hpp"

#include <cstdio>
#include <map>
#include <set>
#include <sstream>

namespace elastscat {

Vec3 SurfaceMesh::triangle_centroid(std::size_t t) const {
  const auto& tri = triangles[t];
  return (vertices[tri[0]] + vertices[tri[1]] + vertices[tri[2]]) / 3.0;
}

double SurfaceMesh::triangle_area(std::size_t t) const {
  const auto& tri = triangles[t];
  const Vec3 e1 = vertices[tri[1]] - vertices[tri[0]];
  const Vec3 e2 = vertices[tri[2]] - vertices[tri[0]];
  return 0.5 * e1.cross(e2).norm();
}

double mesh_diameter(const SurfaceMesh& mesh) {
  double best = 0.0;
  const auto n = mesh.vertices.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      best = std::max(best, (mesh.vertices[i] - mesh.vertices[j]).squaredNorm());
  return std::sqrt(best);
}

double mesh_signed_volume(const SurfaceMesh& mesh) {
  double v = 0.0;
  for (const auto& t : mesh.triangles)
    v += mesh.vertices[t[0]].dot(mesh.vertices[t[1]].cross(mesh.vertices[t[2]]));
  return v / 6.0;
}

void validate_mesh(const SurfaceMesh& mesh) {
  if (mesh.vertices.size() < 4 || mesh.triangles.empty())
    throw std::invalid_argument("mesh: too few vertices or triangles");
  const int nv = static_cast<int>(mesh.vertices.size());
  std::set<std::pair<int, int>> directed;
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      if (t[k] < 0 || t[k] >= nv) throw std::invalid_argument("mesh: vertex index out of range");
      const auto e = std::make_pair(t[k], t[(k + 1) % 3]);
      if (e.first == e.second) throw std::invalid_argument("mesh: degenerate triangle edge");
      if (!directed.insert(e).second)
        throw std::invalid_argument("mesh: directed edge used twice (inconsistent winding)");
    }
  }
  for (const auto& e : directed)
    if (!directed.count({e.second, e.first}))
      throw std::invalid_argument("mesh: boundary edge found (surface not closed)");
  if (mesh_signed_volume(mesh) <= 0.0)
    throw std::invalid_argument("mesh: winding is not outward (non-positive volume)");
  if (!(mesh.diameter > 0.0)) throw std::invalid_argument("mesh: diameter must be positive");
}

namespace {

struct MidpointCache {
  std::map<std::pair<int, int>, int> cache;
  int midpoint(std::vector<Vec3>& verts, int a, int b) {
    const auto key = std::minmax(a, b);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    const int idx = static_cast<int>(verts.size());
    verts.push_back(0.5 * (verts[a] + verts[b]));
    cache.emplace(key, idx);
    return idx;
  }
};

}  // namespace

SurfaceMesh make_icosphere(int level, double radius) {
  if (level < 0 || level > 7) throw std::invalid_argument("icosphere level must be in [0, 7]");
  if (!(radius > 0.0)) throw std::invalid_argument("icosphere radius must be positive");

  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> verts = {
      {-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
      {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
      {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};

  for (int l = 0; l < level; ++l) {
    MidpointCache mc;
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const int a = mc.midpoint(verts, f[0], f[1]);
      const int b = mc.midpoint(verts, f[1], f[2]);
      const int c = mc.midpoint(verts, f[2], f[0]);
      next.push_back({f[0], a, c});
      next.push_back({f[1], b, a});
      next.push_back({f[2], c, b});
      next.push_back({a, b, c});
    }
    faces = std::move(next);
  }

  SurfaceMesh mesh;
  mesh.vertices.reserve(verts.size());
  for (const auto& v : verts) mesh.vertices.push_back(v * (radius / v.norm()));
  mesh.triangles = std::move(faces);
  mesh.label = "sphere";
  mesh.level = level;
  mesh.diameter = 2.0 * radius;
  return mesh;
}

SurfaceMesh make_cube(int level, double edge) {
  if (level < 0 || level > 6) throw std::invalid_argument("cube level must be in [0, 6]");
  if (!(edge > 0.0)) throw std::invalid_argument("cube edge must be positive");
  const int n = 1 << level;
  const double h = edge / n;

  SurfaceMesh mesh;
  std::map<std::array<long long, 3>, int> index;  // lattice coords -> vertex id
  auto vertex = [&](long long i, long long j, long long k) {
    auto it = index.find({i, j, k});
    if (it != index.end()) return it->second;
    const int id = static_cast<int>(mesh.vertices.size());
    mesh.vertices.push_back(Vec3(i * h - edge / 2, j * h - edge / 2, k * h - edge / 2));
    index.emplace(std::array<long long, 3>{i, j, k}, id);
    return id;
  };

  // axis = fixed coordinate, side = 0 or n. Quads are split along the same
  // local diagonal on every face.
  for (int axis = 0; axis < 3; ++axis) {
    for (int side = 0; side < 2; ++side) {
      const long long w = side == 0 ? 0 : n;
      for (long long u = 0; u < n; ++u) {
        for (long long v = 0; v < n; ++v) {
          auto at = [&](long long uu, long long vv) {
            long long c[3];
            c[axis] = w;
            c[(axis + 1) % 3] = uu;
            c[(axis + 2) % 3] = vv;
            return vertex(c[0], c[1], c[2]);
          };
          const int p00 = at(u, v), p10 = at(u + 1, v), p01 = at(u, v + 1), p11 = at(u + 1, v + 1);
          if (side == 1) {
            mesh.triangles.push_back({p00, p10, p11});
            mesh.triangles.push_back({p00, p11, p01});
          } else {
            mesh.triangles.push_back({p00, p11, p10});
            mesh.triangles.push_back({p00, p01, p11});
          }
        }
      }
    }
  }
  mesh.label = "cube";
  mesh.level = level;
  mesh.diameter = edge * std::sqrt(3.0);
  return mesh;
}

SurfaceMesh make_ellipsoid(int level, const Vec3& semi_axes) {
  if (!(semi_axes.minCoeff() > 0.0))
    throw std::invalid_argument("ellipsoid semi-axes must be positive");
  SurfaceMesh mesh = make_icosphere(level, 1.0);
  for (auto& v : mesh.vertices) v = v.cwiseProduct(semi_axes);
  mesh.label = "ellipsoid";
  mesh.diameter = 2.0 * semi_axes.maxCoeff();
  return mesh;
}

SurfaceMesh rotate_mesh(const SurfaceMesh& mesh, const Mat3& r) {
  SurfaceMesh out = mesh;
  for (auto& v : out.vertices) v = r * v;
  return out;
}

SurfaceMesh scale_mesh(const SurfaceMesh& mesh, double s) {
  if (!(s > 0.0)) throw std::invalid_argument("mesh scale must be positive");
  SurfaceMesh out = mesh;
  for (auto& v : out.vertices) v *= s;
  out.diameter = mesh.diameter * s;
  return out;
}

void save_mesh(const SurfaceMesh& mesh, const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open mesh file for writing: " + path.string());
  std::fprintf(f, "%zu %zu\n", mesh.vertices.size(), mesh.triangles.size());
  for (const auto& v : mesh.vertices)
    std::fprintf(f, "%.17g %.17g %.17g\n", v.x(), v.y(), v.z());
  for (const auto& t : mesh.triangles) std::fprintf(f, "%d %d %d\n", t[0], t[1], t[2]);
  std::fclose(f);
}

SurfaceMesh load_mesh(const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.c_str(), "r");
  if (!f) throw std::runtime_error("cannot open mesh file: " + path.string());
  std::size_t nv = 0, nt = 0;
  if (std::fscanf(f, "%zu %zu", &nv, &nt) != 2) {
    std::fclose(f);
    throw std::runtime_error("mesh file: bad header line");
  }
  SurfaceMesh mesh;
  mesh.vertices.resize(nv);
  mesh.triangles.resize(nt);
  for (auto& v : mesh.vertices) {
    if (std::fscanf(f, "%lg %lg %lg", &v.x(), &v.y(), &v.z()) != 3) {
      std::fclose(f);
      throw std::runtime_error("mesh file: bad vertex line");
    }
  }
  for (auto& t : mesh.triangles) {
    if (std::fscanf(f, "%d %d %d", &t[0], &t[1], &t[2]) != 3) {
      std::fclose(f);
      throw std::runtime_error("mesh file: bad triangle line");
    }
  }
  std::fclose(f);
  mesh.label = path.stem().string();
  mesh.diameter = mesh_diameter(mesh);
  return mesh;
}

}  // namespace elastscat
