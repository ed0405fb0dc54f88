#include "elastscat/distribution.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <nlohmann/json.hpp>
#include <sstream>

namespace elastscat {

double KField::operator()(const Vec3& z) const {
  switch (kind) {
    case Kind::constant: return value;
    case Kind::linear: return offset + gradient.dot(z);
  }
  return 0.0;
}

KField constant_k(double value) {
  if (value < 0.0) throw std::invalid_argument("K must be nonnegative");
  KField k;
  k.kind = KField::Kind::constant;
  k.value = value;
  return k;
}

KField linear_k(const Vec3& gradient, double offset) {
  KField k;
  k.kind = KField::Kind::linear;
  k.gradient = gradient;
  k.offset = offset;
  return k;
}

double k_max_over(const KField& k, const Box& box) {
  if (k.kind == KField::Kind::constant) {
    if (k.value < 0.0) throw std::invalid_argument("K must be nonnegative on the domain");
    return k.value + 1.0;
  }
  double kmin = 1e300, kmax = -1e300;
  for (int c = 0; c < 8; ++c) {
    const Vec3 corner(c & 1 ? box.hi.x() : box.lo.x(), c & 2 ? box.hi.y() : box.lo.y(),
                      c & 4 ? box.hi.z() : box.lo.z());
    const double v = k(corner);
    kmin = std::min(kmin, v);
    kmax = std::max(kmax, v);
  }
  if (kmin < 0.0) throw std::invalid_argument("K must be nonnegative on the domain");
  return kmax + 1.0;
}

int CubePartition::total_targets() const {
  int m = 0;
  for (const auto& c : cells) m += c.target_count;
  return m;
}

namespace {

// volume prescription a [K+1]/(K+1) evaluated at z
double cell_volume_rule(const KField& k, double a, const Vec3& z) {
  const double kv = k(z);
  return a * std::floor(kv + 1.0) / (kv + 1.0);
}

}  // namespace

namespace {

// Factors n into three integers as close to cubic as possible; returns the
// aspect ratio n1/n3 of the best triple found.
double near_cubic_factors(long long n, std::array<long long, 3>& best) {
  double best_aspect = 1e300;
  for (long long f3 = 1; f3 * f3 * f3 <= n; ++f3) {
    if (n % f3 != 0) continue;
    const long long rest = n / f3;
    for (long long f2 = f3; f2 * f2 <= rest; ++f2) {
      if (rest % f2 != 0) continue;
      const long long f1 = rest / f2;
      const double aspect = static_cast<double>(f1) / static_cast<double>(f3);
      if (aspect < best_aspect) {
        best_aspect = aspect;
        best = {f1, f2, f3};
      }
    }
  }
  return best_aspect;
}

}  // namespace

CubePartition partition_domain(const Box& omega, double a, const KField& k, double a0) {
  if (!(a > 0.0) || a > a0) {
    std::ostringstream os;
    os << "partition_domain: need 0 < a <= a0 = " << a0 << ", got a = " << a;
    throw std::invalid_argument(os.str());
  }
  if (std::abs(omega.volume() - 1.0) > 1e-9)
    throw std::invalid_argument("partition_domain: domain volume must be normalized to 1");

  CubePartition part;
  part.domain = omega;
  part.a = a;
  part.k = k;

  // Pitch grid of floor(1/a) boxes factored as near-cubic as possible, so
  // exact 1/a tiles with zero slack (every dyadic a does). Each box holds one
  // cell, shrunk isotropically about the box center to the exact prescribed
  // volume; the shrink never exceeds 1 because a [K+1]/(K+1) <= a <= 1/N.
  long long n_boxes = static_cast<long long>(std::floor(1.0 / a + 1e-9));
  std::array<long long, 3> f{1, 1, 1};
  if (near_cubic_factors(n_boxes, f) > 2.0 + 1e-9) {
    // awkward divisors (e.g. primes): fall back to the densest floor/ceil
    // lattice not exceeding 1/a, accepting uniform inter-cell gaps
    const double c = std::cbrt(static_cast<double>(n_boxes));
    long long best_product = 0;
    for (long long i = 0; i < 8; ++i) {
      const std::array<long long, 3> cand = {
          static_cast<long long>(i & 1 ? std::ceil(c) : std::floor(c)),
          static_cast<long long>(i & 2 ? std::ceil(c) : std::floor(c)),
          static_cast<long long>(i & 4 ? std::ceil(c) : std::floor(c))};
      const long long prod = cand[0] * cand[1] * cand[2];
      if (prod <= n_boxes && prod > best_product) {
        best_product = prod;
        f = cand;
      }
    }
  }
  if (f[0] * f[1] * f[2] < 1)
    throw std::invalid_argument("partition_domain: a is too large to fit a single cell");

  const Vec3 ext = omega.hi - omega.lo;
  const Vec3 pitch(ext.x() / f[0], ext.y() / f[1], ext.z() / f[2]);
  const double box_volume = pitch.prod();
  part.cells.reserve(static_cast<std::size_t>(f[0] * f[1] * f[2]));
  for (long long iz = 0; iz < f[2]; ++iz)
    for (long long iy = 0; iy < f[1]; ++iy)
      for (long long ix = 0; ix < f[0]; ++ix) {
        PartitionCell cell;
        cell.center = omega.lo + Vec3((ix + 0.5) * pitch.x(), (iy + 0.5) * pitch.y(),
                                      (iz + 0.5) * pitch.z());
        const double want = cell_volume_rule(k, a, cell.center);
        const double shrink = std::cbrt(want / box_volume);
        cell.edges = std::min(shrink, 1.0) * pitch;
        cell.target_count = static_cast<int>(std::floor(k(cell.center) + 1.0));
        part.cells.push_back(cell);
      }

  double covered = 0.0;
  for (const auto& c : part.cells) covered += c.edges.prod();
  part.uncovered_volume = omega.volume() - covered;
  return part;
}

void validate_partition(const CubePartition& p, double tol) {
  for (const auto& c : p.cells) {
    const double want = cell_volume_rule(p.k, p.a, c.center);
    if (std::abs(c.edges.prod() - want) > tol * std::max(1.0, want))
      throw std::logic_error("partition: cell volume rule violated");
    for (int d = 0; d < 3; ++d) {
      if (c.center[d] - c.edges[d] / 2 < p.domain.lo[d] - 1e-9 ||
          c.center[d] + c.edges[d] / 2 > p.domain.hi[d] + 1e-9)
        throw std::logic_error("partition: cell leaves the domain");
    }
  }
  // pairwise disjoint (boxes overlap iff they overlap on every axis)
  for (std::size_t i = 0; i < p.cells.size(); ++i)
    for (std::size_t j = i + 1; j < p.cells.size(); ++j) {
      const auto& a = p.cells[i];
      const auto& b = p.cells[j];
      bool overlap = true;
      for (int d = 0; d < 3; ++d)
        overlap = overlap && std::abs(a.center[d] - b.center[d]) <
                                 (a.edges[d] + b.edges[d]) / 2 - 1e-12;
      if (overlap) throw std::logic_error("partition: cells overlap");
    }
  if (p.total_targets() > k_max_over(p.k, p.domain) * std::ceil(1.0 / p.a) + 1e-9)
    throw std::logic_error("partition: target count exceeds K_max ceil(1/a)");
}

const CapacitanceMatrix& ScattererConfiguration::capacitance_of(int m) const {
  if (capacitances.empty())
    throw std::logic_error("configuration has no capacitances attached");
  if (cap_index.empty()) return capacitances.front();
  return capacitances[cap_index[m]];
}

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

ScattererConfiguration place_scatterers(const CubePartition& partition, double a, double t,
                                        uint64_t seed, const PlacementOptions& opt) {
  if (std::abs(a - partition.a) > 1e-12 * a)
    throw std::invalid_argument("place_scatterers: a must match the partition");
  if (!(opt.d_min > 0.0) || opt.jitter < 0.0 || opt.jitter > 1.0)
    throw std::invalid_argument("place_scatterers: bad options");

  const double delta = opt.d_min * std::pow(a, t);

  ScattererConfiguration config;
  config.a = a;
  config.t = t;
  config.seed = seed;
  config.s_exponent = opt.s_exponent;
  config.d_guarantee = delta;
  config.alpha_dist = (t >= 1.0 / 3.0 - 1e-12 && t <= 7.0 / 12.0 + 1e-12) ? (t - 0.25) / t : 0.0;

  double count_acc = 0.0;  // error-diffusion accumulator for thinned regimes
  for (std::size_t ci = 0; ci < partition.cells.size(); ++ci) {
    const auto& cell = partition.cells[ci];
    count_acc += opt.count_scale * cell.target_count;
    const int want = static_cast<int>(std::floor(count_acc + 1e-12));
    count_acc -= want;
    if (want == 0) continue;

    // near-cubic sub-lattice with at least `want` sites
    int m[3] = {1, 1, 1};
    while (m[0] * m[1] * m[2] < want) {
      int grow = 0;
      double best = -1.0;
      for (int d = 0; d < 3; ++d) {
        const double s = cell.edges[d] / (m[d] + 1);
        if (s > best) {
          best = s;
          grow = d;
        }
      }
      ++m[grow];
    }
    const Vec3 s(cell.edges[0] / m[0], cell.edges[1] / m[1], cell.edges[2] / m[2]);
    if (s.minCoeff() < delta - 1e-12) {
      std::ostringstream os;
      os << "packing bound violated: cell sub-lattice pitch " << s.minCoeff()
         << " < required spacing d_min*a^t = " << delta << " (cell targets " << want
         << ", t = " << t << "); need t >= 1/3 and d_min*a^t <= (a/count)^(1/3) scale";
      throw InfeasibleError(os.str());
    }

    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(ci)));
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    const int sites = m[0] * m[1] * m[2];
    for (int j = 0; j < want; ++j) {
      const int site = static_cast<int>((static_cast<long long>(j) * sites) / want);
      const int sx = site % m[0], sy = (site / m[0]) % m[1], sz = site / (m[0] * m[1]);
      Vec3 pos = cell.center - cell.edges / 2 +
                 Vec3((sx + 0.5) * s.x(), (sy + 0.5) * s.y(), (sz + 0.5) * s.z());
      for (int d = 0; d < 3; ++d) pos[d] += opt.jitter * (s[d] - delta) * u(rng);
      config.positions.push_back(pos);
    }
  }

  if (config.positions.empty())
    throw InfeasibleError("place_scatterers: no targets requested (count_scale too small)");
  config.d_actual = config.positions.size() > 1
                        ? min_pairwise_distance(config.positions)
                        : (partition.domain.hi - partition.domain.lo).norm();
  config.m_max_const = config.positions.size() * std::pow(a, opt.s_exponent);
  return config;
}

void attach_capacitance(ScattererConfiguration& config, const CapacitanceMatrix& c) {
  config.capacitances = {c};
  config.cap_index.clear();
}

double min_pairwise_distance_exhaustive(const std::vector<Vec3>& pts) {
  double best = 1e300;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      best = std::min(best, (pts[i] - pts[j]).squaredNorm());
  return std::sqrt(best);
}

namespace {

double min_pairwise_distance_hashed(const std::vector<Vec3>& pts) {
  Vec3 lo = pts.front(), hi = pts.front();
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double vol = std::max((hi - lo).prod(), 1e-300);
  const double cell = std::max(std::cbrt(vol / pts.size()), 1e-12);
  auto key = [&](const Vec3& p) {
    return std::array<long long, 3>{static_cast<long long>(std::floor((p.x() - lo.x()) / cell)),
                                    static_cast<long long>(std::floor((p.y() - lo.y()) / cell)),
                                    static_cast<long long>(std::floor((p.z() - lo.z()) / cell))};
  };
  std::map<std::array<long long, 3>, std::vector<int>> grid;
  for (std::size_t i = 0; i < pts.size(); ++i) grid[key(pts[i])].push_back(static_cast<int>(i));

  double best2 = 1e300;
  // expand the neighborhood radius until it certifies the current minimum
  for (long long radius = 1;; ++radius) {
    best2 = 1e300;
    for (const auto& [k, bucket] : grid) {
      for (long long dx = -radius; dx <= radius; ++dx)
        for (long long dy = -radius; dy <= radius; ++dy)
          for (long long dz = -radius; dz <= radius; ++dz) {
            const auto it = grid.find({k[0] + dx, k[1] + dy, k[2] + dz});
            if (it == grid.end()) continue;
            for (int i : bucket)
              for (int j : it->second)
                if (j > i) best2 = std::min(best2, (pts[i] - pts[j]).squaredNorm());
          }
    }
    if (best2 <= (radius * cell) * (radius * cell) || radius > 64) break;
  }
  return std::sqrt(best2);
}

}  // namespace

double min_pairwise_distance(const std::vector<Vec3>& pts, std::size_t exhaustive_limit) {
  if (pts.size() < 2) return 0.0;
  if (pts.size() <= exhaustive_limit) return min_pairwise_distance_exhaustive(pts);
  return min_pairwise_distance_hashed(pts);
}

std::vector<LayerBin> layer_census(const ScattererConfiguration& config, int m,
                                   double layer_width) {
  if (m < 0 || m >= config.body_count())
    throw std::invalid_argument("layer_census: body index out of range");
  const double width =
      layer_width > 0.0 ? layer_width : std::cbrt(1.0 / std::max(1, config.body_count()));
  std::map<int, LayerBin> bins;
  const Vec3 z = config.positions[m];
  for (int j = 0; j < config.body_count(); ++j) {
    if (j == m) continue;
    const Vec3 d = config.positions[j] - z;
    const int layer =
        std::max(1, static_cast<int>(std::llround(d.cwiseAbs().maxCoeff() / width)));
    auto& bin = bins[layer];
    if (bin.count == 0) bin.min_distance = 1e300;
    bin.layer = layer;
    bin.count += 1;
    bin.min_distance = std::min(bin.min_distance, d.norm());
  }
  std::vector<LayerBin> out;
  out.reserve(bins.size());
  for (const auto& [_, b] : bins) out.push_back(b);
  return out;
}

namespace {

nlohmann::json k_to_json(const KField& k) {
  nlohmann::json j;
  j["holder_gamma"] = k.holder_gamma;
  if (k.kind == KField::Kind::constant) {
    j["type"] = "constant";
    j["value"] = k.value;
  } else {
    j["type"] = "linear";
    j["gradient"] = {k.gradient.x(), k.gradient.y(), k.gradient.z()};
    j["offset"] = k.offset;
  }
  return j;
}

KField k_from_json(const nlohmann::json& j) {
  KField k;
  const auto type = j.at("type").get<std::string>();
  if (type == "constant") {
    k = constant_k(j.at("value").get<double>());
  } else if (type == "linear") {
    const auto& g = j.at("gradient");
    k = linear_k(Vec3(g[0].get<double>(), g[1].get<double>(), g[2].get<double>()),
                 j.at("offset").get<double>());
  } else {
    throw std::invalid_argument("unknown K spec type: " + type);
  }
  k.holder_gamma = j.value("holder_gamma", 1.0);
  return k;
}

}  // namespace

nlohmann::json k_spec_to_json(const KField& k) { return k_to_json(k); }
KField k_spec_from_json(const nlohmann::json& j) { return k_from_json(j); }

void save_configuration(const ScattererConfiguration& config, const KField& k,
                        const std::filesystem::path& path, const nlohmann::json& extra) {
  nlohmann::json j = extra;
  j["a"] = config.a;
  j["t"] = config.t;
  j["seed"] = config.seed;
  j["d_actual"] = config.d_actual;
  j["d_guarantee"] = config.d_guarantee;
  j["s"] = config.s_exponent;
  j["m_max"] = config.m_max_const;
  j["alpha"] = config.alpha_dist;
  j["k"] = k_to_json(k);
  auto& pos = j["positions"];
  pos = nlohmann::json::array();
  for (const auto& p : config.positions) pos.push_back({p.x(), p.y(), p.z()});
  std::ofstream(path) << j.dump(2) << "\n";
}

std::pair<ScattererConfiguration, KField> load_configuration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open configuration: " + path.string());
  nlohmann::json j;
  in >> j;
  ScattererConfiguration c;
  c.a = j.at("a").get<double>();
  c.t = j.at("t").get<double>();
  c.seed = j.at("seed").get<uint64_t>();
  c.d_actual = j.at("d_actual").get<double>();
  c.d_guarantee = j.value("d_guarantee", 0.0);
  c.s_exponent = j.value("s", 1.0);
  c.m_max_const = j.value("m_max", 0.0);
  c.alpha_dist = j.value("alpha", 0.0);
  for (const auto& p : j.at("positions"))
    c.positions.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
  return {c, k_from_json(j.at("k"))};
}

}  // namespace elastscat
