#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>

#include "elastscat/capacitance.hpp"
#include "elastscat/types.hpp"

namespace elastscat {

/// Local-count density K >= 0 over the domain; a cell centered at z targets
/// floor(K(z)+1) scatterers.
struct KField {
  enum class Kind { constant, linear };
  Kind kind = Kind::constant;
  double value = 0.0;    // constant
  Vec3 gradient = Vec3::Zero();  // linear: K(z) = offset + gradient . z
  double offset = 0.0;
  double holder_gamma = 1.0;  // Holder exponent of K (1 for both kinds)

  double operator()(const Vec3& z) const;
};

KField constant_k(double value);
KField linear_k(const Vec3& gradient, double offset);

struct Box {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Ones();
  double volume() const { return (hi - lo).prod(); }
};

/// sup of K+1 over the box (exact for the supported kinds); also validates
/// K >= 0 on the box.
double k_max_over(const KField& k, const Box& box);

struct PartitionCell {
  Vec3 center;
  Vec3 edges;        // cell edge lengths; volume = a [K+1]/(K+1) at the center
  int target_count;  // floor(K(center) + 1)
};

struct CubePartition {
  Box domain;
  std::vector<PartitionCell> cells;
  double a = 0.0;
  KField k;
  double uncovered_volume = 0.0;
  int total_targets() const;
};

/// Greedy axis-ordered subdivision of the (unit-volume) domain into cells of
/// volume a*floor(K+1)/(K+1), centers recorded. Slivers that cannot hold a
/// full cell are left uncovered (O(a^(1/3)) boundary slack).
CubePartition partition_domain(const Box& omega, double a, const KField& k, double a0 = 0.1);

void validate_partition(const CubePartition& p, double tol = 1e-12);

/// Bodies of common diameter a placed in the partition cells, with attached
/// per-unit-diameter capacitances (usually one shared value).
struct ScattererConfiguration {
  std::vector<Vec3> positions;
  double a = 0.0;
  double t = 1.0 / 3.0;
  double d_actual = 0.0;      // measured min pairwise distance
  double d_guarantee = 0.0;   // construction-time lower bound d_min * a^t
  double s_exponent = 1.0;    // M = O(a^-s)
  double m_max_const = 0.0;   // M * a^s
  double alpha_dist = 0.0;    // (t - 1/4)/t when t in [1/3, 7/12], else 0
  uint64_t seed = 0;

  std::vector<CapacitanceMatrix> capacitances;  // unique values
  std::vector<int> cap_index;                   // per body; empty = all 0

  int body_count() const { return static_cast<int>(positions.size()); }
  const CapacitanceMatrix& capacitance_of(int m) const;
};

struct PlacementOptions {
  double d_min = 0.5;        // spacing guarantee coefficient: d >= d_min * a^t
  double jitter = 0.0;       // fraction of the free slack used for jitter
  double count_scale = 1.0;  // thins targets for M = O(a^-s) regimes
  double s_exponent = 1.0;
};

/// Deterministic jittered sub-lattice placement: pairwise (and cross-cell)
/// distances >= d_min * a^t by construction, bit-identical for a fixed seed.
/// Throws InfeasibleError naming the violated packing bound when the cell
/// sub-lattice cannot honor the spacing.
ScattererConfiguration place_scatterers(const CubePartition& partition, double a, double t,
                                        uint64_t seed, const PlacementOptions& opt = {});

void attach_capacitance(ScattererConfiguration& config, const CapacitanceMatrix& c);

/// Exhaustive O(M^2) scan below the size threshold, spatial hash above.
double min_pairwise_distance(const std::vector<Vec3>& pts, std::size_t exhaustive_limit = 5000);
double min_pairwise_distance_exhaustive(const std::vector<Vec3>& pts);

struct LayerBin {
  int layer = 0;
  int count = 0;
  double min_distance = 0.0;
};

/// Bins bodies j != m by cube-layer index around z_m: layer = round of the
/// Chebyshev distance over the reference width (default: mean volume per
/// body, cbrt(vol/M)).
std::vector<LayerBin> layer_census(const ScattererConfiguration& config, int m,
                                   double layer_width = 0.0);

/// K spec serialization used by the configuration files and the CLI.
nlohmann::json k_spec_to_json(const KField& k);
KField k_spec_from_json(const nlohmann::json& j);

// JSON round trip: {a, t, seed, positions, d_actual, k, ...}; extra fields
// (e.g. config hash, artifact version) ride along and are ignored on load.
void save_configuration(const ScattererConfiguration& config, const KField& k,
                        const std::filesystem::path& path,
                        const nlohmann::json& extra = nlohmann::json::object());
std::pair<ScattererConfiguration, KField> load_configuration(const std::filesystem::path& path);

}  // namespace elastscat
