#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slimbench/geometry.hpp"

namespace slimbench::xray {

struct XRayThresholds {
  double core_distance = 0.5;    // inclusive
  double sparse_distance = 1.2;  // strict
  double silhouette_aggressive = 0.5;
  double silhouette_floor = 0.25;
  double retention_aggressive = 0.10;
  double retention_conservative_min = 0.20;
  double retention_conservative_max = 0.30;

  // Throws ValidationError if the ordering constraints between fields fail.
  void validate() const;
};

enum class Verdict { HighRedundancy, ModerateRedundancy, LowRedundancy };

inline constexpr int kHistogramBins = 5;

struct ClusterStats {
  int cluster_id = 0;
  std::size_t size = 0;
  double mean_distance = 0.0;
  double max_distance = 0.0;
  std::array<std::size_t, kHistogramBins> histogram{};  // equal-width shells over [0, max_distance]
};

struct DistanceFractions {
  double core = 0.0;    // distance <= core_distance
  double middle = 0.0;  // core_distance < distance <= sparse_distance
  double sparse = 0.0;  // distance > sparse_distance
};

struct XRayReport {
  std::size_t n_samples = 0;
  int k = 0;
  double silhouette_mean = 0.0;
  std::size_t silhouette_evaluated = 0;
  double core_fraction = 0.0;
  double middle_fraction = 0.0;
  double sparse_fraction = 0.0;
  std::vector<ClusterStats> per_cluster;
  double recommended_retention = 0.0;
  Verdict verdict = Verdict::LowRedundancy;
};

DistanceFractions distance_fractions(std::span<const double> distances, const XRayThresholds& thresholds);

// Piecewise map: s >= silhouette_aggressive gives retention_aggressive;
// s <= silhouette_floor gives retention_conservative_max; linear from
// retention_conservative_min to retention_conservative_max in between.
double recommend_retention(double silhouette, const XRayThresholds& thresholds = {});

Verdict classify(double silhouette, const XRayThresholds& thresholds = {});

// Silhouette uses geometry::kDefaultSilhouetteSubsample rows when M exceeds it,
// unless `silhouette_subsample` says otherwise (0 means all rows).
XRayReport run_xray(const EmbeddingMatrix& matrix, const geometry::ClusterModel& model,
                    const XRayThresholds& thresholds, std::uint64_t seed,
                    std::optional<std::size_t> silhouette_subsample = std::nullopt);

struct Projection {
  std::vector<std::array<double, 2>> coords;  // one per row, centered PCA scores
  std::array<std::vector<double>, 2> loadings;
  std::array<double, 2> variance{};  // explained variance per component
  bool degenerate = false;           // rank < 2: second column is zero
};

// Top-two principal component scores. Each component's largest-magnitude
// loading is made positive. Exact eigendecomposition for small d, seeded
// randomized subspace iteration otherwise.
Projection project_2d(const EmbeddingMatrix& matrix, std::uint64_t seed = 0);

const char* to_string(Verdict verdict) noexcept;
Verdict verdict_from_string(const std::string& name);

}  // namespace slimbench::xray
