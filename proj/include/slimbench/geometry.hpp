#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "slimbench/matrix.hpp"

namespace slimbench::geometry {

struct KMeansOptions {
  int k = 100;
  std::uint64_t seed = 0;
  int max_iter = 300;
  double tol = 1e-4;  // max centroid displacement between iterations
  int n_init = 10;    // independent seedings; the lowest-inertia run wins
};

struct ClusterModel {
  int k = 0;
  std::size_t dims = 0;
  std::vector<double> centroids;  // k x dims, row-major
  std::vector<int> assignments;   // one per matrix row
  double inertia = 0.0;
  int iterations_run = 0;
  std::uint64_t seed = 0;
  std::vector<double> inertia_trace;  // inertia after each assignment pass

  std::span<const double> centroid(int c) const noexcept {
    return {centroids.data() + static_cast<std::size_t>(c) * dims, dims};
  }
};

// Scales every row to unit L2 norm. Throws ValidationError naming the first zero row.
[[nodiscard]] EmbeddingMatrix l2_normalize(const EmbeddingMatrix& matrix);

// Lloyd iterations from k-means++ seeding, best of n_init runs. Empty clusters
// take over the point farthest from its centroid. Centroids stay in the
// ambient space.
ClusterModel kmeans(const EmbeddingMatrix& matrix, const KMeansOptions& options);

// Sum of squared distances from each row to its assigned centroid.
double recompute_inertia(const EmbeddingMatrix& matrix, const ClusterModel& model);

// Throws ValidationError if the model cannot describe this matrix.
void check_model(const EmbeddingMatrix& matrix, const ClusterModel& model);

// Euclidean distance of each row to its assigned centroid.
std::vector<double> centroid_distances(const EmbeddingMatrix& matrix, const ClusterModel& model);

inline constexpr std::size_t kDefaultSilhouetteSubsample = 2000;

// Mean silhouette. With `subsample`, s(i) is evaluated on a seeded uniform
// subset of rows, each against all rows. Singleton clusters score 0.
// Throws ValidationError when fewer than two clusters are populated.
double silhouette_mean(const EmbeddingMatrix& matrix, std::span<const int> assignments,
                       std::optional<std::size_t> subsample = std::nullopt, std::uint64_t seed = 0);

// Per-row silhouette values for the given rows.
std::vector<double> silhouette_values(const EmbeddingMatrix& matrix, std::span<const int> assignments,
                                      std::span<const std::size_t> rows);

}  // namespace slimbench::geometry
