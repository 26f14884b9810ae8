#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "slimbench/dataset_io.hpp"
#include "slimbench/geometry.hpp"

namespace slimbench::sampler {

// EqualWidth: shells of equal radial width over [0, d_max].
// EqualCount: quantile bins holding (nearly) equal member counts.
enum class BinMode { EqualWidth, EqualCount };

struct MemberDistance {
  std::string id;
  double distance = 0.0;
};

struct IntervalPartition {
  int cluster_id = 0;
  std::vector<double> edges;                        // n_intervals + 1 ascending values, edges[0] == 0
  std::vector<std::vector<std::string>> members;    // per bin, input order
  std::vector<std::vector<std::string>> selected;   // per bin, sorted by id; filled by compress()
};

struct SamplerOptions {
  int n_intervals = 5;
  BinMode mode = BinMode::EqualWidth;
};

struct CompressionPlan {
  double retention_target = 0.0;
  std::vector<IntervalPartition> per_cluster;  // ascending cluster id
  std::vector<std::string> selected_ids;       // dataset order
  double achieved_retention = 0.0;
  std::uint64_t seed = 0;
  int n_intervals = 5;
  BinMode mode = BinMode::EqualWidth;
};

struct Compression {
  CompressionPlan plan;
  io::CompressedSet set;
};

// Width used for the outer edge of a cluster whose members all sit on the centroid.
inline constexpr double kZeroWidthEdge = 1e-12;

IntervalPartition stratify(std::span<const MemberDistance> members, int n_intervals = 5,
                           BinMode mode = BinMode::EqualWidth, int cluster_id = 0);

// Bin index for a distance under `edges`: [edges[k], edges[k+1]), last bin closed.
std::size_t bin_of(std::span<const double> edges, double distance);

// max(1, ceil(rate * size)) for a non-empty bin, capped at size; 0 for an empty one.
std::size_t selection_count(std::size_t bin_size, double rate);

// Uniform selection without replacement from one bin, seeded by (seed, cluster, bin).
// Result is sorted by id.
std::vector<std::string> sample_bin(std::span<const std::string> bin_ids, double rate, std::uint64_t seed,
                                    int bin_index, int cluster_id);

Compression compress(const io::Dataset& dataset, const EmbeddingMatrix& matrix, const geometry::ClusterModel& model,
                     double retention, std::uint64_t seed, const SamplerOptions& options = {},
                     const std::string& provenance = {});

const char* to_string(BinMode mode) noexcept;
BinMode bin_mode_from_string(const std::string& name);

}  // namespace slimbench::sampler
