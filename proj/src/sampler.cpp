#include "slimbench/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "slimbench/error.hpp"
#include "slimbench/hash.hpp"
#include "slimbench/random.hpp"

namespace slimbench::sampler {

std::size_t bin_of(std::span<const double> edges, double distance) {
  const std::size_t n = edges.size() - 1;
  const double top = edges.back();
  std::size_t idx = top > 0.0 ? static_cast<std::size_t>(std::clamp(distance / top * static_cast<double>(n), 0.0,
                                                                     static_cast<double>(n - 1)))
                              : 0;
  // Settle against the stored edges so callers that recount agree exactly.
  while (idx > 0 && distance < edges[idx]) --idx;
  while (idx + 1 < n && distance >= edges[idx + 1]) ++idx;
  return idx;
}

IntervalPartition stratify(std::span<const MemberDistance> members, int n_intervals, BinMode mode, int cluster_id) {
  if (n_intervals < 1) fail_validation("n_intervals must be >= 1, got " + std::to_string(n_intervals));
  if (members.empty()) fail_validation("cannot stratify an empty cluster");
  const auto n = static_cast<std::size_t>(n_intervals);
  double d_max = 0.0;
  for (const auto& m : members) {
    if (!(m.distance >= 0.0) || !std::isfinite(m.distance)) {
      fail_validation("invalid centroid distance for id '" + m.id + "'");
    }
    d_max = std::max(d_max, m.distance);
  }

  IntervalPartition part;
  part.cluster_id = cluster_id;
  part.members.resize(n);
  part.selected.resize(n);
  part.edges.resize(n + 1);
  const double top = d_max > 0.0 ? d_max : kZeroWidthEdge;

  if (mode == BinMode::EqualWidth) {
    for (std::size_t k = 0; k < n; ++k) part.edges[k] = top * static_cast<double>(k) / static_cast<double>(n);
    part.edges[n] = top;
    for (const auto& m : members) part.members[bin_of(part.edges, m.distance)].push_back(m.id);
    return part;
  }

  std::vector<std::size_t> order(members.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return members[a].distance < members[b].distance;
  });
  const std::size_t total = members.size();
  std::vector<std::size_t> bin_for(total);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t lo = k * total / n;
    const std::size_t hi = (k + 1) * total / n;
    part.edges[k] = k == 0 ? 0.0 : members[order[std::min(lo, total - 1)]].distance;
    for (std::size_t r = lo; r < hi; ++r) bin_for[order[r]] = k;
  }
  part.edges[n] = top;
  for (std::size_t i = 0; i < total; ++i) part.members[bin_for[i]].push_back(members[i].id);
  return part;
}

std::size_t selection_count(std::size_t bin_size, double rate) {
  if (!(rate > 0.0 && rate <= 1.0)) fail_validation("sampling rate must be in (0, 1]");
  if (bin_size == 0) return 0;
  // The slack absorbs products like 0.1 * 20 landing a hair above an integer.
  const double want = std::ceil(rate * static_cast<double>(bin_size) - 1e-9);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(want, 1.0)), 1, bin_size);
}

std::vector<std::string> sample_bin(std::span<const std::string> bin_ids, double rate, std::uint64_t seed,
                                    int bin_index, int cluster_id) {
  const std::size_t count = selection_count(bin_ids.size(), rate);
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(cluster_id), static_cast<std::uint64_t>(bin_index)));
  std::vector<std::string> out;
  out.reserve(count);
  for (std::size_t i : sample_without_replacement(rng, bin_ids.size(), count)) out.push_back(bin_ids[i]);
  std::sort(out.begin(), out.end());
  return out;
}

Compression compress(const io::Dataset& dataset, const EmbeddingMatrix& matrix, const geometry::ClusterModel& model,
                     double retention, std::uint64_t seed, const SamplerOptions& options,
                     const std::string& provenance) {
  if (!(retention > 0.0 && retention <= 1.0)) {
    fail_validation("retention must be in (0, 1], got " + std::to_string(retention));
  }
  if (dataset.size() != matrix.rows()) fail_validation("dataset and embedding matrix differ in size");
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset[i].id != matrix.ids()[i]) fail_validation("dataset and embedding matrix are not aligned");
  }
  const auto distances = geometry::centroid_distances(matrix, model);

  std::vector<std::vector<MemberDistance>> clusters(static_cast<std::size_t>(model.k));
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    clusters[static_cast<std::size_t>(model.assignments[i])].push_back({matrix.ids()[i], distances[i]});
  }

  Compression result;
  auto& plan = result.plan;
  plan.retention_target = retention;
  plan.seed = seed;
  plan.n_intervals = options.n_intervals;
  plan.mode = options.mode;
  for (int c = 0; c < model.k; ++c) {
    const auto& members = clusters[static_cast<std::size_t>(c)];
    if (members.empty()) continue;
    auto part = stratify(members, options.n_intervals, options.mode, c);
    for (std::size_t b = 0; b < part.members.size(); ++b) {
      part.selected[b] = sample_bin(part.members[b], retention, seed, static_cast<int>(b), c);
      plan.selected_ids.insert(plan.selected_ids.end(), part.selected[b].begin(), part.selected[b].end());
    }
    plan.per_cluster.push_back(std::move(part));
  }
  std::sort(plan.selected_ids.begin(), plan.selected_ids.end(), [&](const std::string& a, const std::string& b) {
    return *dataset.index_of(a) < *dataset.index_of(b);
  });
  plan.achieved_retention = static_cast<double>(plan.selected_ids.size()) / static_cast<double>(dataset.size());

  result.set.source_dataset_id = dataset.fingerprint();
  result.set.selected_ids = plan.selected_ids;
  result.set.retention_rate = plan.achieved_retention;
  result.set.provenance = provenance;
  return result;
}

const char* to_string(BinMode mode) noexcept { return mode == BinMode::EqualWidth ? "equal_width" : "equal_count"; }

BinMode bin_mode_from_string(const std::string& name) {
  if (name == "equal_width") return BinMode::EqualWidth;
  if (name == "equal_count") return BinMode::EqualCount;
  fail_validation("unknown bin mode '" + name + "' (expected equal_width or equal_count)");
}

}  // namespace slimbench::sampler
