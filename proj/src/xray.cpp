#include "slimbench/xray.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "slimbench/error.hpp"
#include "slimbench/hash.hpp"
#include "slimbench/random.hpp"
#include "slimbench/sampler.hpp"

namespace slimbench::xray {

void XRayThresholds::validate() const {
  if (!(core_distance > 0.0 && core_distance < sparse_distance)) {
    fail_validation("xray thresholds: need 0 < core_distance < sparse_distance");
  }
  if (!(retention_aggressive > 0.0 && retention_aggressive <= retention_conservative_min &&
        retention_conservative_min <= retention_conservative_max && retention_conservative_max <= 1.0)) {
    fail_validation(
        "xray thresholds: need 0 < retention_aggressive <= retention_conservative_min <= "
        "retention_conservative_max <= 1");
  }
  if (!(silhouette_floor < silhouette_aggressive)) {
    fail_validation("xray thresholds: need silhouette_floor < silhouette_aggressive");
  }
}

DistanceFractions distance_fractions(std::span<const double> distances, const XRayThresholds& t) {
  if (distances.empty()) fail_validation("no distances to classify");
  std::size_t core = 0;
  std::size_t sparse = 0;
  for (double d : distances) {
    if (d <= t.core_distance) {
      ++core;
    } else if (d > t.sparse_distance) {
      ++sparse;
    }
  }
  const auto n = static_cast<double>(distances.size());
  const std::size_t middle = distances.size() - core - sparse;
  return {static_cast<double>(core) / n, static_cast<double>(middle) / n, static_cast<double>(sparse) / n};
}

double recommend_retention(double s, const XRayThresholds& t) {
  if (!(s >= -1.0 && s <= 1.0)) fail_validation("silhouette out of range [-1, 1]: " + std::to_string(s));
  t.validate();
  if (s >= t.silhouette_aggressive) return t.retention_aggressive;
  if (s <= t.silhouette_floor) return t.retention_conservative_max;
  const double frac = (t.silhouette_aggressive - s) / (t.silhouette_aggressive - t.silhouette_floor);
  return t.retention_conservative_min + frac * (t.retention_conservative_max - t.retention_conservative_min);
}

Verdict classify(double s, const XRayThresholds& t) {
  if (s >= t.silhouette_aggressive) return Verdict::HighRedundancy;
  if (s <= t.silhouette_floor) return Verdict::LowRedundancy;
  return Verdict::ModerateRedundancy;
}

XRayReport run_xray(const EmbeddingMatrix& matrix, const geometry::ClusterModel& model, const XRayThresholds& t,
                    std::uint64_t seed, std::optional<std::size_t> silhouette_subsample) {
  t.validate();
  const auto distances = geometry::centroid_distances(matrix, model);
  const std::size_t m = matrix.rows();

  std::optional<std::size_t> subsample;
  if (silhouette_subsample) {
    if (*silhouette_subsample > 0) subsample = silhouette_subsample;
  } else if (m > geometry::kDefaultSilhouetteSubsample) {
    subsample = geometry::kDefaultSilhouetteSubsample;
  }

  XRayReport report;
  report.n_samples = m;
  report.k = model.k;
  report.silhouette_mean = geometry::silhouette_mean(matrix, model.assignments, subsample, seed);
  report.silhouette_evaluated = subsample ? std::min(*subsample, m) : m;

  const auto fractions = distance_fractions(distances, t);
  report.core_fraction = fractions.core;
  report.middle_fraction = fractions.middle;
  report.sparse_fraction = fractions.sparse;

  std::vector<std::vector<double>> by_cluster(static_cast<std::size_t>(model.k));
  for (std::size_t i = 0; i < m; ++i) by_cluster[static_cast<std::size_t>(model.assignments[i])].push_back(distances[i]);
  for (int c = 0; c < model.k; ++c) {
    const auto& ds = by_cluster[static_cast<std::size_t>(c)];
    if (ds.empty()) continue;
    ClusterStats stats;
    stats.cluster_id = c;
    stats.size = ds.size();
    double sum = 0.0;
    for (double d : ds) {
      sum += d;
      stats.max_distance = std::max(stats.max_distance, d);
    }
    stats.mean_distance = sum / static_cast<double>(ds.size());
    std::vector<sampler::MemberDistance> members;
    members.reserve(ds.size());
    for (double d : ds) members.push_back({std::string{}, d});
    const auto part = sampler::stratify(members, kHistogramBins, sampler::BinMode::EqualWidth, c);
    for (std::size_t b = 0; b < part.members.size(); ++b) stats.histogram[b] = part.members[b].size();
    report.per_cluster.push_back(stats);
  }

  report.recommended_retention = recommend_retention(std::clamp(report.silhouette_mean, -1.0, 1.0), t);
  report.verdict = classify(report.silhouette_mean, t);
  return report;
}

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr std::size_t kExactDims = 256;
constexpr int kOversample = 10;
constexpr int kMaxPowerIterations = 300;
constexpr double kRitzTolerance = 1e-12;
constexpr double kRankTolerance = 1e-12;

// Returns the top-two (loading, variance) pairs of the centered data, largest first.
std::pair<Eigen::MatrixXd, Eigen::Vector2d> exact_components(const RowMatrix& centered) {
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(centered.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  const auto d = cov.rows();
  Eigen::MatrixXd vecs(d, 2);
  Eigen::Vector2d vals;
  for (int c = 0; c < 2; ++c) {
    const auto idx = d - 1 - c;
    vecs.col(c) = idx >= 0 ? Eigen::VectorXd(solver.eigenvectors().col(idx)) : Eigen::VectorXd::Zero(d);
    vals(c) = idx >= 0 ? std::max(0.0, solver.eigenvalues()(idx)) : 0.0;
  }
  return {vecs, vals};
}

std::pair<Eigen::MatrixXd, Eigen::Vector2d> randomized_components(const RowMatrix& centered, std::uint64_t seed) {
  const auto d = centered.cols();
  const auto width = std::min<Eigen::Index>(d, 2 + kOversample);
  Rng rng(derive_seed(seed, 0x9ca));
  Eigen::MatrixXd omega(d, width);
  for (Eigen::Index j = 0; j < width; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) omega(i, j) = 2.0 * uniform01(rng) - 1.0;
  }
  auto orthonormal = [](const Eigen::MatrixXd& y) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
    return Eigen::MatrixXd(qr.householderQ() * Eigen::MatrixXd::Identity(y.rows(), y.cols()));
  };
  // Subspace iteration until the top-two Ritz values settle.
  Eigen::MatrixXd q = orthonormal(centered * omega);
  Eigen::Vector2d previous = Eigen::Vector2d::Zero();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd;
  for (int it = 0;; ++it) {
    svd.compute(q.transpose() * centered, Eigen::ComputeThinV);
    const Eigen::Vector2d ritz = svd.singularValues().head<2>();
    const bool settled = (ritz - previous).cwiseAbs().maxCoeff() <= kRitzTolerance * std::max(ritz(0), 1e-300);
    if (settled || it == kMaxPowerIterations) break;
    previous = ritz;
    q = orthonormal(centered * orthonormal(centered.transpose() * q));
  }
  Eigen::MatrixXd vecs(d, 2);
  Eigen::Vector2d vals;
  for (int c = 0; c < 2; ++c) {
    vecs.col(c) = svd.matrixV().col(c);
    const double sigma = svd.singularValues()(c);
    vals(c) = sigma * sigma / static_cast<double>(centered.rows());
  }
  return {vecs, vals};
}

}  // namespace

Projection project_2d(const EmbeddingMatrix& matrix, std::uint64_t seed) {
  const auto m = static_cast<Eigen::Index>(matrix.rows());
  const auto d = static_cast<Eigen::Index>(matrix.dims());
  if (d < 2) fail_validation("projection needs d >= 2");
  if (m < 1) fail_validation("projection needs at least one row");

  RowMatrix centered = Eigen::Map<const RowMatrix>(matrix.data().data(), m, d);
  const Eigen::RowVectorXd mean = centered.colwise().mean();
  centered.rowwise() -= mean;

  auto [vecs, vals] = matrix.dims() <= kExactDims ? exact_components(centered) : randomized_components(centered, seed);

  Projection out;
  const double scale = std::max(vals(0), 0.0);
  const bool empty_first = !(scale > 0.0);
  out.degenerate = empty_first || vals(1) <= kRankTolerance * scale;
  for (int c = 0; c < 2; ++c) {
    Eigen::VectorXd v = vecs.col(c);
    const bool zero = (c == 0 && empty_first) || (c == 1 && out.degenerate);
    if (zero) {
      v.setZero();
    } else {
      Eigen::Index arg = 0;
      v.cwiseAbs().maxCoeff(&arg);
      if (v(arg) < 0) v = -v;
    }
    out.loadings[static_cast<std::size_t>(c)].assign(v.data(), v.data() + d);
    out.variance[static_cast<std::size_t>(c)] = zero ? 0.0 : vals(c);
    vecs.col(c) = v;
  }
  const Eigen::MatrixXd scores = centered * vecs;
  out.coords.resize(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) out.coords[static_cast<std::size_t>(i)] = {scores(i, 0), scores(i, 1)};
  return out;
}

const char* to_string(Verdict verdict) noexcept {
  switch (verdict) {
    case Verdict::HighRedundancy: return "HighRedundancy";
    case Verdict::ModerateRedundancy: return "ModerateRedundancy";
    case Verdict::LowRedundancy: return "LowRedundancy";
  }
  return "LowRedundancy";
}

Verdict verdict_from_string(const std::string& name) {
  if (name == "HighRedundancy") return Verdict::HighRedundancy;
  if (name == "ModerateRedundancy") return Verdict::ModerateRedundancy;
  if (name == "LowRedundancy") return Verdict::LowRedundancy;
  fail_validation("unknown verdict '" + name + "'");
}

}  // namespace slimbench::xray
