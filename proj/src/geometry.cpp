#include "slimbench/geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "slimbench/error.hpp"
#include "slimbench/hash.hpp"
#include "slimbench/kernels.hpp"
#include "slimbench/random.hpp"

namespace slimbench::geometry {
namespace {

constexpr std::uint64_t kSilhouetteStream = 0x51;
constexpr std::uint64_t kKMeansStream = 0x4b;
constexpr int kMaxHartiganSweeps = 100;
constexpr double kHartiganMargin = 1e-12;

struct Assignment {
  std::vector<int> labels;
  std::vector<double> sq_dist;
  std::vector<std::size_t> counts;
};

constexpr std::size_t kAssignBlock = 512;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Nearest centroid per row. Candidates are ranked with |c|^2 - 2 x.c from a
// blocked matrix product; the winner's squared distance is recomputed exactly.
void assign_nearest(const EmbeddingMatrix& x, const std::vector<double>& centroids, int k, Assignment& out) {
  const auto& kern = kernels::active();
  const std::size_t d = x.dims();
  const auto kk = static_cast<Eigen::Index>(k);
  const auto dd = static_cast<Eigen::Index>(d);
  Eigen::Map<const RowMatrix> c(centroids.data(), kk, dd);
  const Eigen::VectorXd c_norms = c.rowwise().squaredNorm();
  Eigen::MatrixXd dots;
  for (std::size_t start = 0; start < x.rows(); start += kAssignBlock) {
    const std::size_t rows = std::min(kAssignBlock, x.rows() - start);
    Eigen::Map<const RowMatrix> block(x.row(start).data(), static_cast<Eigen::Index>(rows), dd);
    dots.noalias() = block * c.transpose();
    for (std::size_t r = 0; r < rows; ++r) {
      int best = 0;
      double best_score = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < kk; ++j) {
        const double score = c_norms(j) - 2.0 * dots(static_cast<Eigen::Index>(r), j);
        if (score < best_score) {
          best_score = score;
          best = static_cast<int>(j);
        }
      }
      const std::size_t i = start + r;
      out.labels[i] = best;
      out.sq_dist[i] = kern.squared_distance(x.row(i).data(), centroids.data() + static_cast<std::size_t>(best) * d, d);
    }
  }
  std::fill(out.counts.begin(), out.counts.end(), 0);
  for (int label : out.labels) ++out.counts[static_cast<std::size_t>(label)];
}

// Each empty cluster takes the row farthest from its centroid among clusters
// that can spare a member. Ties go to the lowest row index.
void repair_empty(const EmbeddingMatrix& x, std::vector<double>& centroids, int k, Assignment& a) {
  const std::size_t d = x.dims();
  for (int c = 0; c < k; ++c) {
    if (a.counts[static_cast<std::size_t>(c)] != 0) continue;
    std::size_t pick = x.rows();
    double pick_d = -1.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      if (a.counts[static_cast<std::size_t>(a.labels[i])] > 1 && a.sq_dist[i] > pick_d) {
        pick_d = a.sq_dist[i];
        pick = i;
      }
    }
    if (pick == x.rows()) fail_validation("kmeans: cannot repair empty cluster (K exceeds M)");
    --a.counts[static_cast<std::size_t>(a.labels[pick])];
    a.labels[pick] = c;
    a.counts[static_cast<std::size_t>(c)] = 1;
    a.sq_dist[pick] = 0.0;
    const auto row = x.row(pick);
    std::copy(row.begin(), row.end(), centroids.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(c) * d));
  }
}

void recompute_means(const EmbeddingMatrix& x, const Assignment& a, int k, std::vector<double>& centroids) {
  const auto& kern = kernels::active();
  const std::size_t d = x.dims();
  std::fill(centroids.begin(), centroids.end(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    kern.accumulate(centroids.data() + static_cast<std::size_t>(a.labels[i]) * d, x.row(i).data(), d);
  }
  for (int c = 0; c < k; ++c) {
    kern.scale(centroids.data() + static_cast<std::size_t>(c) * d, 1.0 / static_cast<double>(a.counts[static_cast<std::size_t>(c)]), d);
  }
}

// Single-point transfers (Hartigan's rule) from a Lloyd fixed point: move a row
// whenever that lowers the total within-cluster sum of squares.
void hartigan_refine(const EmbeddingMatrix& x, std::vector<double>& centroids, int k, Assignment& a) {
  const auto& kern = kernels::active();
  const std::size_t d = x.dims();
  recompute_means(x, a, k, centroids);
  for (int sweep = 0; sweep < kMaxHartiganSweeps; ++sweep) {
    bool moved = false;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const double* row = x.row(i).data();
      const auto from = static_cast<std::size_t>(a.labels[i]);
      const double n_from = static_cast<double>(a.counts[from]);
      if (n_from <= 1.0) continue;
      const double removal = n_from / (n_from - 1.0) * kern.squared_distance(row, centroids.data() + from * d, d);
      std::size_t to = from;
      double best = removal * (1.0 - kHartiganMargin);
      for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
        if (c == from) continue;
        const double n_to = static_cast<double>(a.counts[c]);
        const double addition = n_to / (n_to + 1.0) * kern.squared_distance(row, centroids.data() + c * d, d);
        if (addition < best) {
          best = addition;
          to = c;
        }
      }
      if (to == from) continue;
      double* cf = centroids.data() + from * d;
      double* ct = centroids.data() + to * d;
      const double n_to = static_cast<double>(a.counts[to]);
      for (std::size_t j = 0; j < d; ++j) {
        cf[j] = (n_from * cf[j] - row[j]) / (n_from - 1.0);
        ct[j] = (n_to * ct[j] + row[j]) / (n_to + 1.0);
      }
      --a.counts[from];
      ++a.counts[to];
      a.labels[i] = static_cast<int>(to);
      moved = true;
    }
    if (!moved) break;
  }
  recompute_means(x, a, k, centroids);
}

double sum_in_order(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

// Greedy k-means++: each new center is the best of a few D^2-weighted
// candidates, judged by the resulting potential.
std::vector<double> seed_plus_plus(const EmbeddingMatrix& x, int k, Rng& rng) {
  const auto& kern = kernels::active();
  const std::size_t m = x.rows();
  const std::size_t d = x.dims();
  const int trials = 2 + static_cast<int>(std::log(static_cast<double>(k)));
  std::vector<double> centroids;
  centroids.reserve(static_cast<std::size_t>(k) * d);
  std::vector<bool> chosen(m, false);

  auto add_center = [&](std::size_t i) {
    const auto row = x.row(i);
    centroids.insert(centroids.end(), row.begin(), row.end());
    chosen[i] = true;
  };

  std::size_t first = uniform_index(rng, m);
  add_center(first);
  std::vector<double> closest(m);
  for (std::size_t i = 0; i < m; ++i) closest[i] = kern.squared_distance(x.row(i).data(), x.row(first).data(), d);

  std::vector<double> candidate_closest(m);
  std::vector<double> best_closest(m);
  for (int c = 1; c < k; ++c) {
    const double potential = sum_in_order(closest);
    if (!(potential > 0.0)) {
      // Every remaining point coincides with a center; take an unused row.
      std::vector<std::size_t> unused;
      for (std::size_t i = 0; i < m; ++i) {
        if (!chosen[i]) unused.push_back(i);
      }
      add_center(unused[uniform_index(rng, unused.size())]);
      continue;
    }
    std::size_t best = m;
    double best_potential = std::numeric_limits<double>::infinity();
    for (int t = 0; t < trials; ++t) {
      const double target = uniform01(rng) * potential;
      double cumulative = 0.0;
      std::size_t pick = m;
      std::size_t last_positive = m;
      for (std::size_t i = 0; i < m; ++i) {
        if (closest[i] <= 0.0) continue;
        last_positive = i;
        cumulative += closest[i];
        if (cumulative > target) {
          pick = i;
          break;
        }
      }
      if (pick == m) pick = last_positive;
      double cand_potential = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        candidate_closest[i] = std::min(closest[i], kern.squared_distance(x.row(i).data(), x.row(pick).data(), d));
        cand_potential += candidate_closest[i];
      }
      if (cand_potential < best_potential) {
        best_potential = cand_potential;
        best = pick;
        best_closest.swap(candidate_closest);
      }
    }
    add_center(best);
    closest.swap(best_closest);
  }
  return centroids;
}

ClusterModel lloyd(const EmbeddingMatrix& matrix, const KMeansOptions& options, std::uint64_t run) {
  const std::size_t m = matrix.rows();
  const std::size_t d = matrix.dims();
  const int k = options.k;
  const auto& kern = kernels::active();
  Rng rng(derive_seed(options.seed, kKMeansStream, run));
  std::vector<double> centroids = seed_plus_plus(matrix, k, rng);

  ClusterModel model;
  model.k = k;
  model.dims = d;
  model.seed = options.seed;

  Assignment a{std::vector<int>(m), std::vector<double>(m), std::vector<std::size_t>(static_cast<std::size_t>(k))};
  std::vector<double> next(centroids.size());
  for (int iter = 0; iter < options.max_iter; ++iter) {
    assign_nearest(matrix, centroids, k, a);
    repair_empty(matrix, centroids, k, a);
    model.inertia_trace.push_back(sum_in_order(a.sq_dist));

    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      kern.accumulate(next.data() + static_cast<std::size_t>(a.labels[i]) * d, matrix.row(i).data(), d);
    }
    double shift = 0.0;
    for (int c = 0; c < k; ++c) {
      double* nc = next.data() + static_cast<std::size_t>(c) * d;
      kern.scale(nc, 1.0 / static_cast<double>(a.counts[static_cast<std::size_t>(c)]), d);
      shift = std::max(shift, std::sqrt(kern.squared_distance(nc, centroids.data() + static_cast<std::size_t>(c) * d, d)));
    }
    centroids.swap(next);
    model.iterations_run = iter + 1;
    if (shift < options.tol) break;
  }

  assign_nearest(matrix, centroids, k, a);
  repair_empty(matrix, centroids, k, a);
  hartigan_refine(matrix, centroids, k, a);

  // Final pass so assignments and inertia describe the returned centroids.
  assign_nearest(matrix, centroids, k, a);
  repair_empty(matrix, centroids, k, a);
  model.inertia = sum_in_order(a.sq_dist);
  model.inertia_trace.push_back(model.inertia);
  model.centroids = std::move(centroids);
  model.assignments = std::move(a.labels);
  return model;
}

void check_labels(std::span<const int> labels, std::size_t rows) {
  if (labels.size() != rows) fail_validation("assignment count does not match matrix rows");
  for (int label : labels) {
    if (label < 0) fail_validation("negative cluster label");
  }
}

}  // namespace

EmbeddingMatrix l2_normalize(const EmbeddingMatrix& matrix) {
  const auto& kern = kernels::active();
  EmbeddingMatrix out = matrix;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto row = out.row(i);
    const double norm = std::sqrt(kern.dot(row.data(), row.data(), row.size()));
    if (!(norm > 0.0)) fail_validation("zero-norm embedding at row " + std::to_string(i) + " (id '" + out.ids()[i] + "')");
    if (norm != 1.0) kern.scale(row.data(), 1.0 / norm, row.size());
  }
  out.mark_normalized(true);
  return out;
}

ClusterModel kmeans(const EmbeddingMatrix& matrix, const KMeansOptions& options) {
  const std::size_t m = matrix.rows();
  const int k = options.k;
  if (k < 1) fail_validation("kmeans: K must be >= 1, got " + std::to_string(k));
  if (static_cast<std::size_t>(k) > m) {
    fail_validation("kmeans: K=" + std::to_string(k) + " exceeds sample count M=" + std::to_string(m));
  }
  if (options.max_iter < 1) fail_validation("kmeans: max_iter must be >= 1");
  if (!(options.tol >= 0.0)) fail_validation("kmeans: tol must be >= 0");
  if (options.n_init < 1) fail_validation("kmeans: n_init must be >= 1");

  std::optional<ClusterModel> best;
  for (int run = 0; run < options.n_init; ++run) {
    auto model = lloyd(matrix, options, static_cast<std::uint64_t>(run));
    if (!best || model.inertia < best->inertia) best = std::move(model);
  }
  return std::move(*best);
}

void check_model(const EmbeddingMatrix& matrix, const ClusterModel& model) {
  if (model.k < 1) fail_validation("cluster model has K < 1");
  if (model.dims != matrix.dims()) {
    fail_validation("cluster model has d=" + std::to_string(model.dims) + " but matrix has d=" +
                    std::to_string(matrix.dims()));
  }
  if (model.centroids.size() != static_cast<std::size_t>(model.k) * model.dims) {
    fail_validation("cluster model centroid table is the wrong size");
  }
  if (model.assignments.size() != matrix.rows()) {
    fail_validation("cluster model has " + std::to_string(model.assignments.size()) + " assignments but matrix has " +
                    std::to_string(matrix.rows()) + " rows");
  }
  for (int label : model.assignments) {
    if (label < 0 || label >= model.k) fail_validation("cluster model assignment out of range");
  }
}

double recompute_inertia(const EmbeddingMatrix& matrix, const ClusterModel& model) {
  check_model(matrix, model);
  const auto& kern = kernels::active();
  double total = 0.0;
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    total += kern.squared_distance(matrix.row(i).data(), model.centroid(model.assignments[i]).data(), matrix.dims());
  }
  return total;
}

std::vector<double> centroid_distances(const EmbeddingMatrix& matrix, const ClusterModel& model) {
  check_model(matrix, model);
  const auto& kern = kernels::active();
  std::vector<double> out(matrix.rows());
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    out[i] = std::sqrt(
        kern.squared_distance(matrix.row(i).data(), model.centroid(model.assignments[i]).data(), matrix.dims()));
  }
  return out;
}

std::vector<double> silhouette_values(const EmbeddingMatrix& matrix, std::span<const int> assignments,
                                      std::span<const std::size_t> rows) {
  check_labels(assignments, matrix.rows());
  const auto& kern = kernels::active();
  const std::size_t k = static_cast<std::size_t>(*std::max_element(assignments.begin(), assignments.end())) + 1;
  std::vector<std::size_t> counts(k, 0);
  for (int label : assignments) ++counts[static_cast<std::size_t>(label)];
  if (std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }) < 2) {
    fail_validation("silhouette is undefined for a single cluster");
  }

  std::vector<double> out;
  out.reserve(rows.size());
  std::vector<double> sums(k);
  const std::size_t d = matrix.dims();
  for (std::size_t i : rows) {
    const auto own = static_cast<std::size_t>(assignments[i]);
    if (counts[own] == 1) {
      out.push_back(0.0);
      continue;
    }
    std::fill(sums.begin(), sums.end(), 0.0);
    const double* xi = matrix.row(i).data();
    for (std::size_t j = 0; j < matrix.rows(); ++j) {
      if (j == i) continue;
      sums[static_cast<std::size_t>(assignments[j])] += std::sqrt(kern.squared_distance(xi, matrix.row(j).data(), d));
    }
    const double a = sums[own] / static_cast<double>(counts[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      if (c == own || counts[c] == 0) continue;
      b = std::min(b, sums[c] / static_cast<double>(counts[c]));
    }
    const double denom = std::max(a, b);
    out.push_back(denom > 0.0 ? (b - a) / denom : 0.0);
  }
  return out;
}

double silhouette_mean(const EmbeddingMatrix& matrix, std::span<const int> assignments,
                       std::optional<std::size_t> subsample, std::uint64_t seed) {
  check_labels(assignments, matrix.rows());
  const std::size_t m = matrix.rows();
  std::vector<std::size_t> rows;
  if (subsample && *subsample < m) {
    if (*subsample == 0) fail_validation("silhouette subsample must be >= 1");
    Rng rng(derive_seed(seed, kSilhouetteStream));
    rows = sample_without_replacement(rng, m, *subsample);
    std::sort(rows.begin(), rows.end());
  } else {
    rows.resize(m);
    for (std::size_t i = 0; i < m; ++i) rows[i] = i;
  }
  const auto values = silhouette_values(matrix, assignments, rows);
  return sum_in_order(values) / static_cast<double>(values.size());
}

}  // namespace slimbench::geometry
