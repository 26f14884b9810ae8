#include "slimbench/xray.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

#include "slimbench/error.hpp"
#include "test_support.hpp"

namespace slimbench::xray {
namespace {

using testing::planted_blobs;

TEST(DistanceFractions, BoundaryCounting) {
  const std::vector<double> d{0.1, 0.4, 0.6, 1.3};
  const auto f = distance_fractions(d, {});
  EXPECT_EQ(f.core, 0.50);
  EXPECT_EQ(f.sparse, 0.25);
  EXPECT_EQ(f.middle, 0.25);
}

TEST(DistanceFractions, CoreInclusiveSparseStrict) {
  const std::vector<double> d{0.5, 1.2};
  const auto f = distance_fractions(d, {});
  EXPECT_EQ(f.core, 0.5);
  EXPECT_EQ(f.middle, 0.5);
  EXPECT_EQ(f.sparse, 0.0);
}

TEST(Recommend, MappingExamples) {
  EXPECT_DOUBLE_EQ(recommend_retention(0.67), 0.10);
  EXPECT_DOUBLE_EQ(recommend_retention(0.25), 0.30);
  EXPECT_NEAR(recommend_retention(0.375), 0.25, 1e-12);
  EXPECT_DOUBLE_EQ(recommend_retention(0.5), 0.10);
  EXPECT_NEAR(recommend_retention(0.4999999), 0.20, 1e-6);
  EXPECT_DOUBLE_EQ(recommend_retention(-1.0), 0.30);
}

TEST(Recommend, MonotoneNonIncreasing) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> s(2000);
  for (auto& x : s) x = u(rng);
  std::sort(s.begin(), s.end());
  double prev = recommend_retention(s.front());
  for (double x : s) {
    const double r = recommend_retention(x);
    EXPECT_LE(r, prev);
    EXPECT_GE(r, 0.10);
    EXPECT_LE(r, 0.30);
    prev = r;
  }
}

TEST(Recommend, OutOfRangeSilhouetteRejected) {
  EXPECT_THROW(recommend_retention(1.5), ValidationError);
  EXPECT_THROW(recommend_retention(std::nan("")), ValidationError);
}

TEST(Classify, ThreeVerdicts) {
  EXPECT_EQ(classify(0.67), Verdict::HighRedundancy);
  EXPECT_EQ(classify(0.4), Verdict::ModerateRedundancy);
  EXPECT_EQ(classify(0.1), Verdict::LowRedundancy);
  EXPECT_EQ(verdict_from_string(to_string(Verdict::ModerateRedundancy)), Verdict::ModerateRedundancy);
}

TEST(Thresholds, OrderingValidated) {
  XRayThresholds t;
  EXPECT_NO_THROW(t.validate());
  t.core_distance = 1.5;
  EXPECT_THROW(t.validate(), ValidationError);
  t = {};
  t.retention_aggressive = 0.25;
  EXPECT_THROW(t.validate(), ValidationError);
  t = {};
  t.silhouette_floor = 0.6;
  EXPECT_THROW(t.validate(), ValidationError);
}

EmbeddingMatrix normalized(const EmbeddingMatrix& m) { return geometry::l2_normalize(m); }

TEST(RunXray, PlantedHighRedundancy) {
  auto blobs = planted_blobs(10, 60, 16, 10.0, 0.5, 4);
  const auto x = normalized(std::move(blobs.matrix));
  const auto model = geometry::kmeans(x, {.k = 10, .seed = 4});
  const auto report = run_xray(x, model, {}, 4);
  EXPECT_GE(report.silhouette_mean, 0.5);
  EXPECT_EQ(report.verdict, Verdict::HighRedundancy);
  EXPECT_DOUBLE_EQ(report.recommended_retention, 0.10);
}

TEST(RunXray, SingleBlobForcedIntoTenClusters) {
  const auto x = normalized(testing::random_matrix(600, 16, 9));
  const auto model = geometry::kmeans(x, {.k = 10, .seed = 9});
  const auto report = run_xray(x, model, {}, 9);
  EXPECT_LT(report.silhouette_mean, 0.25);
  EXPECT_EQ(report.verdict, Verdict::LowRedundancy);
  EXPECT_DOUBLE_EQ(report.recommended_retention, 0.30);
}

TEST(RunXray, ReportInvariants) {
  auto blobs = planted_blobs(6, 40, 8, 3.0, 1.0, 21);
  const auto x = normalized(std::move(blobs.matrix));
  const auto model = geometry::kmeans(x, {.k = 6, .seed = 1});
  const auto report = run_xray(x, model, {}, 1);
  EXPECT_EQ(report.n_samples, x.rows());
  EXPECT_EQ(report.k, 6);
  EXPECT_NEAR(report.core_fraction + report.middle_fraction + report.sparse_fraction, 1.0, 1e-9);
  std::size_t total = 0;
  ASSERT_EQ(report.per_cluster.size(), 6u);
  for (const auto& c : report.per_cluster) {
    std::size_t hist = 0;
    for (auto h : c.histogram) hist += h;
    EXPECT_EQ(hist, c.size);
    EXPECT_LE(c.mean_distance, c.max_distance);
    total += c.size;
  }
  EXPECT_EQ(total, x.rows());
  EXPECT_GE(report.recommended_retention, 0.10);
  EXPECT_LE(report.recommended_retention, 0.30);
}

TEST(RunXray, SilhouetteSubsampleKnob) {
  const auto x = normalized(testing::random_matrix(300, 4, 2));
  const auto model = geometry::kmeans(x, {.k = 3, .seed = 2});
  EXPECT_EQ(run_xray(x, model, {}, 2).silhouette_evaluated, 300u);
  EXPECT_EQ(run_xray(x, model, {}, 2, 100).silhouette_evaluated, 100u);
  EXPECT_EQ(run_xray(x, model, {}, 2, 0).silhouette_evaluated, 300u);
}

TEST(RunXray, FractionsRotationInvariant) {
  auto blobs = planted_blobs(5, 40, 6, 2.0, 0.6, 8);
  const auto x = normalized(std::move(blobs.matrix));
  const auto model = geometry::kmeans(x, {.k = 5, .seed = 8});
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd g(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) g(i, j) = normal(rng);
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ();
  auto rotate = [&](const std::vector<double>& flat) {
    std::vector<double> out(flat.size());
    for (std::size_t r = 0; r < flat.size() / 6; ++r) {
      Eigen::Map<const Eigen::VectorXd> v(flat.data() + r * 6, 6);
      Eigen::Map<Eigen::VectorXd>(out.data() + r * 6, 6) = q * v;
    }
    return out;
  };
  const EmbeddingMatrix xr(x.ids(), 6, rotate(x.data()));
  auto mr = model;
  mr.centroids = rotate(model.centroids);
  const auto a = run_xray(x, model, {}, 8);
  const auto b = run_xray(xr, mr, {}, 8);
  EXPECT_NEAR(a.core_fraction, b.core_fraction, 1e-12);
  EXPECT_NEAR(a.sparse_fraction, b.sparse_fraction, 1e-12);
  EXPECT_NEAR(a.silhouette_mean, b.silhouette_mean, 1e-9);
}

TEST(RunXray, RejectsMismatchedModel) {
  const auto x = normalized(testing::random_matrix(20, 4, 1));
  auto model = geometry::kmeans(x, {.k = 2, .seed = 1});
  model.assignments.pop_back();
  EXPECT_THROW(run_xray(x, model, {}, 1), ValidationError);
}

double dist2d(const std::array<double, 2>& a, const std::array<double, 2>& b) {
  return std::hypot(a[0] - b[0], a[1] - b[1]);
}

TEST(Project2d, CenteredPlanarDataIsRotated) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  const std::size_t n = 50;
  std::vector<double> data;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) {
    data.push_back(3.0 * normal(rng));
    data.push_back(normal(rng));
    ids.push_back(std::to_string(i));
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += data[2 * i];
    my += data[2 * i + 1];
  }
  for (std::size_t i = 0; i < n; ++i) {
    data[2 * i] -= mx / n;
    data[2 * i + 1] -= my / n;
  }
  const EmbeddingMatrix x(ids, 2, data);
  const auto p = project_2d(x);
  EXPECT_FALSE(p.degenerate);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double orig = std::hypot(data[2 * i] - data[2 * j], data[2 * i + 1] - data[2 * j + 1]);
      EXPECT_NEAR(dist2d(p.coords[i], p.coords[j]), orig, 1e-9);
    }
  }
  EXPECT_GE(p.variance[0], p.variance[1]);
}

TEST(Project2d, RankOneFlagsDegenerate) {
  std::vector<double> data;
  std::vector<std::string> ids;
  for (int i = 0; i < 10; ++i) {
    const double t = i - 4.5;
    for (double v : {1.0, -2.0, 0.5}) data.push_back(t * v);
    ids.push_back(std::to_string(i));
  }
  const auto p = project_2d(EmbeddingMatrix(ids, 3, data));
  EXPECT_TRUE(p.degenerate);
  for (const auto& c : p.coords) EXPECT_EQ(c[1], 0.0);
}

void expect_blobs_separated(int dims) {
  auto blobs = planted_blobs(2, 100, dims, 12.0, 0.5, static_cast<std::uint64_t>(dims));
  const auto p = project_2d(blobs.matrix, 3);
  std::array<double, 2> mean[2]{};
  int count[2]{};
  for (std::size_t i = 0; i < p.coords.size(); ++i) {
    const int l = blobs.labels[i];
    mean[l][0] += p.coords[i][0];
    mean[l][1] += p.coords[i][1];
    ++count[l];
  }
  for (int l = 0; l < 2; ++l)
    for (int c = 0; c < 2; ++c) mean[l][c] /= count[l];
  double within = 0;
  for (std::size_t i = 0; i < p.coords.size(); ++i) {
    const double d = dist2d(p.coords[i], mean[blobs.labels[i]]);
    within += d * d;
  }
  const double sd = std::sqrt(within / static_cast<double>(p.coords.size()));
  EXPECT_GT(dist2d(mean[0], mean[1]), 5.0 * sd) << "dims=" << dims;
}

TEST(Project2d, TwoBlobsSeparatedExactPath) { expect_blobs_separated(16); }

TEST(Project2d, TwoBlobsSeparatedRandomizedPath) { expect_blobs_separated(400); }

TEST(Project2d, RandomizedMatchesExactEigenvalues) {
  auto blobs = planted_blobs(4, 50, 300, 6.0, 1.0, 13);
  const auto& x = blobs.matrix;
  Eigen::MatrixXd m(x.rows(), x.dims());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.dims(); ++j) m(i, j) = x.row(i)[j];
  const Eigen::MatrixXd c = m.rowwise() - m.colwise().mean();
  const Eigen::MatrixXd cov = (c.transpose() * c) / static_cast<double>(x.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  const auto& ev = solver.eigenvalues();
  const auto p = project_2d(x, 1);
  EXPECT_NEAR(p.variance[0], ev(ev.size() - 1), 1e-6 * ev(ev.size() - 1));
  EXPECT_NEAR(p.variance[1], ev(ev.size() - 2), 1e-6 * ev(ev.size() - 1));
}

TEST(Project2d, DeterministicSigns) {
  auto blobs = planted_blobs(3, 30, 100, 4.0, 1.0, 6);
  const auto a = project_2d(blobs.matrix, 11);
  const auto b = project_2d(blobs.matrix, 11);
  EXPECT_EQ(a.coords, b.coords);
  for (const auto& loading : a.loadings) {
    const auto it = std::max_element(loading.begin(), loading.end(),
                                     [](double u, double v) { return std::abs(u) < std::abs(v); });
    EXPECT_GT(*it, 0.0);
  }
}

}  // namespace
}  // namespace slimbench::xray
