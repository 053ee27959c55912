#include <cmath>
#include <random>
#include <set>

#include "bridgerole/embedanalysis.hpp"
#include "bridgerole/error.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace bridgerole;
using namespace bridgerole::analysis;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::kInvalidArgument;
}

Matrix uniform(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = u(rng);
  }
  return m;
}

Matrix two_blobs_32d(std::size_t per, double radius, double separation, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, radius);
  Matrix m(static_cast<Eigen::Index>(2 * per), 32);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < 32; ++j) m(i, j) = nd(rng);
    if (i >= static_cast<Eigen::Index>(per)) m(i, 0) += separation;
  }
  return m;
}

std::vector<double> as_vector(std::initializer_list<double> v) { return {v}; }

}  // namespace

TEST_CASE("pca2") {
  SUBCASE("points on a line") {
    Matrix x(10, 32);
    Eigen::VectorXd dir = Eigen::VectorXd::LinSpaced(32, 1.0, 2.0).normalized();
    for (Eigen::Index i = 0; i < 10; ++i) x.row(i) = (static_cast<double>(i) - 3.0) * dir.transpose();
    const auto r = pca2(x);
    CHECK(r.explained[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.explained[1] == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
  }
  SUBCASE("isotropic sample") {
    const auto r = pca2(fixture::gaussian(4000, 2, 8));
    CHECK(std::abs(r.explained[0] - r.explained[1]) / r.explained[0] < 0.2);
    CHECK(r.explained[0] + r.explained[1] <= 1.0 + 1e-12);
    CHECK(r.explained[1] >= 0.0);
  }
  SUBCASE("mean projects to origin") {
    const Matrix x = fixture::gaussian(50, 32, 9);
    const auto r = pca2(x);
    const Eigen::RowVectorXd mean = x.colwise().mean();
    const Eigen::RowVector2d at = (mean - r.mean.transpose()) * r.axes;
    CHECK(at.norm() < 1e-12);
    CHECK(r.coords.colwise().mean().norm() < 1e-10);
  }
  SUBCASE("degenerate") {
    CHECK(code_of([] { pca2(Matrix::Ones(5, 3)); }) == ErrorCode::kDegenerateData);
    CHECK(code_of([] { pca2(Matrix::Ones(1, 3)); }) == ErrorCode::kDegenerateData);
  }
}

TEST_CASE("umap curve fit matches the reference least squares") {
  const auto c = fit_curve(0.1, 1.0);
  CHECK(c.a == doctest::Approx(1.57694346).epsilon(1e-4));
  CHECK(c.b == doctest::Approx(0.89506088).epsilon(1e-4));
}

TEST_CASE("smooth_knn calibration") {
  const Matrix x = fixture::gaussian(40, 3, 10);
  const auto knn = smooth_knn(x, 6);
  for (std::size_t i = 0; i < 40; ++i) {
    CHECK(knn.neighbors[i].size() == 6);
    double s = 0.0;
    for (double d : knn.distances[i]) s += std::exp(-std::max(0.0, d - knn.rho[i]) / knn.sigma[i]);
    CHECK(s == doctest::Approx(std::log2(6.0)).epsilon(1e-3));
  }
  for (const auto& e : fuzzy_graph(knn)) {
    CHECK(e.head != e.tail);
    CHECK(e.weight > 0.0);
    CHECK(e.weight <= 1.0);
  }
}

TEST_CASE("umap2 separates blobs and is deterministic") {
  const Matrix x = two_blobs_32d(100, 1.0, 50.0 * std::sqrt(32.0), 3);
  UmapParams p;
  p.n_epochs = 200;
  const Matrix y = umap2(x, p);
  REQUIRE(y.rows() == 200);
  const Eigen::RowVector2d c0 = y.topRows(100).colwise().mean();
  const Eigen::RowVector2d c1 = y.bottomRows(100).colwise().mean();
  double intra = 0.0;
  for (int b = 0; b < 2; ++b) {
    const Matrix blob = y.middleRows(b * 100, 100);
    const Eigen::RowVector2d c = b == 0 ? c0 : c1;
    for (Eigen::Index i = 0; i < 100; ++i) intra += (blob.row(i) - c).norm();
  }
  intra /= 200.0;
  CHECK((c0 - c1).norm() > 5.0 * intra);
  CHECK(umap2(x, p) == y);
  CHECK(code_of([&] { umap2(x.topRows(15), p); }) == ErrorCode::kTooFewPoints);
}

TEST_CASE("hdbscan examples") {
  CHECK(hdbscan_min_cluster_size(697) == 20);
  CHECK(hdbscan_min_cluster_size(10) == 5);
  SUBCASE("two tight blobs") {
    const Matrix x = fixture::blobs({{0.0, 0.0}, {100.0, 100.0}}, 30, 1.0, 4);
    const auto r = hdbscan(x, 5);
    CHECK(r.n_clusters == 2);
    CHECK(r.noise_count == 0);
    CHECK(r.labels[0] != r.labels[30]);
    for (int i = 1; i < 30; ++i) CHECK(r.labels[i] == r.labels[0]);
  }
  SUBCASE("uniform scatter with a large minimum size") {
    const auto r = hdbscan(uniform(40, 2, 5), 20);
    CHECK(r.n_clusters == 0);
    CHECK(r.noise_count == 40);
  }
  SUBCASE("fewer than two points") {
    const auto r = hdbscan(Matrix::Zero(1, 2), 5);
    CHECK(r.labels == std::vector<int>{kNoise});
  }
}

TEST_CASE("hdbscan matches the level-set oracle on small tie-free fixtures") {
  std::size_t compared = 0;
  std::size_t nontrivial = 0;
  for (std::uint64_t seed = 0; seed < 300 && compared < 60; ++seed) {
    std::mt19937_64 rng(seed);
    const auto n = static_cast<Eigen::Index>(6 + seed % 7);
    const int mcs = 2 + static_cast<int>(seed % 3);
    // Two or three loose groups plus jitter.
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int groups = 2 + static_cast<int>(seed % 2);
    Matrix x(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int g = static_cast<int>(i % groups);
      x(i, 0) = 4.0 * g + u(rng);
      x(i, 1) = 2.0 * (g % 2) + u(rng);
    }
    if (!oracle::mst_weights_distinct(x, mcs)) continue;
    const auto got = hdbscan(x, mcs);
    const auto want = oracle::hdbscan(x, mcs, mcs);
    CAPTURE(seed);
    CHECK(oracle::same_partition(got.labels, want.labels));
    ++compared;
    std::set<int> distinct(want.labels.begin(), want.labels.end());
    distinct.erase(-1);
    nontrivial += distinct.size() >= 2;
  }
  CHECK(compared >= 40);
  CHECK(nontrivial >= 10);
}

TEST_CASE("kmeans") {
  SUBCASE("two far blobs") {
    const Matrix x = fixture::blobs({{0.0, 0.0}, {50.0, 0.0}}, 40, 1.0, 6);
    const auto r = kmeans(x, 2, 1);
    for (int i = 0; i < 40; ++i) CHECK(r.assignment.labels[i] == r.assignment.labels[0]);
    for (int i = 40; i < 80; ++i) CHECK(r.assignment.labels[i] == r.assignment.labels[40]);
    CHECK(r.assignment.labels[0] != r.assignment.labels[40]);
    for (std::size_t i = 1; i < r.inertia_history.size(); ++i) {
      CHECK(r.inertia_history[i] <= r.inertia_history[i - 1] + 1e-12);
    }
  }
  SUBCASE("K = n") {
    const Matrix x = uniform(7, 2, 2);
    const auto r = kmeans(x, 7, 3);
    CHECK(r.inertia == 0.0);
    std::set<int> labels(r.assignment.labels.begin(), r.assignment.labels.end());
    CHECK(labels.size() == 7);
  }
  SUBCASE("duplicates with K = 1") {
    const auto r = kmeans(Matrix::Constant(6, 2, 3.0), 1, 0);
    CHECK(r.inertia == 0.0);
    for (int l : r.assignment.labels) CHECK(l == 0);
  }
  SUBCASE("reproducible and bounded") {
    const Matrix x = uniform(120, 2, 9);
    const auto a = kmeans(x, 4, 11);
    const auto b = kmeans(x, 4, 11);
    CHECK(a.assignment.labels == b.assignment.labels);
    CHECK(a.centers == b.centers);
    for (std::size_t i = 1; i < a.inertia_history.size(); ++i) {
      CHECK(a.inertia_history[i] <= a.inertia_history[i - 1] + 1e-12);
    }
    CHECK(code_of([&] { kmeans(x.topRows(3), 4, 1); }) == ErrorCode::kKTooLarge);
  }
}

TEST_CASE("fallback_k") {
  CHECK(fallback_k(148) == 2);
  CHECK(fallback_k(149) == 2);
  CHECK(fallback_k(258) == 8);
  CHECK(fallback_k(697) == 13);
}

TEST_CASE("cluster_with_fallback") {
  SUBCASE("peeling chain of 148 points falls back to K=2") {
    const auto r = cluster_with_fallback(fixture::geometric_chain(148, 1.05), 7);
    CHECK(r.method == ClusterMethod::kKmeansFallback);
    CHECK(r.k == 2);
    CHECK(r.n_clusters == 2);
    CHECK(r.silhouette.has_value());
  }
  SUBCASE("clean blobs stay with hdbscan") {
    const auto r = cluster_with_fallback(fixture::blobs({{0.0, 0.0}, {60.0, 0.0}}, 40, 1.0, 12), 7);
    CHECK(r.method == ClusterMethod::kHdbscan);
    CHECK(r.n_clusters == 2);
  }
  SUBCASE("258 points take the adaptive path with K=8") {
    const auto r = cluster_with_fallback(fixture::geometric_chain(258, 1.02), 7);
    CHECK(r.method == ClusterMethod::kKmeansAdaptive);
    CHECK(r.k == 8);
    CHECK(r.n_clusters == 8);
  }
}

TEST_CASE("silhouette") {
  Matrix x(4, 2);
  x << 0, 0, 0, 1, 10, 0, 10, 1;
  CHECK(silhouette(x, {0, 0, 1, 1}) > 0.9);
  CHECK(silhouette(x, {0, 0, 1, 1}) == doctest::Approx(oracle::silhouette(x, {0, 0, 1, 1})).epsilon(1e-12));
  CHECK(code_of([&] { silhouette(x, {0, 0, 0, 0}); }) == ErrorCode::kUndefined);
  CHECK(code_of([&] { silhouette(x, {0, -1, -1, -1}); }) == ErrorCode::kUndefined);

  const Matrix u = uniform(300, 2, 13);
  std::mt19937_64 rng(13);
  std::vector<int> labels(300);
  for (auto& l : labels) l = static_cast<int>(rng() % 3);
  CHECK(std::abs(silhouette(u, labels)) < 0.2);

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto n = static_cast<Eigen::Index>(20 + 18 * seed);
    const Matrix p = uniform(n, 2, 100 + seed);
    std::vector<int> l(static_cast<std::size_t>(n));
    std::mt19937_64 g(seed);
    for (auto& v : l) v = static_cast<int>(g() % 5) - 1;  // includes noise
    CHECK(silhouette(p, l) == doctest::Approx(oracle::silhouette(p, l)).epsilon(1e-9));
  }
}

TEST_CASE("average_ranks and spearman") {
  CHECK(average_ranks(as_vector({10, 20, 20, 30})) == as_vector({1, 2.5, 2.5, 4}));
  CHECK(spearman(as_vector({1, 2, 3, 4}), as_vector({2, 4, 8, 16})).r == 1.0);
  CHECK(spearman(as_vector({1, 2, 3, 4}), as_vector({4, 3, 2, 1})).r == -1.0);

  const auto xs = as_vector({1, 2, 2, 3});
  const auto ys = as_vector({1, 2, 3, 4});
  CHECK(std::abs(spearman(xs, ys).r - oracle::spearman(xs, ys)) < 1e-12);

  // Reference values from the t approximation with n - 2 degrees of freedom.
  const auto a = spearman(as_vector({1, 2, 3, 4, 5, 6, 7, 8, 9, 10}), as_vector({2, 1, 4, 3, 6, 5, 8, 7, 10, 9}));
  CHECK(a.r == doctest::Approx(0.9393939393939393).epsilon(1e-14));
  CHECK(a.p == doctest::Approx(5.484052998513666e-05).epsilon(1e-9));
  const auto b = spearman(as_vector({3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5}), as_vector({2, 7, 1, 8, 2, 8, 1, 8, 2, 8, 4}));
  CHECK(b.r == doctest::Approx(0.1384567651467695).epsilon(1e-12));
  CHECK(b.p == doctest::Approx(0.6847503048108998).epsilon(1e-9));

  // Invariance under strictly monotone transforms.
  std::vector<double> cubed;
  std::vector<double> logged;
  for (double v : as_vector({3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5})) cubed.push_back(v * v * v - 7.0);
  for (double v : as_vector({2, 7, 1, 8, 2, 8, 1, 8, 2, 8, 4})) logged.push_back(std::log(v));
  CHECK(spearman(cubed, logged).r == doctest::Approx(b.r).epsilon(1e-14));

  CHECK(code_of([] { spearman(as_vector({1, 1, 1}), as_vector({1, 2, 3})); }) == ErrorCode::kConstantInput);
  CHECK(code_of([] { spearman(as_vector({1, 2}), as_vector({1, 2})); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { spearman(as_vector({1, 2, 3}), as_vector({1, 2})); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("latent correlation scan") {
  const Eigen::Index n = 500;
  Matrix emb = fixture::gaussian(n, 32, 21);
  std::mt19937_64 rng(22);
  std::vector<double> target(static_cast<std::size_t>(n));
  for (auto& t : target) t = static_cast<double>(rng() % 12);
  for (Eigen::Index i = 0; i < n; ++i) emb(i, 19) = target[static_cast<std::size_t>(i)];
  const auto rows = latent_correlation_scan(emb, target);
  REQUIRE(rows.size() == 32);
  CHECK(rows[0].dim == 19);
  CHECK(rows[0].spearman_r == doctest::Approx(1.0).epsilon(1e-12));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(std::abs(rows[i].spearman_r) < 0.2);
    CHECK(std::abs(rows[i].spearman_r) <= std::abs(rows[i - 1].spearman_r));
  }

  // A constant column is reported, not thrown.
  emb.col(3).setConstant(1.0);
  const auto with_constant = latent_correlation_scan(emb, target);
  bool found = false;
  for (const auto& r : with_constant) {
    if (r.dim == 3) {
      found = true;
      CHECK_FALSE(r.defined);
    }
  }
  CHECK(found);
}
