#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace bridgerole::analysis {

using Matrix = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Dimensionality reduction

struct PcaResult {
  Matrix coords;                     // n x 2
  std::array<double, 2> explained{};  // variance fractions
  Matrix axes;                       // d x 2, unit columns
  Eigen::VectorXd mean;
};

/// Projection onto the top two principal axes. Each axis is signed so its
/// largest-magnitude loading is positive. Throws Error(kDegenerateData) for
/// fewer than two rows or zero total variance.
PcaResult pca2(const Matrix& data);

struct UmapParams {
  int n_neighbors = 15;
  double min_dist = 0.1;
  double spread = 1.0;
  int n_epochs = 500;
  int negative_sample_rate = 5;
  std::uint64_t seed = 42;
};

struct CurveParams {
  double a = 0.0;
  double b = 0.0;
};

/// Least-squares fit of 1 / (1 + a x^(2b)) to the offset exponential
/// target defined by min_dist and spread (300 samples on [0, 3 spread]).
CurveParams fit_curve(double min_dist, double spread = 1.0);

struct SmoothKnn {
  std::vector<std::vector<std::uint32_t>> neighbors;  // k nearest, excluding self
  std::vector<std::vector<double>> distances;
  std::vector<double> rho;
  std::vector<double> sigma;
};

/// Exact k-NN plus per-point (rho, sigma) calibration so that
/// sum_j exp(-max(0, d_ij - rho_i) / sigma_i) = log2(k).
SmoothKnn smooth_knn(const Matrix& data, int k);

/// Symmetric fuzzy membership graph (a + b - ab union) as (i, j, w) triples, i != j.
struct FuzzyEdge {
  std::uint32_t head;
  std::uint32_t tail;
  double weight;
};
std::vector<FuzzyEdge> fuzzy_graph(const SmoothKnn& knn);

/// Throws Error(kTooFewPoints) unless n > n_neighbors.
Matrix umap2(const Matrix& data, const UmapParams& params = {});

// ---------------------------------------------------------------------------
// Clustering

inline constexpr int kNoise = -1;

enum class ClusterMethod { kHdbscan, kKmeansFallback, kKmeansAdaptive };
std::string_view to_string(ClusterMethod method);

struct ClusterAssignment {
  std::vector<int> labels;  // cluster id or kNoise
  ClusterMethod method = ClusterMethod::kHdbscan;
  std::optional<double> silhouette;
  int n_clusters = 0;
  std::size_t noise_count = 0;
  int k = 0;                 // k-means K, 0 for hdbscan
  int min_cluster_size = 0;  // hdbscan parameter that was used
};

/// max(5, floor(0.03 n)).
int hdbscan_min_cluster_size(std::size_t n);

/// Mutual reachability -> MST -> single linkage -> condensed tree ->
/// excess-of-mass selection (root never selected). Core distance is the
/// distance to the min_samples-th nearest point counting the point itself.
/// min_samples defaults to min_cluster_size.
ClusterAssignment hdbscan(const Matrix& points, int min_cluster_size, std::optional<int> min_samples = std::nullopt);

struct KMeansResult {
  ClusterAssignment assignment;
  Matrix centers;
  double inertia = 0.0;
  /// Inertia after each assignment step.
  std::vector<double> inertia_history;
  int iterations = 0;
};

/// k-means++ seeding then Lloyd iterations until assignments stop changing
/// (or max_iterations). Throws Error(kKTooLarge) when k > n.
KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iterations = 300);

/// K for the k-means fallback: 2 below 150 points, else floor(sqrt(n) / 2).
int fallback_k(std::size_t n);

/// HDBSCAN with the size rule; when it yields fewer than two clusters,
/// k-means with fallback_k(n_bridges). Silhouette is filled in when defined.
ClusterAssignment cluster_with_fallback(const Matrix& points, std::size_t n_bridges, std::uint64_t seed);
ClusterAssignment cluster_with_fallback(const Matrix& points, std::uint64_t seed);

/// Mean silhouette over non-noise points (Euclidean); singleton clusters
/// score 0. Throws Error(kUndefined) with fewer than two clusters.
double silhouette(const Matrix& points, const std::vector<int>& labels);

// ---------------------------------------------------------------------------
// Correlation

/// 1-based ranks, ties get the average rank.
std::vector<double> average_ranks(std::span<const double> values);

struct SpearmanResult {
  double r = 0.0;
  double p = 1.0;
};

/// Pearson on average ranks; two-sided p from t = r sqrt((n-2)/(1-r^2)).
/// Throws Error(kInvalidArgument) for n < 3 or unequal lengths and
/// Error(kConstantInput) when either side has no rank variance.
SpearmanResult spearman(std::span<const double> xs, std::span<const double> ys);

struct CorrelationRow {
  int dim = 0;
  double spearman_r = 0.0;
  double p_value = 1.0;
  bool defined = true;  // false when a side was constant
};

/// Spearman of each embedding column against `target`, sorted by |r|
/// descending (ties by dimension).
std::vector<CorrelationRow> latent_correlation_scan(const Matrix& embeddings, std::span<const double> target);

}  // namespace bridgerole::analysis
