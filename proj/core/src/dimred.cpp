#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "bridgerole/embedanalysis.hpp"
#include "bridgerole/error.hpp"
#include "rng.hpp"

namespace bridgerole::analysis {
namespace {

constexpr std::uint64_t kUmapInit = 11;
constexpr std::uint64_t kUmapSgd = 12;
constexpr double kMinKDistScale = 1e-3;

double clip(double v) { return std::clamp(v, -4.0, 4.0); }

}  // namespace

PcaResult pca2(const Matrix& data) {
  if (data.rows() < 2) throw Error(ErrorCode::kDegenerateData, "PCA needs at least two rows");
  PcaResult out;
  out.mean = data.colwise().mean();
  const Matrix centered = data.rowwise() - out.mean.transpose();
  const Matrix cov = centered.transpose() * centered / static_cast<double>(data.rows() - 1);
  const double trace = cov.trace();
  if (!(trace > 0.0)) throw Error(ErrorCode::kDegenerateData, "zero variance");

  Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
  const auto& values = solver.eigenvalues();  // ascending
  const Matrix& vectors = solver.eigenvectors();
  const Eigen::Index d = cov.rows();
  out.axes = Matrix::Zero(d, 2);
  for (int c = 0; c < 2 && c < d; ++c) {
    Eigen::VectorXd axis = vectors.col(d - 1 - c);
    Eigen::Index arg = 0;
    for (Eigen::Index i = 1; i < d; ++i) {
      if (std::abs(axis(i)) > std::abs(axis(arg))) arg = i;
    }
    if (axis(arg) < 0) axis = -axis;
    out.axes.col(c) = axis;
    out.explained[static_cast<std::size_t>(c)] = std::max(0.0, values(d - 1 - c)) / trace;
  }
  out.coords = centered * out.axes;
  return out;
}

CurveParams fit_curve(double min_dist, double spread) {
  constexpr int kSamples = 300;
  std::vector<double> xs(kSamples);
  std::vector<double> ys(kSamples);
  for (int i = 0; i < kSamples; ++i) {
    xs[i] = 3.0 * spread * static_cast<double>(i) / (kSamples - 1);
    ys[i] = xs[i] < min_dist ? 1.0 : std::exp(-(xs[i] - min_dist) / spread);
  }
  auto residuals = [&](double a, double b, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
    r.resize(kSamples);
    if (jac) jac->resize(kSamples, 2);
    for (int i = 0; i < kSamples; ++i) {
      const double x = xs[i];
      const double u = x > 0 ? std::pow(x, 2.0 * b) : 0.0;
      const double den = 1.0 + a * u;
      r(i) = 1.0 / den - ys[i];
      if (jac) {
        (*jac)(i, 0) = -u / (den * den);
        (*jac)(i, 1) = x > 0 ? -a * u * 2.0 * std::log(x) / (den * den) : 0.0;
      }
    }
  };

  // Levenberg-Marquardt from (1, 1).
  double a = 1.0;
  double b = 1.0;
  double lambda = 1e-3;
  Eigen::VectorXd r;
  Eigen::MatrixXd j;
  residuals(a, b, r, &j);
  double cost = r.squaredNorm();
  for (int iter = 0; iter < 500; ++iter) {
    const Eigen::Matrix2d jtj = j.transpose() * j;
    const Eigen::Vector2d g = j.transpose() * r;
    Eigen::Matrix2d damped = jtj;
    damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
    const Eigen::Vector2d step = damped.ldlt().solve(-g);
    const double na = a + step(0);
    const double nb = b + step(1);
    Eigen::VectorXd nr;
    residuals(na, nb, nr, nullptr);
    const double ncost = nr.squaredNorm();
    if (std::isfinite(ncost) && ncost < cost) {
      const bool converged = cost - ncost < 1e-15 * std::max(cost, 1e-300) && step.norm() < 1e-12;
      a = na;
      b = nb;
      cost = ncost;
      residuals(a, b, r, &j);
      lambda = std::max(lambda / 10.0, 1e-12);
      if (converged) break;
    } else {
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
  }
  return {a, b};
}

SmoothKnn smooth_knn(const Matrix& data, int k) {
  const auto n = static_cast<std::size_t>(data.rows());
  if (k < 1 || n <= static_cast<std::size_t>(k)) {
    throw Error(ErrorCode::kTooFewPoints, "need more points than neighbors");
  }
  SmoothKnn out;
  out.neighbors.resize(n);
  out.distances.resize(n);
  out.rho.assign(n, 0.0);
  out.sigma.assign(n, 1.0);

  double all_sum = 0.0;
  std::size_t all_count = 0;
  std::vector<std::pair<double, std::uint32_t>> cand;
  for (std::size_t i = 0; i < n; ++i) {
    cand.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      cand.emplace_back((data.row(static_cast<Eigen::Index>(i)) - data.row(static_cast<Eigen::Index>(j))).norm(),
                        static_cast<std::uint32_t>(j));
    }
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    for (int m = 0; m < k; ++m) {
      out.neighbors[i].push_back(cand[static_cast<std::size_t>(m)].second);
      out.distances[i].push_back(cand[static_cast<std::size_t>(m)].first);
      all_sum += cand[static_cast<std::size_t>(m)].first;
      ++all_count;
    }
  }
  const double mean_all = all_count ? all_sum / static_cast<double>(all_count) : 0.0;
  const double target = std::log2(static_cast<double>(k));

  for (std::size_t i = 0; i < n; ++i) {
    const auto& d = out.distances[i];
    double rho = 0.0;
    for (double v : d) {
      if (v > 0.0) {
        rho = v;
        break;
      }
    }
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    double mid = 1.0;
    for (int iter = 0; iter < 64; ++iter) {
      double psum = 0.0;
      for (double v : d) psum += std::exp(-std::max(0.0, v - rho) / mid);
      if (std::abs(psum - target) < 1e-5) break;
      if (psum > target) {
        hi = mid;
        mid = 0.5 * (lo + hi);
      } else {
        lo = mid;
        mid = std::isinf(hi) ? mid * 2.0 : 0.5 * (lo + hi);
      }
    }
    const double mean_i = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
    mid = std::max(mid, kMinKDistScale * (rho > 0.0 ? mean_i : mean_all));
    out.rho[i] = rho;
    out.sigma[i] = mid;
  }
  return out;
}

std::vector<FuzzyEdge> fuzzy_graph(const SmoothKnn& knn) {
  const std::size_t n = knn.neighbors.size();
  // Directed memberships keyed by (i, j).
  std::vector<std::vector<std::pair<std::uint32_t, double>>> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t m = 0; m < knn.neighbors[i].size(); ++m) {
      const double w = knn.sigma[i] > 0
                           ? std::exp(-std::max(0.0, knn.distances[i][m] - knn.rho[i]) / knn.sigma[i])
                           : 1.0;
      rows[i].emplace_back(knn.neighbors[i][m], w);
    }
    std::sort(rows[i].begin(), rows[i].end());
  }
  auto lookup = [&](std::size_t i, std::uint32_t j) {
    auto it = std::lower_bound(rows[i].begin(), rows[i].end(), std::make_pair(j, -1.0));
    return it != rows[i].end() && it->first == j ? it->second : 0.0;
  };
  std::vector<std::vector<std::uint32_t>> incoming(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [j, w] : rows[i]) incoming[j].push_back(static_cast<std::uint32_t>(i));
  }
  std::vector<FuzzyEdge> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::uint32_t> cols = incoming[i];
    for (const auto& [j, w] : rows[i]) cols.push_back(j);
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    for (std::uint32_t j : cols) {
      const double a = lookup(i, j);
      const double b = lookup(j, static_cast<std::uint32_t>(i));
      const double w = a + b - a * b;
      if (w > 0.0) out.push_back({static_cast<std::uint32_t>(i), j, w});
    }
  }
  return out;
}

Matrix umap2(const Matrix& data, const UmapParams& params) {
  const auto n = static_cast<std::size_t>(data.rows());
  if (params.n_neighbors < 2 || n <= static_cast<std::size_t>(params.n_neighbors)) {
    throw Error(ErrorCode::kTooFewPoints, "UMAP needs more points than n_neighbors (" +
                                              std::to_string(n) + " <= " + std::to_string(params.n_neighbors) + ")");
  }
  const CurveParams curve = fit_curve(params.min_dist, params.spread);
  auto edges = fuzzy_graph(smooth_knn(data, params.n_neighbors));

  double max_w = 0.0;
  for (const auto& e : edges) max_w = std::max(max_w, e.weight);
  const double n_epochs = static_cast<double>(params.n_epochs);
  std::erase_if(edges, [&](const FuzzyEdge& e) { return e.weight < max_w / n_epochs; });

  std::vector<double> epochs_per_sample(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) epochs_per_sample[i] = max_w / edges[i].weight;
  std::vector<double> epochs_per_negative(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    epochs_per_negative[i] = epochs_per_sample[i] / static_cast<double>(params.negative_sample_rate);
  }
  std::vector<double> next_sample = epochs_per_sample;
  std::vector<double> next_negative = epochs_per_negative;

  Matrix emb(static_cast<Eigen::Index>(n), 2);
  {
    auto rng = detail::make_rng(params.seed, kUmapInit);
    std::uniform_real_distribution<double> init(-10.0, 10.0);
    for (std::size_t i = 0; i < n; ++i) {
      emb(static_cast<Eigen::Index>(i), 0) = init(rng);
      emb(static_cast<Eigen::Index>(i), 1) = init(rng);
    }
  }

  auto rng = detail::make_rng(params.seed, kUmapSgd);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  const double a = curve.a;
  const double b = curve.b;
  for (int epoch = 0; epoch < params.n_epochs; ++epoch) {
    const double alpha = 1.0 - static_cast<double>(epoch) / n_epochs;
    const double e = static_cast<double>(epoch);
    for (std::size_t i = 0; i < edges.size(); ++i) {
      if (next_sample[i] > e) continue;
      const auto j = static_cast<Eigen::Index>(edges[i].head);
      const auto k = static_cast<Eigen::Index>(edges[i].tail);
      double dx = emb(j, 0) - emb(k, 0);
      double dy = emb(j, 1) - emb(k, 1);
      double d2 = dx * dx + dy * dy;
      if (d2 > 0.0) {
        const double coeff = -2.0 * a * b * std::pow(d2, b - 1.0) / (a * std::pow(d2, b) + 1.0);
        const double gx = clip(coeff * dx);
        const double gy = clip(coeff * dy);
        emb(j, 0) += gx * alpha;
        emb(j, 1) += gy * alpha;
        emb(k, 0) -= gx * alpha;
        emb(k, 1) -= gy * alpha;
      }
      next_sample[i] += epochs_per_sample[i];

      const auto n_neg = static_cast<int>((e - next_negative[i]) / epochs_per_negative[i]);
      for (int p = 0; p < n_neg; ++p) {
        const auto other = static_cast<Eigen::Index>(pick(rng));
        dx = emb(j, 0) - emb(other, 0);
        dy = emb(j, 1) - emb(other, 1);
        d2 = dx * dx + dy * dy;
        if (d2 > 0.0) {
          const double coeff = 2.0 * b / ((0.001 + d2) * (a * std::pow(d2, b) + 1.0));
          emb(j, 0) += clip(coeff * dx) * alpha;
          emb(j, 1) += clip(coeff * dy) * alpha;
        } else if (j != other) {
          emb(j, 0) += 4.0 * alpha;
          emb(j, 1) += 4.0 * alpha;
        }
      }
      next_negative[i] += static_cast<double>(n_neg) * epochs_per_negative[i];
    }
  }
  return emb;
}

}  // namespace bridgerole::analysis
