#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "bridgerole/embedanalysis.hpp"
#include "bridgerole/error.hpp"
#include "rng.hpp"

namespace bridgerole::analysis {
namespace {

constexpr std::uint64_t kKmeansInit = 21;

double sq_dist(const Matrix& p, Eigen::Index i, const Matrix& q, Eigen::Index j) {
  return (p.row(i) - q.row(j)).squaredNorm();
}

// Points at distance 0 would give an infinite lambda.
double lambda_of(double distance) { return 1.0 / std::max(distance, 1e-12); }

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
};

struct CondensedEdge {
  std::size_t parent;
  std::size_t child;
  double lambda;
  std::size_t size;
};

void finalize(ClusterAssignment& out) {
  std::vector<int> seen;
  out.noise_count = 0;
  for (int l : out.labels) {
    if (l == kNoise) {
      ++out.noise_count;
    } else if (std::find(seen.begin(), seen.end(), l) == seen.end()) {
      seen.push_back(l);
    }
  }
  out.n_clusters = static_cast<int>(seen.size());
}

}  // namespace

std::string_view to_string(ClusterMethod method) {
  switch (method) {
    case ClusterMethod::kHdbscan: return "hdbscan";
    case ClusterMethod::kKmeansFallback: return "kmeans_fallback";
    case ClusterMethod::kKmeansAdaptive: return "kmeans_adaptive";
  }
  return "?";
}

int hdbscan_min_cluster_size(std::size_t n) {
  return std::max(5, static_cast<int>(static_cast<double>(n) * 0.03));
}

ClusterAssignment hdbscan(const Matrix& points, int min_cluster_size, std::optional<int> min_samples) {
  const auto n = static_cast<std::size_t>(points.rows());
  ClusterAssignment out;
  out.method = ClusterMethod::kHdbscan;
  out.min_cluster_size = min_cluster_size;
  out.labels.assign(n, kNoise);
  const auto mcs = static_cast<std::size_t>(std::max(min_cluster_size, 2));
  if (n < 2) {
    finalize(out);
    return out;
  }

  // Core distances.
  const auto k = static_cast<std::size_t>(std::clamp(min_samples.value_or(min_cluster_size), 1, static_cast<int>(n)));
  Matrix dist(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          std::sqrt(sq_dist(points, static_cast<Eigen::Index>(i), points, static_cast<Eigen::Index>(j)));
    }
  }
  std::vector<double> core(n);
  std::vector<double> row(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) row[j] = dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k - 1), row.end());
    core[i] = row[k - 1];
  }
  auto mreach = [&](std::size_t i, std::size_t j) {
    return std::max({core[i], core[j], dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))});
  };

  // Prim's MST on the dense mutual-reachability graph.
  struct MstEdge {
    double w;
    std::size_t a;
    std::size_t b;
  };
  std::vector<MstEdge> mst;
  {
    std::vector<bool> in_tree(n, false);
    std::vector<double> best(n, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> from(n, 0);
    std::size_t cur = 0;
    in_tree[0] = true;
    for (std::size_t step = 1; step < n; ++step) {
      for (std::size_t j = 0; j < n; ++j) {
        if (in_tree[j]) continue;
        const double w = mreach(cur, j);
        if (w < best[j]) {
          best[j] = w;
          from[j] = cur;
        }
      }
      std::size_t next = n;
      for (std::size_t j = 0; j < n; ++j) {
        if (!in_tree[j] && (next == n || best[j] < best[next])) next = j;
      }
      in_tree[next] = true;
      mst.push_back({best[next], std::min(from[next], next), std::max(from[next], next)});
      cur = next;
    }
  }
  std::sort(mst.begin(), mst.end(), [](const MstEdge& x, const MstEdge& y) {
    return std::tie(x.w, x.a, x.b) < std::tie(y.w, y.a, y.b);
  });

  // Single-linkage dendrogram: internal node n + i merges two components.
  const std::size_t total = 2 * n - 1;
  std::vector<std::array<std::size_t, 2>> children(total, {0, 0});
  std::vector<double> height(total, 0.0);
  std::vector<std::size_t> size(total, 1);
  {
    UnionFind uf(total);
    for (std::size_t i = 0; i < mst.size(); ++i) {
      const std::size_t node = n + i;
      const std::size_t ra = uf.find(mst[i].a);
      const std::size_t rb = uf.find(mst[i].b);
      children[node] = {ra, rb};
      height[node] = mst[i].w;
      size[node] = size[ra] + size[rb];
      uf.parent[ra] = node;
      uf.parent[rb] = node;
    }
  }

  // Condense top-down. Cluster labels start at n (root).
  const std::size_t root = total - 1;
  std::vector<CondensedEdge> condensed;
  std::vector<std::size_t> relabel(total, 0);
  std::size_t next_label = n + 1;
  relabel[root] = n;
  std::vector<std::size_t> queue{root};
  auto emit_points = [&](std::size_t node, std::size_t parent_label, double lambda) {
    std::vector<std::size_t> stack{node};
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      if (v < n) {
        condensed.push_back({parent_label, v, lambda, 1});
      } else {
        stack.push_back(children[v][0]);
        stack.push_back(children[v][1]);
      }
    }
  };
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    const std::size_t node = queue[qi];
    if (node < n) continue;
    const auto [left, right] = children[node];
    const double lambda = lambda_of(height[node]);
    const std::size_t label = relabel[node];
    const bool big_left = size[left] >= mcs;
    const bool big_right = size[right] >= mcs;
    if (big_left && big_right) {
      for (std::size_t c : {left, right}) {
        relabel[c] = next_label++;
        condensed.push_back({label, relabel[c], lambda, size[c]});
        queue.push_back(c);
      }
    } else if (!big_left && !big_right) {
      emit_points(left, label, lambda);
      emit_points(right, label, lambda);
    } else {
      const std::size_t big = big_left ? left : right;
      const std::size_t small = big_left ? right : left;
      relabel[big] = label;
      queue.push_back(big);
      emit_points(small, label, lambda);
    }
  }

  // Stability: sum over children of (lambda_child - lambda_birth) * size.
  const std::size_t n_clusters_total = next_label - n;
  std::vector<double> birth(n_clusters_total, 0.0);
  std::vector<double> stability(n_clusters_total, 0.0);
  std::vector<std::vector<std::size_t>> child_clusters(n_clusters_total);
  for (const auto& e : condensed) {
    if (e.child >= n) {
      birth[e.child - n] = e.lambda;
      child_clusters[e.parent - n].push_back(e.child - n);
    }
  }
  for (const auto& e : condensed) {
    stability[e.parent - n] += (e.lambda - birth[e.parent - n]) * static_cast<double>(e.size);
  }

  // Excess of mass, leaves upward. The root is never a candidate.
  std::vector<bool> selected(n_clusters_total, true);
  selected[0] = false;
  for (std::size_t c = n_clusters_total; c-- > 1;) {
    double subtree = 0.0;
    for (std::size_t ch : child_clusters[c]) subtree += stability[ch];
    if (!child_clusters[c].empty() && subtree > stability[c]) {
      selected[c] = false;
      stability[c] = subtree;
    } else {
      std::vector<std::size_t> stack(child_clusters[c].begin(), child_clusters[c].end());
      while (!stack.empty()) {
        const std::size_t d = stack.back();
        stack.pop_back();
        selected[d] = false;
        stack.insert(stack.end(), child_clusters[d].begin(), child_clusters[d].end());
      }
    }
  }

  // Each point belongs to the selected ancestor of the cluster it left.
  std::vector<std::size_t> parent_cluster(n_clusters_total, 0);
  for (std::size_t c = 0; c < n_clusters_total; ++c) {
    for (std::size_t ch : child_clusters[c]) parent_cluster[ch] = c;
  }
  std::map<std::size_t, int> label_of;
  for (std::size_t c = 0; c < n_clusters_total; ++c) {
    if (selected[c]) label_of.emplace(c, static_cast<int>(label_of.size()));
  }
  for (const auto& e : condensed) {
    if (e.child >= n) continue;
    std::size_t c = e.parent - n;
    while (true) {
      if (selected[c]) {
        out.labels[e.child] = label_of[c];
        break;
      }
      if (c == 0) break;
      c = parent_cluster[c];
    }
  }
  finalize(out);
  return out;
}

KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iterations) {
  const auto n = points.rows();
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be positive");
  if (k > n) {
    throw Error(ErrorCode::kKTooLarge, "k (" + std::to_string(k) + ") exceeds point count (" + std::to_string(n) + ")");
  }
  const Eigen::Index d = points.cols();
  KMeansResult res;
  res.centers.resize(k, d);

  // k-means++ seeding.
  auto rng = detail::make_rng(seed, kKmeansInit);
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  std::vector<bool> chosen(static_cast<std::size_t>(n), false);
  Eigen::Index pick = first(rng);
  for (int c = 0; c < k; ++c) {
    if (c > 0) {
      double sum = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) sum += d2[static_cast<std::size_t>(i)];
      if (sum > 0.0) {
        double target = unit(rng) * sum;
        pick = n - 1;
        for (Eigen::Index i = 0; i < n; ++i) {
          target -= d2[static_cast<std::size_t>(i)];
          if (target < 0.0 && d2[static_cast<std::size_t>(i)] > 0.0) {
            pick = i;
            break;
          }
        }
      } else {
        // All remaining points coincide with a center.
        pick = 0;
        while (pick < n - 1 && chosen[static_cast<std::size_t>(pick)]) ++pick;
      }
    }
    chosen[static_cast<std::size_t>(pick)] = true;
    res.centers.row(c) = points.row(pick);
    for (Eigen::Index i = 0; i < n; ++i) {
      d2[static_cast<std::size_t>(i)] = std::min(d2[static_cast<std::size_t>(i)], sq_dist(points, i, res.centers, c));
    }
  }

  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  std::vector<double> own(static_cast<std::size_t>(n), 0.0);
  for (int iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double best_d = sq_dist(points, i, res.centers, 0);
      for (int c = 1; c < k; ++c) {
        const double dd = sq_dist(points, i, res.centers, c);
        if (dd < best_d) {
          best_d = dd;
          best = c;
        }
      }
      const auto ui = static_cast<std::size_t>(i);
      if (labels[ui] != best) changed = true;
      labels[ui] = best;
      own[ui] = best_d;
      inertia += best_d;
    }
    res.inertia_history.push_back(inertia);
    res.iterations = iter + 1;
    if (!changed) break;

    Matrix sums = Matrix::Zero(k, d);
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(labels[static_cast<std::size_t>(i)]) += points.row(i);
      ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        res.centers.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
        continue;
      }
      // Empty cluster: move it onto the point farthest from its center.
      Eigen::Index far = 0;
      for (Eigen::Index i = 1; i < n; ++i) {
        if (own[static_cast<std::size_t>(i)] > own[static_cast<std::size_t>(far)]) far = i;
      }
      res.centers.row(c) = points.row(far);
      own[static_cast<std::size_t>(far)] = 0.0;
    }
  }
  res.inertia = res.inertia_history.empty() ? 0.0 : res.inertia_history.back();
  res.assignment.labels = std::move(labels);
  res.assignment.method = ClusterMethod::kKmeansFallback;
  res.assignment.k = k;
  finalize(res.assignment);
  return res;
}

int fallback_k(std::size_t n) {
  if (n < 150) return 2;
  return static_cast<int>(std::floor(std::sqrt(static_cast<double>(n)) / 2.0));
}

ClusterAssignment cluster_with_fallback(const Matrix& points, std::size_t n_bridges, std::uint64_t seed) {
  const std::size_t n = static_cast<std::size_t>(points.rows());
  const int mcs = hdbscan_min_cluster_size(n_bridges);
  ClusterAssignment result = hdbscan(points, mcs);
  if (result.n_clusters < 2 && n > 0) {
    const int k = std::min<int>(fallback_k(n_bridges), static_cast<int>(n));
    result = kmeans(points, k, seed).assignment;
    result.method = n_bridges < 150 ? ClusterMethod::kKmeansFallback : ClusterMethod::kKmeansAdaptive;
    result.min_cluster_size = mcs;
  }
  if (result.n_clusters >= 2) result.silhouette = silhouette(points, result.labels);
  return result;
}

ClusterAssignment cluster_with_fallback(const Matrix& points, std::uint64_t seed) {
  return cluster_with_fallback(points, static_cast<std::size_t>(points.rows()), seed);
}

double silhouette(const Matrix& points, const std::vector<int>& labels) {
  if (labels.size() != static_cast<std::size_t>(points.rows())) {
    throw Error(ErrorCode::kInvalidArgument, "labels and points differ in length");
  }
  std::map<int, std::vector<Eigen::Index>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != kNoise) members[labels[i]].push_back(static_cast<Eigen::Index>(i));
  }
  if (members.size() < 2) throw Error(ErrorCode::kUndefined, "silhouette needs at least two clusters");

  double total = 0.0;
  std::size_t count = 0;
  for (const auto& [label, idx] : members) {
    for (Eigen::Index i : idx) {
      ++count;
      if (idx.size() == 1) continue;
      double a = 0.0;
      for (Eigen::Index j : idx) {
        if (j != i) a += std::sqrt(sq_dist(points, i, points, j));
      }
      a /= static_cast<double>(idx.size() - 1);
      double b = std::numeric_limits<double>::infinity();
      for (const auto& [other, oidx] : members) {
        if (other == label) continue;
        double s = 0.0;
        for (Eigen::Index j : oidx) s += std::sqrt(sq_dist(points, i, points, j));
        b = std::min(b, s / static_cast<double>(oidx.size()));
      }
      const double m = std::max(a, b);
      if (m > 0.0) total += (b - a) / m;
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace bridgerole::analysis
