#include "bridgerole/rgcnvgae.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "bridgerole/error.hpp"
#include "rng.hpp"

namespace bridgerole::vgae {
namespace {

enum Purpose : std::uint64_t { kInit = 1, kNoise = 2, kNegatives = 3, kHoldout = 4, kGradCheck = 5 };

Matrix glorot(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(rows, cols);
  // Column-major fill keeps the draw order independent of Eigen internals.
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = dist(rng);
  }
  return m;
}

RgcnLayer make_layer(int d_in, int d_out, int bases, std::mt19937_64& rng) {
  RgcnLayer layer;
  for (int b = 0; b < bases; ++b) layer.bases.push_back(glorot(d_in, d_out, rng));
  layer.coefficients = glorot(kNumRelations, bases, rng);
  layer.self_loop = glorot(d_in, d_out, rng);
  return layer;
}

RgcnLayer zeros_like(const RgcnLayer& layer) {
  RgcnLayer out;
  for (const auto& b : layer.bases) out.bases.push_back(Matrix::Zero(b.rows(), b.cols()));
  out.coefficients = Matrix::Zero(layer.coefficients.rows(), layer.coefficients.cols());
  out.self_loop = Matrix::Zero(layer.self_loop.rows(), layer.self_loop.cols());
  return out;
}

void push_params(RgcnLayer& layer, std::vector<Matrix*>& out) {
  for (auto& b : layer.bases) out.push_back(&b);
  out.push_back(&layer.coefficients);
  out.push_back(&layer.self_loop);
}

void push_params(const RgcnLayer& layer, std::vector<const Matrix*>& out) {
  for (const auto& b : layer.bases) out.push_back(&b);
  out.push_back(&layer.coefficients);
  out.push_back(&layer.self_loop);
}

struct LayerCache {
  const Matrix* input = nullptr;
  std::array<Matrix, kNumRelations> aggregated;  // A_r H
};

void aggregate(const EncoderGraph& graph, const Matrix& h, LayerCache& cache) {
  cache.input = &h;
  for (int r = 0; r < kNumRelations; ++r) cache.aggregated[r] = graph.mean_adjacency[r] * h;
}

Matrix apply_layer(const RgcnLayer& layer, const LayerCache& cache) {
  Matrix y = (*cache.input) * layer.self_loop;
  for (int r = 0; r < kNumRelations; ++r) y.noalias() += cache.aggregated[r] * layer.relation_weight(r);
  return y;
}

// Accumulates parameter gradients for dY and returns dL/dH.
Matrix backward_layer(const RgcnLayer& layer, const LayerCache& cache, const EncoderGraph& graph,
                      const Matrix& dy, RgcnLayer& grad) {
  const Matrix& h = *cache.input;
  grad.self_loop.noalias() += h.transpose() * dy;
  Matrix dh = dy * layer.self_loop.transpose();
  for (int r = 0; r < kNumRelations; ++r) {
    const Matrix dw = cache.aggregated[r].transpose() * dy;
    for (std::size_t b = 0; b < layer.bases.size(); ++b) {
      const auto bi = static_cast<Eigen::Index>(b);
      grad.bases[b].noalias() += layer.coefficients(r, bi) * dw;
      grad.coefficients(r, bi) += (layer.bases[b].array() * dw.array()).sum();
    }
    const Matrix dagg = dy * layer.relation_weight(r).transpose();
    dh.noalias() += graph.mean_adjacency[r].transpose() * dagg;
  }
  return dh;
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

void check_shapes(const Matrix& features, const EncoderGraph& graph, const RgcnWeights& weights) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kDimensionMismatch, what); };
  if (static_cast<std::size_t>(features.rows()) != graph.num_nodes) {
    fail("feature rows (" + std::to_string(features.rows()) + ") != encoder nodes (" +
         std::to_string(graph.num_nodes) + ")");
  }
  Eigen::Index width = features.cols();
  for (const auto& layer : weights.hidden) {
    if (layer.self_loop.rows() != width) fail("layer input width mismatch");
    width = layer.self_loop.cols();
  }
  if (weights.mu_head.self_loop.rows() != width || weights.logvar_head.self_loop.rows() != width) {
    fail("head input width mismatch");
  }
}

struct ForwardState {
  std::vector<LayerCache> caches;       // one per hidden layer
  std::vector<Matrix> pre_activations;  // one per hidden layer
  std::vector<Matrix> activations;      // one per hidden layer
  LayerCache head_cache;
  Matrix mu;
  Matrix logvar;
};

void forward(const Matrix& features, const EncoderGraph& graph, const RgcnWeights& weights, ForwardState& st) {
  check_shapes(features, graph, weights);
  const std::size_t layers = weights.hidden.size();
  st.caches.assign(layers, {});
  st.pre_activations.assign(layers, {});
  st.activations.assign(layers, {});
  const Matrix* h = &features;
  for (std::size_t l = 0; l < layers; ++l) {
    aggregate(graph, *h, st.caches[l]);
    st.pre_activations[l] = apply_layer(weights.hidden[l], st.caches[l]);
    st.activations[l] = st.pre_activations[l].cwiseMax(0.0);
    h = &st.activations[l];
  }
  aggregate(graph, *h, st.head_cache);
  st.mu = apply_layer(weights.mu_head, st.head_cache);
  st.logvar = apply_layer(weights.logvar_head, st.head_cache);
}

double recon_and_grad(const Matrix& z, const std::vector<NodePair>& pos, const std::vector<NodePair>& neg,
                      Matrix* dz) {
  const double m = static_cast<double>(pos.size() + neg.size());
  double total = 0.0;
  auto visit = [&](const std::vector<NodePair>& pairs, double label) {
    for (const auto& [i, j] : pairs) {
      const double s = z.row(i).dot(z.row(j));
      total += softplus(s) - label * s;
      if (dz != nullptr) {
        const double ds = (sigmoid(s) - label) / m;
        dz->row(i) += ds * z.row(j);
        dz->row(j) += ds * z.row(i);
      }
    }
  };
  visit(pos, 1.0);
  visit(neg, 0.0);
  return total / m;
}

Matrix clamp_logvar(const Matrix& logvar) { return logvar.cwiseMax(kLogvarMin).cwiseMin(kLogvarMax); }

double kl_term(const Matrix& mu, const Matrix& logvar_clamped) {
  if (mu.rows() == 0) return 0.0;
  const double sum = 0.5 * (logvar_clamped.array().exp() + mu.array().square() - 1.0 - logvar_clamped.array()).sum();
  const double n = static_cast<double>(mu.rows());
  return sum / (n * n);
}

}  // namespace

// ---------------------------------------------------------------------------

void EncoderConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvalidConfig, "encoder: " + what); };
  if (layer_dims.size() < 2) fail("layer_dims needs at least input and latent widths");
  for (int d : layer_dims) {
    if (d <= 0) fail("layer_dims entries must be positive");
  }
  if (num_bases <= 0) fail("num_bases must be positive");
  const int min_dim = *std::min_element(layer_dims.begin(), layer_dims.end());
  if (num_bases > kNumRelations * min_dim) fail("num_bases exceeds |relations| * min(dim)");
  if (!(learning_rate > 0.0) || !(beta_start > 0.0) || !(beta_end > 0.0) || !(neg_ratio > 0.0)) {
    fail("rates must be positive");
  }
  if (beta_end < beta_start) fail("beta_end must be >= beta_start");
  if (beta_epochs < 0 || patience < 0 || max_epochs <= 0) fail("epoch counts must be non-negative");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0) || !(adam_eps > 0.0)) {
    fail("invalid Adam constants");
  }
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) fail("holdout_fraction must be in [0, 1)");
}

Matrix RgcnLayer::relation_weight(int relation) const {
  Matrix w = Matrix::Zero(self_loop.rows(), self_loop.cols());
  for (std::size_t b = 0; b < bases.size(); ++b) {
    w.noalias() += coefficients(relation, static_cast<Eigen::Index>(b)) * bases[b];
  }
  return w;
}

std::size_t RgcnLayer::relation_parameter_count() const {
  return bases.size() * static_cast<std::size_t>(input_dim() * output_dim()) +
         static_cast<std::size_t>(kNumRelations) * bases.size();
}

RgcnWeights RgcnWeights::initialize(const EncoderConfig& config) {
  config.validate();
  auto rng = detail::make_rng(config.seed, kInit);
  RgcnWeights w;
  const auto& dims = config.layer_dims;
  for (std::size_t l = 0; l + 2 < dims.size(); ++l) {
    w.hidden.push_back(make_layer(dims[l], dims[l + 1], config.num_bases, rng));
  }
  const int head_in = dims[dims.size() - 2];
  w.mu_head = make_layer(head_in, dims.back(), config.num_bases, rng);
  w.logvar_head = make_layer(head_in, dims.back(), config.num_bases, rng);
  return w;
}

RgcnWeights RgcnWeights::zeros_like() const {
  RgcnWeights out;
  for (const auto& l : hidden) out.hidden.push_back(vgae::zeros_like(l));
  out.mu_head = vgae::zeros_like(mu_head);
  out.logvar_head = vgae::zeros_like(logvar_head);
  return out;
}

std::vector<Matrix*> RgcnWeights::parameters() {
  std::vector<Matrix*> out;
  for (auto& l : hidden) push_params(l, out);
  push_params(mu_head, out);
  push_params(logvar_head, out);
  return out;
}

std::vector<const Matrix*> RgcnWeights::parameters() const {
  std::vector<const Matrix*> out;
  for (const auto& l : hidden) push_params(l, out);
  push_params(mu_head, out);
  push_params(logvar_head, out);
  return out;
}

std::size_t RgcnWeights::parameter_count() const {
  std::size_t n = 0;
  for (const Matrix* p : parameters()) n += static_cast<std::size_t>(p->size());
  return n;
}

// ---------------------------------------------------------------------------

EncoderGraph EncoderGraph::from_edges(std::size_t num_nodes, std::vector<NodePair> street_edges,
                                      std::vector<NodePair> bridge_edges) {
  EncoderGraph g;
  g.num_nodes = num_nodes;
  std::array<std::vector<NodePair>*, kNumRelations> inputs = {&street_edges, &bridge_edges};
  std::set<NodePair> all;
  for (int r = 0; r < kNumRelations; ++r) {
    std::set<NodePair> uniq;
    for (auto [a, b] : *inputs[r]) {
      if (a == b) continue;
      if (a >= num_nodes || b >= num_nodes) {
        throw Error(ErrorCode::kInvalidArgument, "encoder edge endpoint out of range");
      }
      uniq.insert({std::min(a, b), std::max(a, b)});
    }
    g.relation_edges[r].assign(uniq.begin(), uniq.end());
    all.insert(uniq.begin(), uniq.end());

    std::vector<std::vector<std::uint32_t>> nbrs(num_nodes);
    for (auto [a, b] : uniq) {
      nbrs[a].push_back(b);
      nbrs[b].push_back(a);
    }
    std::vector<Eigen::Triplet<double>> triplets;
    for (std::size_t i = 0; i < num_nodes; ++i) {
      const double inv = nbrs[i].empty() ? 0.0 : 1.0 / static_cast<double>(nbrs[i].size());
      for (auto j : nbrs[i]) {
        triplets.emplace_back(static_cast<int>(i), static_cast<int>(j), inv);
      }
    }
    g.mean_adjacency[r].resize(static_cast<Eigen::Index>(num_nodes), static_cast<Eigen::Index>(num_nodes));
    g.mean_adjacency[r].setFromTriplets(triplets.begin(), triplets.end());
  }
  g.edges.assign(all.begin(), all.end());
  return g;
}

EncoderGraph EncoderGraph::from_graph(const graph::HetGraph& graph) {
  std::vector<graph::NodeId> ids;
  std::vector<std::int64_t> row(graph.size(), -1);
  for (const auto& n : graph.nodes()) {
    if (n.kind == graph::NodeKind::kBuilding) continue;
    row[n.id] = static_cast<std::int64_t>(ids.size());
    ids.push_back(n.id);
  }
  std::vector<NodePair> streets;
  for (auto [a, b] : graph.street_edges()) {
    streets.emplace_back(static_cast<std::uint32_t>(row[a]), static_cast<std::uint32_t>(row[b]));
  }
  std::vector<NodePair> bridges;
  for (graph::NodeId id : ids) {
    if (graph.node(id).kind != graph::NodeKind::kBridge) continue;
    if (auto s = graph.snapped_street(id)) {
      bridges.emplace_back(static_cast<std::uint32_t>(row[id]), static_cast<std::uint32_t>(row[*s]));
    }
  }
  EncoderGraph g = from_edges(ids.size(), std::move(streets), std::move(bridges));
  g.node_ids = std::move(ids);
  return g;
}

bool EncoderGraph::has_edge(std::uint32_t a, std::uint32_t b) const {
  const NodePair key{std::min(a, b), std::max(a, b)};
  return std::binary_search(edges.begin(), edges.end(), key);
}

Matrix select_rows(const graph::FeatureMatrix& features, const std::vector<graph::NodeId>& ids) {
  Matrix out(static_cast<Eigen::Index>(ids.size()), features.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = features.row(ids[i]);
  return out;
}

EncoderOutput rgcn_forward(const Matrix& features, const EncoderGraph& graph, const RgcnWeights& weights) {
  ForwardState st;
  forward(features, graph, weights, st);
  return {std::move(st.activations), std::move(st.mu), std::move(st.logvar)};
}

Matrix sample_noise(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, std::uint64_t epoch) {
  auto rng = detail::make_rng(seed, kNoise, epoch);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix eps(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) eps(r, c) = normal(rng);
  }
  return eps;
}

Matrix reparameterize(const Matrix& mu, const Matrix& logvar, const Matrix& eps) {
  return mu + ((0.5 * clamp_logvar(logvar).array()).exp() * eps.array()).matrix();
}

Matrix reparameterize(const Matrix& mu, const Matrix& logvar, std::uint64_t seed, std::uint64_t epoch) {
  return reparameterize(mu, logvar, sample_noise(mu.rows(), mu.cols(), seed, epoch));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double decode_edge(const Vector& zi, const Vector& zj) { return sigmoid(zi.dot(zj)); }

LossTerms loss(const Matrix& z, const Matrix& mu, const Matrix& logvar, const std::vector<NodePair>& pos,
               const std::vector<NodePair>& neg, double beta) {
  if (pos.empty() && neg.empty()) throw Error(ErrorCode::kEmptyEdgeSet, "no positive or negative pairs");
  LossTerms t;
  t.recon = recon_and_grad(z, pos, neg, nullptr);
  t.kl = kl_term(mu, clamp_logvar(logvar));
  t.total = t.recon + beta * t.kl;
  return t;
}

double beta_schedule(int epoch, const EncoderConfig& config) {
  if (config.beta_epochs <= 0) return config.beta_end;
  const double t = static_cast<double>(std::max(epoch, 0)) / static_cast<double>(config.beta_epochs);
  return std::min(config.beta_end, config.beta_start + (config.beta_end - config.beta_start) * t);
}

LossTerms loss_and_gradient(const Matrix& features, const EncoderGraph& graph, const RgcnWeights& weights,
                            const Matrix& eps, const std::vector<NodePair>& pos,
                            const std::vector<NodePair>& neg, double beta, RgcnWeights* grad) {
  if (pos.empty() && neg.empty()) throw Error(ErrorCode::kEmptyEdgeSet, "no positive or negative pairs");
  ForwardState st;
  forward(features, graph, weights, st);
  const Matrix lv = clamp_logvar(st.logvar);
  const Matrix sigma = (0.5 * lv.array()).exp().matrix();
  const Matrix z = st.mu + (sigma.array() * eps.array()).matrix();

  LossTerms t;
  Matrix dz;
  if (grad != nullptr) dz = Matrix::Zero(z.rows(), z.cols());
  t.recon = recon_and_grad(z, pos, neg, grad != nullptr ? &dz : nullptr);
  t.kl = kl_term(st.mu, lv);
  t.total = t.recon + beta * t.kl;
  if (grad == nullptr) return t;

  const double n = static_cast<double>(std::max<Eigen::Index>(z.rows(), 1));
  const double kl_scale = beta / (n * n);
  const Matrix dmu = dz + kl_scale * st.mu;
  Matrix dlv = (dz.array() * eps.array() * 0.5 * sigma.array() + kl_scale * 0.5 * (lv.array().exp() - 1.0)).matrix();
  // Clamped entries carry no gradient.
  dlv = (st.logvar.array() >= kLogvarMin && st.logvar.array() <= kLogvarMax).select(dlv, 0.0);

  Matrix dh = backward_layer(weights.mu_head, st.head_cache, graph, dmu, grad->mu_head);
  dh += backward_layer(weights.logvar_head, st.head_cache, graph, dlv, grad->logvar_head);
  for (std::size_t l = weights.hidden.size(); l-- > 0;) {
    const Matrix dpre = (st.pre_activations[l].array() > 0.0).select(dh, 0.0);
    dh = backward_layer(weights.hidden[l], st.caches[l], graph, dpre, grad->hidden[l]);
  }
  return t;
}

std::vector<NodePair> sample_negatives(const EncoderGraph& graph, std::size_t count, std::uint64_t seed,
                                       std::uint64_t epoch) {
  std::vector<NodePair> out;
  const auto n = static_cast<std::uint32_t>(graph.num_nodes);
  if (n < 2 || count == 0) return out;
  const double total_pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  const double free_pairs = total_pairs - static_cast<double>(graph.edges.size());
  if (free_pairs <= 0) return out;
  auto rng = detail::make_rng(seed, kNegatives, epoch);
  std::uniform_int_distribution<std::uint32_t> pick(0, n - 1);
  out.reserve(count);
  if (free_pairs >= 0.1 * total_pairs) {
    while (out.size() < count) {
      const std::uint32_t a = pick(rng);
      const std::uint32_t b = pick(rng);
      if (a == b || graph.has_edge(a, b)) continue;
      out.emplace_back(std::min(a, b), std::max(a, b));
    }
    return out;
  }
  std::vector<NodePair> pool;
  for (std::uint32_t a = 0; a < n; ++a) {
    for (std::uint32_t b = a + 1; b < n; ++b) {
      if (!graph.has_edge(a, b)) pool.emplace_back(a, b);
    }
  }
  std::uniform_int_distribution<std::size_t> pick_pool(0, pool.size() - 1);
  for (std::size_t i = 0; i < count; ++i) out.push_back(pool[pick_pool(rng)]);
  return out;
}

std::string_view to_string(StopReason reason) {
  return reason == StopReason::kEarlyStopping ? "early_stopping" : "max_epochs";
}

bool TrainReport::same_outcome(const TrainReport& other) const {
  if (epochs.size() != other.epochs.size() || stop_reason != other.stop_reason ||
      best_epoch != other.best_epoch || holdout_auc != other.holdout_auc) {
    return false;
  }
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    const auto& a = epochs[i];
    const auto& b = other.epochs[i];
    if (a.epoch != b.epoch || a.total != b.total || a.recon != b.recon || a.kl != b.kl || a.beta != b.beta) {
      return false;
    }
  }
  return true;
}

double link_auc(const Matrix& z, const std::vector<NodePair>& pos, const std::vector<NodePair>& neg) {
  if (pos.empty() || neg.empty()) throw Error(ErrorCode::kEmptyEdgeSet, "AUC needs positive and negative pairs");
  std::vector<std::pair<double, int>> scored;
  for (auto [a, b] : pos) scored.emplace_back(z.row(a).dot(z.row(b)), 1);
  for (auto [a, b] : neg) scored.emplace_back(z.row(a).dot(z.row(b)), 0);
  std::sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  // Mann-Whitney U with mid-ranks.
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < scored.size();) {
    std::size_t j = i;
    while (j < scored.size() && scored[j].first == scored[i].first) ++j;
    const double mid = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (scored[k].second == 1) rank_sum += mid;
    }
    i = j;
  }
  const double np = static_cast<double>(pos.size());
  const double nn = static_cast<double>(neg.size());
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

TrainResult train(const EncoderGraph& full_graph, const Matrix& features, const EncoderConfig& config) {
  config.validate();
  if (static_cast<int>(features.cols()) != config.input_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "feature width " + std::to_string(features.cols()) +
                                                   " != layer_dims[0] " + std::to_string(config.input_dim()));
  }
  if (full_graph.num_nodes == 0) throw Error(ErrorCode::kEmptyEdgeSet, "encoder graph has no nodes");
  if (full_graph.edges.empty()) throw Error(ErrorCode::kEmptyEdgeSet, "encoder graph has no edges");

  // Optional link-prediction holdout: removed from message passing and from positives.
  const EncoderGraph* graph = &full_graph;
  EncoderGraph train_graph;
  std::vector<NodePair> holdout;
  if (config.holdout_fraction > 0.0) {
    std::vector<std::size_t> order(full_graph.edges.size());
    std::iota(order.begin(), order.end(), 0);
    auto rng = detail::make_rng(config.seed, kHoldout);
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_hold = static_cast<std::size_t>(
        std::floor(config.holdout_fraction * static_cast<double>(full_graph.edges.size())));
    std::set<NodePair> held;
    for (std::size_t i = 0; i < n_hold; ++i) held.insert(full_graph.edges[order[i]]);
    holdout.assign(held.begin(), held.end());
    std::array<std::vector<NodePair>, kNumRelations> kept;
    for (int r = 0; r < kNumRelations; ++r) {
      for (const auto& e : full_graph.relation_edges[r]) {
        if (!held.count(e)) kept[r].push_back(e);
      }
    }
    train_graph = EncoderGraph::from_edges(full_graph.num_nodes, kept[0], kept[1]);
    train_graph.node_ids = full_graph.node_ids;
    graph = &train_graph;
    if (graph->edges.empty()) throw Error(ErrorCode::kEmptyEdgeSet, "holdout removed every training edge");
  }

  RgcnWeights weights = RgcnWeights::initialize(config);
  RgcnWeights best = weights;
  auto params = weights.parameters();
  std::vector<Matrix> m1;
  std::vector<Matrix> m2;
  for (const Matrix* p : params) {
    m1.push_back(Matrix::Zero(p->rows(), p->cols()));
    m2.push_back(Matrix::Zero(p->rows(), p->cols()));
  }

  const auto& pos = graph->edges;
  const auto n_neg = static_cast<std::size_t>(std::llround(config.neg_ratio * static_cast<double>(pos.size())));
  TrainReport report;
  double best_total = std::numeric_limits<double>::infinity();
  int stale = 0;
  bool have_best = false;
  const Eigen::Index latent = config.latent_dim();

  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const double beta = beta_schedule(epoch, config);
    const auto neg = sample_negatives(*graph, n_neg, config.seed, static_cast<std::uint64_t>(epoch));
    const Matrix eps = sample_noise(static_cast<Eigen::Index>(graph->num_nodes), latent, config.seed,
                                    static_cast<std::uint64_t>(epoch));
    RgcnWeights grad = weights.zeros_like();
    const LossTerms t = loss_and_gradient(features, *graph, weights, eps, pos, neg, beta, &grad);
    if (!std::isfinite(t.total)) {
      std::ostringstream os;
      os << "non-finite loss at epoch " << epoch << " (recon=" << t.recon << ", kl=" << t.kl << ")";
      throw Error(ErrorCode::kNonFiniteLoss, os.str());
    }

    // Weights as evaluated this epoch are the candidate for "best".
    const bool annealed = epoch >= config.beta_epochs;
    if (annealed) {
      if (!have_best || t.total < best_total - config.min_improvement) {
        best_total = t.total;
        best = weights;
        report.best_epoch = epoch;
        have_best = true;
        stale = 0;
      } else {
        ++stale;
      }
    }

    auto g = grad.parameters();
    const double step = static_cast<double>(epoch + 1);
    const double c1 = 1.0 - std::pow(config.adam_beta1, step);
    const double c2 = 1.0 - std::pow(config.adam_beta2, step);
    for (std::size_t i = 0; i < params.size(); ++i) {
      m1[i] = config.adam_beta1 * m1[i] + (1.0 - config.adam_beta1) * (*g[i]);
      m2[i] = config.adam_beta2 * m2[i] + (1.0 - config.adam_beta2) * g[i]->cwiseAbs2();
      params[i]->array() -= config.learning_rate * (m1[i].array() / c1) /
                            ((m2[i].array() / c2).sqrt() + config.adam_eps);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.total = t.total;
    rec.recon = t.recon;
    rec.kl = t.kl;
    rec.beta = beta;
    rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.epochs.push_back(rec);

    if (annealed && stale >= config.patience) {
      report.stop_reason = StopReason::kEarlyStopping;
      break;
    }
  }
  if (!have_best) {
    best = weights;
    report.best_epoch = report.epochs.back().epoch;
  }

  TrainResult result;
  result.weights = std::move(best);
  const EncoderOutput out = rgcn_forward(features, *graph, result.weights);
  result.embedding.node_ids = full_graph.node_ids;
  result.embedding.mu = out.mu;
  result.embedding.logvar = out.logvar;
  result.embedding.z = out.mu;

  if (!holdout.empty()) {
    const auto neg = sample_negatives(full_graph, holdout.size(), config.seed, 0xffffffffULL);
    if (!neg.empty()) report.holdout_auc = link_auc(out.mu, holdout, neg);
  }
  result.report = std::move(report);
  return result;
}

TrainResult train(const graph::HetGraph& graph, const graph::FeatureMatrix& features, const EncoderConfig& config) {
  const EncoderGraph encoder = EncoderGraph::from_graph(graph);
  return train(encoder, select_rows(features, encoder.node_ids), config);
}

GradCheckResult grad_check(const EncoderConfig& config, const EncoderGraph& graph, const Matrix& features,
                           const GradCheckOptions& options) {
  RgcnWeights weights = RgcnWeights::initialize(config);
  const auto pos = graph.edges;
  auto neg = sample_negatives(graph, std::max<std::size_t>(pos.size(), 1), options.seed);
  const Matrix eps = sample_noise(static_cast<Eigen::Index>(graph.num_nodes), config.latent_dim(), options.seed);

  RgcnWeights grad = weights.zeros_like();
  loss_and_gradient(features, graph, weights, eps, pos, neg, options.beta, &grad);

  auto params = weights.parameters();
  auto grads = grad.parameters();
  // Sample (tensor, entry) pairs uniformly over all scalar parameters.
  std::vector<std::pair<std::size_t, Eigen::Index>> all;
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (Eigen::Index i = 0; i < params[t]->size(); ++i) all.emplace_back(t, i);
  }
  auto rng = detail::make_rng(options.seed, kGradCheck);
  std::shuffle(all.begin(), all.end(), rng);
  const std::size_t count = std::min(options.samples, all.size());

  GradCheckResult result;
  for (std::size_t s = 0; s < count; ++s) {
    const auto [t, i] = all[s];
    double& w = params[t]->data()[i];
    const double saved = w;
    w = saved + options.step;
    const double up = loss_and_gradient(features, graph, weights, eps, pos, neg, options.beta, nullptr).total;
    w = saved - options.step;
    const double down = loss_and_gradient(features, graph, weights, eps, pos, neg, options.beta, nullptr).total;
    w = saved;
    const double numeric = (up - down) / (2.0 * options.step);
    double analytic = grads[t]->data()[i];
    if (options.corrupt_gradient) analytic = 1.5 * analytic + 1e-3;
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    result.max_relative_error = std::max(result.max_relative_error, std::abs(analytic - numeric) / denom);
    ++result.checked;
  }
  return result;
}

}  // namespace bridgerole::vgae
