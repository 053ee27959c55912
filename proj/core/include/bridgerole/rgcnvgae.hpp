#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "bridgerole/graphbuild.hpp"

namespace bridgerole::vgae {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using NodePair = std::pair<std::uint32_t, std::uint32_t>;

/// Relations seen by the encoder: street_to_street, street_to_bridge.
inline constexpr int kNumRelations = 2;
inline constexpr double kLogvarMin = -20.0;
inline constexpr double kLogvarMax = 20.0;

struct EncoderConfig {
  /// Input width, hidden widths..., latent width. Two entries means the
  /// encoder is only the linear mu/logvar heads.
  std::vector<int> layer_dims = {21, 128, 128, 32};
  int num_bases = 2;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double beta_start = 0.01;
  double beta_end = 1.0;
  int beta_epochs = 50;
  double neg_ratio = 1.0;
  int patience = 10;
  double min_improvement = 1e-4;
  int max_epochs = 200;
  std::uint64_t seed = 0;
  /// Fraction of positive edges held out for link-prediction AUC; 0 disables.
  double holdout_fraction = 0.0;

  /// Throws Error(kInvalidConfig) on violated invariants.
  void validate() const;
  int input_dim() const { return layer_dims.front(); }
  int latent_dim() const { return layer_dims.back(); }
};

/// One R-GCN layer with basis-decomposed relation weights:
///   W_r = sum_b coefficients(r, b) * bases[b]
/// Matrices are stored input-major (d_in x d_out) so a layer computes
///   Y = sum_r (A_r H) W_r + H W_0
/// with A_r the row-normalized relation adjacency.
struct RgcnLayer {
  std::vector<Matrix> bases;
  Matrix coefficients;  // kNumRelations x B
  Matrix self_loop;

  Matrix relation_weight(int relation) const;
  int input_dim() const { return static_cast<int>(self_loop.rows()); }
  int output_dim() const { return static_cast<int>(self_loop.cols()); }
  /// B * d_in * d_out + |R| * B (self-loop excluded).
  std::size_t relation_parameter_count() const;
};

struct RgcnWeights {
  std::vector<RgcnLayer> hidden;
  RgcnLayer mu_head;
  RgcnLayer logvar_head;

  /// Glorot-uniform initialization from a seeded generator.
  static RgcnWeights initialize(const EncoderConfig& config);
  /// Same shapes, all zeros.
  RgcnWeights zeros_like() const;

  std::vector<Matrix*> parameters();
  std::vector<const Matrix*> parameters() const;
  std::size_t parameter_count() const;
};

/// Street+bridge subgraph in encoder row order.
struct EncoderGraph {
  std::size_t num_nodes = 0;
  /// HetGraph node id of each encoder row (empty for hand-built graphs).
  std::vector<graph::NodeId> node_ids;
  /// Undirected positive pairs (i < j), both relations, sorted.
  std::vector<NodePair> edges;
  std::array<std::vector<NodePair>, kNumRelations> relation_edges;
  std::array<SparseMatrix, kNumRelations> mean_adjacency;

  /// Builds symmetric, row-normalized adjacency per relation. Duplicate and
  /// self pairs are dropped.
  static EncoderGraph from_edges(std::size_t num_nodes, std::vector<NodePair> street_edges,
                                 std::vector<NodePair> bridge_edges);
  static EncoderGraph from_graph(const graph::HetGraph& graph);

  bool has_edge(std::uint32_t a, std::uint32_t b) const;
};

/// Rows of `features` belonging to `encoder.node_ids`.
Matrix select_rows(const graph::FeatureMatrix& features, const std::vector<graph::NodeId>& ids);

struct EncoderOutput {
  std::vector<Matrix> hidden;  // post-ReLU activation of each hidden layer
  Matrix mu;
  Matrix logvar;
};

/// Throws Error(kDimensionMismatch) when feature or weight shapes disagree.
EncoderOutput rgcn_forward(const Matrix& features, const EncoderGraph& graph, const RgcnWeights& weights);

/// Standard normal noise, deterministic per (seed, epoch) and row order.
Matrix sample_noise(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, std::uint64_t epoch = 0);

/// z = mu + exp(clamp(logvar)/2) * eps.
Matrix reparameterize(const Matrix& mu, const Matrix& logvar, const Matrix& eps);
Matrix reparameterize(const Matrix& mu, const Matrix& logvar, std::uint64_t seed, std::uint64_t epoch = 0);

double sigmoid(double x);
double decode_edge(const Vector& zi, const Vector& zj);

struct LossTerms {
  double total = 0.0;
  double recon = 0.0;
  double kl = 0.0;
};

/// recon: mean BCE over positive (label 1) and negative (label 0) pairs;
/// kl: mean over nodes of 0.5 * sum(exp(lv) + mu^2 - 1 - lv), divided again
/// by the node count so it stays on the scale of one reconstructed pair.
/// Throws Error(kEmptyEdgeSet) when both pair lists are empty.
LossTerms loss(const Matrix& z, const Matrix& mu, const Matrix& logvar, const std::vector<NodePair>& pos,
               const std::vector<NodePair>& neg, double beta);

double beta_schedule(int epoch, const EncoderConfig& config = {});

/// Loss for fixed noise and pairs; accumulates d(total)/d(weights) into
/// `grad` when non-null (grad must have the shapes of `weights`).
LossTerms loss_and_gradient(const Matrix& features, const EncoderGraph& graph, const RgcnWeights& weights,
                            const Matrix& eps, const std::vector<NodePair>& pos,
                            const std::vector<NodePair>& neg, double beta, RgcnWeights* grad);

/// Uniform non-edge pairs (i < j). Falls back to enumeration when the graph
/// is dense; may return fewer than `count` only if fewer non-edges exist.
std::vector<NodePair> sample_negatives(const EncoderGraph& graph, std::size_t count, std::uint64_t seed,
                                       std::uint64_t epoch = 0);

struct EpochRecord {
  int epoch = 0;
  double total = 0.0;
  double recon = 0.0;
  double kl = 0.0;
  double beta = 0.0;
  double wall_time_s = 0.0;
};

enum class StopReason { kMaxEpochs, kEarlyStopping };
std::string_view to_string(StopReason reason);

struct TrainReport {
  std::vector<EpochRecord> epochs;
  StopReason stop_reason = StopReason::kMaxEpochs;
  int best_epoch = 0;
  std::optional<double> holdout_auc;

  /// Equality on every field except wall-clock timings.
  bool same_outcome(const TrainReport& other) const;
};

struct LatentEmbedding {
  std::vector<graph::NodeId> node_ids;
  Matrix mu;
  Matrix logvar;
  Matrix z;  // equals mu: inference runs in mean mode
};

struct TrainResult {
  RgcnWeights weights;
  LatentEmbedding embedding;
  TrainReport report;
};

/// Adam training with beta annealing and negative resampling per epoch.
/// Early stopping counts epochs without a `min_improvement` drop in total
/// loss, starting once annealing has finished; the best post-annealing
/// weights are returned. Throws Error(kNonFiniteLoss) naming the epoch.
TrainResult train(const EncoderGraph& graph, const Matrix& features, const EncoderConfig& config);
TrainResult train(const graph::HetGraph& graph, const graph::FeatureMatrix& features, const EncoderConfig& config);

/// Area under the ROC curve of inner-product scores (ties count one half).
double link_auc(const Matrix& z, const std::vector<NodePair>& pos, const std::vector<NodePair>& neg);

struct GradCheckOptions {
  std::size_t samples = 20;
  double step = 1e-5;
  std::uint64_t seed = 7;
  /// Negative control: scales the analytic gradient before comparing.
  bool corrupt_gradient = false;
  double beta = 0.5;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
};

/// Central finite differences vs analytic gradients on sampled parameters.
GradCheckResult grad_check(const EncoderConfig& config, const EncoderGraph& graph, const Matrix& features,
                           const GradCheckOptions& options = {});

// Checkpoint container (JSON text).
void write_checkpoint(const std::string& path, const EncoderConfig& config, const RgcnWeights& weights,
                      const LatentEmbedding& embedding);
struct Checkpoint {
  EncoderConfig config;
  RgcnWeights weights;
  LatentEmbedding embedding;
};
Checkpoint read_checkpoint(const std::string& path);

/// node_id followed by one column per latent dimension of mu.
void write_embeddings_csv(const std::string& path, const LatentEmbedding& embedding);

}  // namespace bridgerole::vgae
