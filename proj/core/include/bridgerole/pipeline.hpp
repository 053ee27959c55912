#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bridgerole/embedanalysis.hpp"
#include "bridgerole/graphbuild.hpp"
#include "bridgerole/metapath.hpp"
#include "bridgerole/rgcnvgae.hpp"

namespace bridgerole::pipeline {

using graph::NodeId;

struct PipelineConfig {
  std::string streets_path;
  std::string bridges_path;
  std::string buildings_path;
  graph::PropertyKeys property_keys;
  int k_shop = 5;
  int k_hospital = 5;
  int k_residence = 20;
  double radius_m = graph::kDefaultRadiusM;
  metapath::ClassifierThresholds thresholds;
  vgae::EncoderConfig encoder;
  std::uint64_t cluster_seed = 42;
  std::string output_dir = "out";

  /// Throws kInvalidK for k < 1, kInvalidConfig for other violations.
  void validate() const;
  graph::KnnParams knn() const { return {k_shop, k_hospital, k_residence, radius_m}; }
};

/// Parses the JSON config document. Unknown keys anywhere are rejected
/// (kInvalidConfig). Relative input/output paths are resolved against
/// `base_dir` when it is non-empty.
PipelineConfig config_from_json(std::string_view text, const std::string& base_dir = {});
std::string config_to_json(const PipelineConfig& config);
/// Reads a config file; relative paths resolve against its directory.
PipelineConfig load_config(const std::string& path);

/// The three GeoJSON feature collections a run consumes.
struct InputDocuments {
  std::string streets;
  std::string bridges;
  std::string buildings;
};

/// Writes streets/bridges/buildings .geojson into `dir` (created if missing)
/// and returns a default config reading them, with outputs in `dir`/out.
PipelineConfig write_inputs(const InputDocuments& documents, const std::string& dir);

enum class Stage { kIngest, kBuild, kTrain, kProfile, kClassify, kAnalyze, kExport };
std::string_view to_string(Stage stage);

/// Frozen result of a run. Every per-bridge vector is in ascending bridge id
/// order and has `bridge_ids.size()` entries once its stage has run.
struct CitySnapshot {
  PipelineConfig config;
  graph::HetGraph graph;
  graph::FeatureMatrix features;
  vgae::RgcnWeights weights;
  vgae::LatentEmbedding embedding;  // street + bridge rows
  vgae::TrainReport train_report;

  std::vector<NodeId> bridge_ids;
  std::vector<metapath::MetapathProfile> profiles;
  std::vector<metapath::BridgeClassification> classifications;

  analysis::ClusterAssignment clusters;
  analysis::Matrix coords2d;  // bridges x 2
  std::string reduction;      // "umap" or "pca"
  std::vector<analysis::CorrelationRow> correlations;

  std::string content_hash;  // SHA-256 hex, timestamp excluded
  std::string created_at;    // ISO-8601 UTC

  std::size_t bridge_count() const { return bridge_ids.size(); }
  /// mu rows of the bridges, in bridge_ids order.
  analysis::Matrix bridge_embeddings() const;
  /// Cluster label of bridge row i, or nullopt before analysis.
  std::optional<int> cluster_of(std::size_t row) const;
  /// Per-category counts indexed by metapath::Category.
  std::array<std::size_t, 5> category_counts() const;
};

/// Content hash over the graph, features, embeddings, training record
/// (without wall times), profiles, classifications, clusters, 2D coordinates
/// and correlations.
std::string compute_content_hash(const CitySnapshot& snapshot);

struct RunOptions {
  Stage last_stage = Stage::kExport;
  /// Write artifacts into config.output_dir.
  bool write_outputs = true;
};

/// Runs ingest -> build -> train -> profile -> classify -> analyze -> export.
/// Errors are rethrown with the failing stage name attached.
CitySnapshot run_pipeline(const PipelineConfig& config, const RunOptions& options = {});

struct WhatIfRequest {
  int k_shop = 5;
  int k_hospital = 5;
  int k_residence = 20;
  std::optional<metapath::ClassifierThresholds> thresholds;
  std::optional<std::size_t> budget_n;

  /// Request that reproduces the snapshot's own configuration.
  static WhatIfRequest identity(const CitySnapshot& snapshot);
};

/// Parses a request body; absent fields take the snapshot's values.
WhatIfRequest whatif_request_from_json(std::string_view body, const CitySnapshot& snapshot);

struct BridgeChange {
  NodeId bridge_id = 0;
  metapath::MetapathProfile before;
  metapath::MetapathProfile after;
  metapath::BridgeClassification class_before;
  metapath::BridgeClassification class_after;
  bool category_changed() const { return class_before.label() != class_after.label(); }
};

struct WhatIfResult {
  /// Bridges whose profile or classification differs, ascending id.
  std::vector<BridgeChange> changed;
  std::array<std::size_t, 5> counts_before{};
  std::array<std::size_t, 5> counts_after{};
  std::array<std::uint64_t, 3> coverage_before{};  // shop, hospital, residence totals
  std::array<std::uint64_t, 3> coverage_after{};
  std::vector<metapath::BridgeClassification> classifications;  // after, ascending id
  std::vector<metapath::MetapathProfile> profiles;              // after, ascending id
  std::vector<NodeId> budget;                                   // ranked, empty without budget_n
};

/// Recomputes k-NN edges, profiles and classifications on a copy of the
/// graph; the encoder is not retrained. Throws kInvalidK for k < 1 or a
/// budget larger than the bridge count.
WhatIfResult whatif(const CitySnapshot& snapshot, const WhatIfRequest& request);

/// Funding order: SupplyChain > MedicalAccess > ResidentialProtection >
/// Mixed > BalancedMultiUse, then confidence desc, total paths desc, id asc.
std::vector<NodeId> rank_for_budget(const std::vector<metapath::BridgeClassification>& classifications,
                                    std::size_t budget_n);

// Exports ---------------------------------------------------------------

/// "#1f77b4" etc.
std::string_view category_color(metapath::Category category);

std::string overlay_geojson(const CitySnapshot& snapshot);

struct OverlayFeature {
  std::string name;
  double lat = 0.0;
  double lon = 0.0;
  std::string category;  // label, e.g. "Mixed(shop)"
  double confidence = 0.0;
  std::uint32_t shop_paths = 0;
  std::uint32_t hospital_paths = 0;
  std::uint32_t residence_paths = 0;
  std::optional<int> cluster_id;
  std::string color;
  std::optional<NodeId> bridge_id;
};
/// Reads an overlay document back. Throws kFormat on structural problems.
std::vector<OverlayFeature> parse_overlay(std::string_view geojson);

inline constexpr std::array<std::string_view, 13> kClassificationColumns = {
    "bridge_id", "name", "lat", "lon", "shop_paths", "hospital_paths", "residence_paths",
    "highway_count", "category", "confidence", "cluster_id", "u", "v"};

std::string classification_csv(const CitySnapshot& snapshot);
std::string metrics_json(const CitySnapshot& snapshot);

// JSON documents shared by the CLI and the service.
std::string bridges_json(const CitySnapshot& snapshot);
std::string classification_json(const CitySnapshot& snapshot);
std::string embedding2d_json(const CitySnapshot& snapshot);
std::string whatif_json(const CitySnapshot& snapshot, const WhatIfResult& result);

/// Writes classification.csv, metrics.json, overlay.geojson,
/// embeddings.csv, coords2d.csv, checkpoint.json and snapshot.json into `dir`
/// (created if missing). Artifacts for stages that have not run are skipped.
void write_outputs(const CitySnapshot& snapshot, const std::string& dir);

void save_snapshot(const CitySnapshot& snapshot, const std::string& path);
/// Verifies the stored content hash (kFormat on mismatch).
CitySnapshot load_snapshot(const std::string& path);

}  // namespace bridgerole::pipeline
