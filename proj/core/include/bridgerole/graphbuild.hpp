#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bridgerole/geomodel.hpp"

namespace bridgerole::graph {

using NodeId = std::uint32_t;

enum class NodeKind : std::uint8_t { kBridge, kStreet, kBuilding };
enum class BuildingCategory : std::uint8_t { kShop, kHospital, kResidence };
enum class RelationKind : std::uint8_t {
  kStreetToStreet,
  kStreetToBridge,
  kToShop,
  kToHospital,
  kToResidence,
};

inline constexpr std::array<BuildingCategory, 3> kCategories = {
    BuildingCategory::kShop, BuildingCategory::kHospital, BuildingCategory::kResidence};

std::string_view to_string(NodeKind kind);
std::string_view to_string(BuildingCategory category);
std::string_view to_string(RelationKind relation);
RelationKind relation_for(BuildingCategory category);

struct Node {
  NodeId id = 0;
  NodeKind kind = NodeKind::kStreet;
  geo::GeoPoint geo;
  geo::PlanePoint plane;
  std::optional<std::string> name;
  std::optional<BuildingCategory> category;
  /// Streets: segment tagged as trunk. Bridges: highway_count > 0.
  bool is_highway = false;
  std::optional<double> span_m;
  std::optional<double> year_built;
};

struct StreetNeighbor {
  NodeId id;
  double length_m;
};

/// Typed road-bridge-building graph. Node ids are dense and assigned in
/// insertion order; every per-node table is indexed by id.
class HetGraph {
 public:
  NodeId add_node(Node node);

  /// Undirected street edge; self-loops and duplicates are ignored.
  /// Returns true when a new edge was inserted.
  bool add_street_edge(NodeId a, NodeId b);

  /// Returns the street node at the deduplicated coordinate, creating it if needed.
  NodeId street_node_at(const geo::GeoPoint& p);

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const Node& node(NodeId id) const { return nodes_.at(id); }
  Node& mutable_node(NodeId id) { return nodes_.at(id); }
  std::size_t size() const noexcept { return nodes_.size(); }

  std::vector<NodeId> ids_of(NodeKind kind) const;
  std::size_t count(NodeKind kind) const;
  std::size_t edge_count(RelationKind relation) const;

  const std::vector<StreetNeighbor>& street_neighbors(NodeId id) const { return street_adj_.at(id); }

  void set_snapped(NodeId bridge, NodeId street);
  std::optional<NodeId> snapped_street(NodeId bridge) const { return snapped_.at(bridge); }
  /// Bridges snapped onto the given street node, ascending id.
  std::vector<NodeId> bridges_at(NodeId street) const;

  void clear_building_edges();
  void set_building_edges(NodeId bridge, BuildingCategory category, std::vector<NodeId> targets);
  const std::vector<NodeId>& building_edges(NodeId bridge, BuildingCategory category) const {
    return building_edges_[static_cast<std::size_t>(category)].at(bridge);
  }

  void set_highway_count(NodeId bridge, std::uint32_t count);
  std::uint32_t highway_count(NodeId bridge) const { return highway_count_.at(bridge); }

  /// Street edges as (a, b) with a < b, sorted.
  std::vector<std::pair<NodeId, NodeId>> street_edges() const;

 private:
  std::vector<Node> nodes_;
  std::vector<std::vector<StreetNeighbor>> street_adj_;
  std::vector<std::optional<NodeId>> snapped_;
  std::array<std::vector<std::vector<NodeId>>, 3> building_edges_;
  std::vector<std::uint32_t> highway_count_;
  std::map<std::pair<std::int64_t, std::int64_t>, NodeId> street_index_;
};

/// Property keys consulted while reading feature collections.
struct PropertyKeys {
  std::string highway = "highway";
  std::vector<std::string> trunk_values = {"trunk"};
  std::string name = "name";
  std::string span = "span_length";
  std::string year = "year_built";
  std::string amenity = "amenity";
  std::string hospital_value = "hospital";
  std::string shop = "shop";
  std::string building = "building";
  std::vector<std::string> residence_values = {"residential"};
};

struct IngestReport {
  std::size_t accepted = 0;
  std::size_t malformed = 0;
  std::size_t dropped_unnamed = 0;
  std::size_t dropped_unknown_category = 0;
  std::size_t dropped_out_of_radius = 0;
};

inline constexpr double kDefaultRadiusM = 2000.0;
inline constexpr double kCoordinateDedupDeg = 1e-7;

/// Line features become street nodes (one per vertex, deduplicated at 1e-7°)
/// joined by undirected segment edges. Throws kEmptyNetwork when no street
/// node exists afterwards and kFormat when the document is not a feature collection.
IngestReport ingest_streets(HetGraph& graph, std::string_view geojson, const PropertyKeys& keys = {});

/// Named point/line/polygon features become bridge nodes at their centroid.
IngestReport ingest_bridges(HetGraph& graph, std::string_view geojson, const PropertyKeys& keys = {});

/// Buildings farther than `radius_m` (haversine) from every bridge are dropped.
IngestReport ingest_buildings(HetGraph& graph, std::string_view geojson, const PropertyKeys& keys = {},
                              double radius_m = kDefaultRadiusM);

/// Links every bridge to its nearest street node (planar, ties to lowest id).
void snap_bridges(HetGraph& graph);

struct KnnParams {
  int k_shop = 5;
  int k_hospital = 5;
  int k_residence = 20;
  double radius_m = kDefaultRadiusM;

  int k_for(BuildingCategory category) const;
  friend bool operator==(const KnnParams&, const KnnParams&) = default;
};

/// Rebuilds all to_* edges: per bridge and category, buildings within
/// `radius_m` haversine, ranked by planar distance then id, top k kept.
void knn_building_edges(HetGraph& graph, const KnnParams& params);

/// Normalized Brandes betweenness over the unweighted street subgraph,
/// indexed by node id (zero for non-street nodes). Each connected component
/// is normalized by (n-1)(n-2)/2 of its own size.
std::vector<double> betweenness(const HetGraph& graph);

/// Trunk street nodes within `radius_m` network distance of the bridge's
/// snapped street node.
std::uint32_t highway_metapath_count(const HetGraph& graph, NodeId bridge,
                                     double radius_m = kDefaultRadiusM);

/// Stores highway_metapath_count for every bridge and sets is_highway.
void compute_highway_counts(HetGraph& graph, double radius_m = kDefaultRadiusM);

inline constexpr std::size_t kFeatureWidth = 21;

namespace feature {
inline constexpr std::size_t kSpanLength = 0;
inline constexpr std::size_t kYearBuilt = 1;
inline constexpr std::size_t kDegree = 2;
inline constexpr std::size_t kBetweenness = 3;
inline constexpr std::size_t kHighwayCount = 4;
inline constexpr std::size_t kShopCount = 5;
inline constexpr std::size_t kHospitalCount = 6;
inline constexpr std::size_t kResidenceCount = 7;
inline constexpr std::size_t kIsHighway = 8;
inline constexpr std::size_t kKindBridge = 9;
inline constexpr std::size_t kKindStreet = 10;
inline constexpr std::size_t kKindBuilding = 11;
inline constexpr std::size_t kPlaneX = 12;
inline constexpr std::size_t kPlaneY = 13;
inline constexpr std::size_t kHighwayDistance = 14;
inline constexpr std::size_t kStreetDensity = 15;
inline constexpr std::size_t kNearestShop = 16;
inline constexpr std::size_t kNearestHospital = 17;
inline constexpr std::size_t kNearestResidence = 18;
inline constexpr std::size_t kBuildingDensity = 19;
inline constexpr std::size_t kBias = 20;
}  // namespace feature

/// Unreachable trunk distance is reported as this many meters.
inline constexpr double kUnreachableHighwayM = 20'000.0;

/// One row per node id, kFeatureWidth columns (layout in `feature`).
using FeatureMatrix = Eigen::MatrixXd;

FeatureMatrix build_features(const HetGraph& graph);

/// Convenience: snap, k-NN, highway counts in that order.
void build_edges(HetGraph& graph, const KnnParams& params);

}  // namespace bridgerole::graph
