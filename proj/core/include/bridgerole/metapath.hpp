#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bridgerole/graphbuild.hpp"

namespace bridgerole::metapath {

using graph::BuildingCategory;
using graph::NodeId;

/// Highway -> bridge -> building connections of one bridge.
struct MetapathProfile {
  NodeId bridge_id = 0;
  std::uint32_t shop_paths = 0;
  std::uint32_t hospital_paths = 0;
  std::uint32_t residence_paths = 0;
  std::uint32_t highway_count = 0;
  bool is_highway = false;

  std::uint32_t count(BuildingCategory category) const;
  std::uint32_t total_paths() const { return shop_paths + hospital_paths + residence_paths; }
  /// Paths that actually start at a highway: total for highway bridges, else 0.
  std::uint32_t highway_origin_paths() const { return is_highway ? total_paths() : 0; }

  friend bool operator==(const MetapathProfile&, const MetapathProfile&) = default;
};

enum class Category : std::uint8_t {
  kSupplyChain,
  kMedicalAccess,
  kResidentialProtection,
  kBalancedMultiUse,
  kMixed,
};

struct ClassifierThresholds {
  double supply_min = 0.9;
  double medical_min = 0.7;
  double residential_min = 0.7;
  double balanced_max = 0.3;

  /// Throws Error(kInvalidConfig) unless
  /// balanced_max < medical_min <= supply_min <= 1 and
  /// balanced_max < residential_min <= 1.
  void validate() const;
  friend bool operator==(const ClassifierThresholds&, const ClassifierThresholds&) = default;
};

struct BridgeClassification {
  NodeId bridge_id = 0;
  Category category = Category::kBalancedMultiUse;
  double confidence = 0.0;
  BuildingCategory dominant = BuildingCategory::kShop;
  std::uint32_t total_paths = 0;

  /// "SupplyChain", ..., "Mixed(shop)".
  std::string label() const;
  friend bool operator==(const BridgeClassification&, const BridgeClassification&) = default;
};

std::string_view to_string(Category category);
/// Inverse of BridgeClassification::label(); nullopt for unknown text.
std::optional<std::pair<Category, std::optional<BuildingCategory>>> parse_label(std::string_view label);

/// One profile per bridge, ascending bridge id.
std::vector<MetapathProfile> profile(const graph::HetGraph& graph);

/// Share of `category` among the bridge's paths; 0 when it has none.
double confidence(const MetapathProfile& profile, BuildingCategory category);

/// Argmax category with ties resolved shop > hospital > residence.
BuildingCategory dominant_category(const MetapathProfile& profile);

/// Boundaries are inclusive: a share exactly at a minimum qualifies.
BridgeClassification classify(const MetapathProfile& profile, const ClassifierThresholds& thresholds = {});

std::vector<BridgeClassification> classify_all(const std::vector<MetapathProfile>& profiles,
                                               const ClassifierThresholds& thresholds = {});

struct CoverageRow {
  graph::KnnParams params;
  std::array<std::uint64_t, 3> totals{};  // shop, hospital, residence path totals
  std::array<std::int64_t, 3> deltas{};   // versus the first row
  /// Bridges with at least one path of each category.
  std::array<std::uint64_t, 3> bridges_with_paths{};
};

/// Re-runs k-NN on a copy of `graph` for each configuration.
std::vector<CoverageRow> coverage_report(const graph::HetGraph& graph, const std::vector<graph::KnnParams>& k_values);

}  // namespace bridgerole::metapath
