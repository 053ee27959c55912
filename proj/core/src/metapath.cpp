#include "bridgerole/metapath.hpp"

#include "bridgerole/error.hpp"

namespace bridgerole::metapath {

std::uint32_t MetapathProfile::count(BuildingCategory category) const {
  switch (category) {
    case BuildingCategory::kShop: return shop_paths;
    case BuildingCategory::kHospital: return hospital_paths;
    case BuildingCategory::kResidence: return residence_paths;
  }
  return 0;
}

void ClassifierThresholds::validate() const {
  const bool ok = balanced_max < medical_min && medical_min <= supply_min && supply_min <= 1.0 &&
                  balanced_max < residential_min && residential_min <= 1.0 && balanced_max >= 0.0;
  if (!ok) {
    throw Error(ErrorCode::kInvalidConfig,
                "thresholds must satisfy balanced_max < medical_min <= supply_min <= 1 and "
                "balanced_max < residential_min <= 1");
  }
}

std::string_view to_string(Category category) {
  switch (category) {
    case Category::kSupplyChain: return "SupplyChain";
    case Category::kMedicalAccess: return "MedicalAccess";
    case Category::kResidentialProtection: return "ResidentialProtection";
    case Category::kBalancedMultiUse: return "BalancedMultiUse";
    case Category::kMixed: return "Mixed";
  }
  return "?";
}

std::string BridgeClassification::label() const {
  std::string out(to_string(category));
  if (category == Category::kMixed) {
    out += '(';
    out += graph::to_string(dominant);
    out += ')';
  }
  return out;
}

std::optional<std::pair<Category, std::optional<BuildingCategory>>> parse_label(std::string_view label) {
  for (auto c : {Category::kSupplyChain, Category::kMedicalAccess, Category::kResidentialProtection,
                 Category::kBalancedMultiUse}) {
    if (label == to_string(c)) return std::make_pair(c, std::optional<BuildingCategory>{});
  }
  for (auto b : graph::kCategories) {
    if (label == "Mixed(" + std::string(graph::to_string(b)) + ")") {
      return std::make_pair(Category::kMixed, std::optional<BuildingCategory>{b});
    }
  }
  return std::nullopt;
}

std::vector<MetapathProfile> profile(const graph::HetGraph& graph) {
  std::vector<MetapathProfile> out;
  for (NodeId b : graph.ids_of(graph::NodeKind::kBridge)) {
    MetapathProfile p;
    p.bridge_id = b;
    p.shop_paths = static_cast<std::uint32_t>(graph.building_edges(b, BuildingCategory::kShop).size());
    p.hospital_paths = static_cast<std::uint32_t>(graph.building_edges(b, BuildingCategory::kHospital).size());
    p.residence_paths = static_cast<std::uint32_t>(graph.building_edges(b, BuildingCategory::kResidence).size());
    p.highway_count = graph.highway_count(b);
    p.is_highway = p.highway_count > 0;
    out.push_back(p);
  }
  return out;
}

double confidence(const MetapathProfile& profile, BuildingCategory category) {
  const std::uint32_t total = profile.total_paths();
  if (total == 0) return 0.0;
  return static_cast<double>(profile.count(category)) / static_cast<double>(total);
}

BuildingCategory dominant_category(const MetapathProfile& profile) {
  BuildingCategory best = BuildingCategory::kShop;
  for (auto c : graph::kCategories) {
    if (profile.count(c) > profile.count(best)) best = c;
  }
  return best;
}

BridgeClassification classify(const MetapathProfile& profile, const ClassifierThresholds& t) {
  BridgeClassification out;
  out.bridge_id = profile.bridge_id;
  out.total_paths = profile.total_paths();
  out.dominant = dominant_category(profile);
  out.confidence = confidence(profile, out.dominant);
  const double conf = out.confidence;

  if (out.total_paths == 0) {
    out.category = Category::kBalancedMultiUse;
  } else if (out.dominant == BuildingCategory::kShop && conf >= t.supply_min) {
    out.category = Category::kSupplyChain;
  } else if (out.dominant == BuildingCategory::kHospital && conf >= t.medical_min) {
    out.category = Category::kMedicalAccess;
  } else if (out.dominant == BuildingCategory::kResidence && conf >= t.residential_min) {
    out.category = Category::kResidentialProtection;
  } else if (conf < t.balanced_max) {
    out.category = Category::kBalancedMultiUse;
  } else {
    out.category = Category::kMixed;
  }
  return out;
}

std::vector<BridgeClassification> classify_all(const std::vector<MetapathProfile>& profiles,
                                               const ClassifierThresholds& thresholds) {
  std::vector<BridgeClassification> out;
  out.reserve(profiles.size());
  for (const auto& p : profiles) out.push_back(classify(p, thresholds));
  return out;
}

std::vector<CoverageRow> coverage_report(const graph::HetGraph& graph, const std::vector<graph::KnnParams>& k_values) {
  std::vector<CoverageRow> rows;
  graph::HetGraph work = graph;
  for (const auto& params : k_values) {
    graph::knn_building_edges(work, params);
    CoverageRow row;
    row.params = params;
    for (const auto& p : profile(work)) {
      for (std::size_t c = 0; c < 3; ++c) {
        const auto n = p.count(graph::kCategories[c]);
        row.totals[c] += n;
        if (n > 0) ++row.bridges_with_paths[c];
      }
    }
    for (std::size_t c = 0; c < 3; ++c) {
      row.deltas[c] = static_cast<std::int64_t>(row.totals[c]) -
                      static_cast<std::int64_t>(rows.empty() ? row.totals[c] : rows.front().totals[c]);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace bridgerole::metapath
