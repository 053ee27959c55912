#include <algorithm>

#include "bridgerole/error.hpp"
#include "bridgerole/pipeline.hpp"
#include "pipeline_internal.hpp"

namespace bridgerole::pipeline {

using metapath::Category;

WhatIfRequest WhatIfRequest::identity(const CitySnapshot& snapshot) {
  WhatIfRequest r;
  r.k_shop = snapshot.config.k_shop;
  r.k_hospital = snapshot.config.k_hospital;
  r.k_residence = snapshot.config.k_residence;
  return r;
}

WhatIfRequest whatif_request_from_json(std::string_view body, const CitySnapshot& snapshot) {
  WhatIfRequest r = WhatIfRequest::identity(snapshot);
  if (body.find_first_not_of(" \t\r\n") == std::string_view::npos) return r;
  const auto j = detail::parse_json(body, "whatif request");
  constexpr std::string_view where = "whatif request";
  detail::require_known_keys(j, {"k_shop", "k_hospital", "k_residence", "thresholds", "budget_n"}, where);
  detail::read_opt(j, "k_shop", r.k_shop, where);
  detail::read_opt(j, "k_hospital", r.k_hospital, where);
  detail::read_opt(j, "k_residence", r.k_residence, where);
  if (auto it = j.find("thresholds"); it != j.end() && !it->is_null()) r.thresholds = thresholds_from_json(*it);
  if (auto it = j.find("budget_n"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer() || it->get<long long>() < 0) {
      throw Error(ErrorCode::kInvalidK, "budget_n must be a non-negative integer");
    }
    r.budget_n = it->get<std::size_t>();
  }
  return r;
}

namespace {

int priority(Category c) {
  switch (c) {
    case Category::kSupplyChain: return 0;
    case Category::kMedicalAccess: return 1;
    case Category::kResidentialProtection: return 2;
    case Category::kMixed: return 3;
    case Category::kBalancedMultiUse: return 4;
  }
  return 5;
}

std::array<std::uint64_t, 3> coverage(const std::vector<metapath::MetapathProfile>& profiles) {
  std::array<std::uint64_t, 3> out{};
  for (const auto& p : profiles) {
    out[0] += p.shop_paths;
    out[1] += p.hospital_paths;
    out[2] += p.residence_paths;
  }
  return out;
}

std::array<std::size_t, 5> counts(const std::vector<metapath::BridgeClassification>& cls) {
  std::array<std::size_t, 5> out{};
  for (const auto& c : cls) ++out[static_cast<std::size_t>(c.category)];
  return out;
}

}  // namespace

std::vector<NodeId> rank_for_budget(const std::vector<metapath::BridgeClassification>& classifications,
                                    std::size_t budget_n) {
  if (budget_n > classifications.size()) {
    throw Error(ErrorCode::kInvalidK, "budget_n exceeds the bridge count");
  }
  std::vector<const metapath::BridgeClassification*> order;
  for (const auto& c : classifications) order.push_back(&c);
  std::sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
    if (priority(a->category) != priority(b->category)) return priority(a->category) < priority(b->category);
    if (a->confidence != b->confidence) return a->confidence > b->confidence;
    if (a->total_paths != b->total_paths) return a->total_paths > b->total_paths;
    return a->bridge_id < b->bridge_id;
  });
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < budget_n; ++i) out.push_back(order[i]->bridge_id);
  return out;
}

WhatIfResult whatif(const CitySnapshot& snapshot, const WhatIfRequest& request) {
  if (request.k_shop < 1 || request.k_hospital < 1 || request.k_residence < 1) {
    throw Error(ErrorCode::kInvalidK, "k values must be >= 1");
  }
  if (request.budget_n && *request.budget_n > snapshot.bridge_count()) {
    throw Error(ErrorCode::kInvalidK, "budget_n exceeds the bridge count");
  }
  const auto thresholds = request.thresholds.value_or(snapshot.config.thresholds);
  thresholds.validate();

  graph::KnnParams params = snapshot.config.knn();
  params.k_shop = request.k_shop;
  params.k_hospital = request.k_hospital;
  params.k_residence = request.k_residence;

  WhatIfResult out;
  if (params == snapshot.config.knn()) {
    out.profiles = snapshot.profiles;
  } else {
    graph::HetGraph work = snapshot.graph;
    graph::knn_building_edges(work, params);
    out.profiles = metapath::profile(work);
  }
  out.classifications = metapath::classify_all(out.profiles, thresholds);

  for (std::size_t i = 0; i < out.profiles.size(); ++i) {
    BridgeChange ch;
    ch.bridge_id = out.profiles[i].bridge_id;
    ch.before = snapshot.profiles.at(i);
    ch.after = out.profiles[i];
    ch.class_before = snapshot.classifications.at(i);
    ch.class_after = out.classifications[i];
    if (ch.before != ch.after || ch.class_before != ch.class_after) out.changed.push_back(std::move(ch));
  }
  out.counts_before = counts(snapshot.classifications);
  out.counts_after = counts(out.classifications);
  out.coverage_before = coverage(snapshot.profiles);
  out.coverage_after = coverage(out.profiles);
  if (request.budget_n) out.budget = rank_for_budget(out.classifications, *request.budget_n);
  return out;
}

}  // namespace bridgerole::pipeline
