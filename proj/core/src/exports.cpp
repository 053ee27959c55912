#include <charconv>
#include <filesystem>

#include "bridgerole/error.hpp"
#include "bridgerole/pipeline.hpp"
#include "pipeline_internal.hpp"

namespace bridgerole::pipeline {

using detail::json;
using metapath::Category;

namespace {

constexpr std::array<Category, 5> kAllCategories = {Category::kSupplyChain, Category::kMedicalAccess,
                                                    Category::kResidentialProtection,
                                                    Category::kBalancedMultiUse, Category::kMixed};

std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

const graph::Node& bridge_node(const CitySnapshot& s, std::size_t row) { return s.graph.node(s.bridge_ids[row]); }

std::string bridge_name(const CitySnapshot& s, std::size_t row) {
  return bridge_node(s, row).name.value_or(std::string());
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json profile_json(const metapath::MetapathProfile& p, const metapath::BridgeClassification& c) {
  return json{{"category", c.label()},
              {"confidence", c.confidence},
              {"shop_paths", p.shop_paths},
              {"hospital_paths", p.hospital_paths},
              {"residence_paths", p.residence_paths},
              {"total_paths", c.total_paths}};
}

json counts_json(const std::array<std::size_t, 5>& counts) {
  json out = json::object();
  for (auto c : kAllCategories) out[std::string(metapath::to_string(c))] = counts[static_cast<std::size_t>(c)];
  return out;
}

json coverage_json(const std::array<std::uint64_t, 3>& cov) {
  return json{{"shop", cov[0]}, {"hospital", cov[1]}, {"residence", cov[2]}};
}

json overlay_doc(const CitySnapshot& s) {
  json features = json::array();
  for (std::size_t i = 0; i < s.bridge_count(); ++i) {
    const auto& n = bridge_node(s, i);
    const auto& c = s.classifications.at(i);
    const auto& p = s.profiles.at(i);
    const auto cluster = s.cluster_of(i);
    features.push_back(
        json{{"type", "Feature"},
             {"geometry", {{"type", "Point"}, {"coordinates", {n.geo.lon, n.geo.lat}}}},
             {"properties",
              {{"bridge_id", n.id},
               {"name", n.name.value_or("")},
               {"category", c.label()},
               {"confidence", c.confidence},
               {"shop_paths", p.shop_paths},
               {"hospital_paths", p.hospital_paths},
               {"residence_paths", p.residence_paths},
               {"cluster_id", cluster ? json(*cluster) : json(nullptr)},
               {"color", category_color(c.category)}}}});
  }
  return json{{"type", "FeatureCollection"}, {"features", std::move(features)}};
}

json metrics_doc(const CitySnapshot& s) {
  json correlations = json::array();
  for (const auto& r : s.correlations) {
    correlations.push_back(json{{"dim", r.dim},
                                {"spearman_r", r.defined ? json(r.spearman_r) : json(nullptr)},
                                {"p_value", r.defined ? json(r.p_value) : json(nullptr)},
                                {"defined", r.defined}});
  }
  const auto& cl = s.clusters;
  const std::size_t n = s.bridge_count();
  json clustering = nullptr;
  if (!cl.labels.empty()) {
    clustering = json{{"method", analysis::to_string(cl.method)},
                      {"n_clusters", cl.n_clusters},
                      {"noise_count", cl.noise_count},
                      {"noise_ratio", n ? static_cast<double>(cl.noise_count) / static_cast<double>(n) : 0.0},
                      {"silhouette", optional_number(cl.silhouette)},
                      {"k", cl.k},
                      {"min_cluster_size", cl.min_cluster_size}};
  }
  const auto& r = s.train_report;
  json training = nullptr;
  if (!r.epochs.empty()) {
    training = json{{"epochs", r.epochs.size()},
                    {"best_epoch", r.best_epoch},
                    {"stop_reason", vgae::to_string(r.stop_reason)},
                    {"first_loss", r.epochs.front().total},
                    {"final_loss", r.epochs.back().total},
                    {"holdout_auc", optional_number(r.holdout_auc)}};
  }
  return json{{"content_hash", s.content_hash},
              {"created_at", s.created_at},
              {"bridges", n},
              {"street_nodes", s.graph.count(graph::NodeKind::kStreet)},
              {"buildings", s.graph.count(graph::NodeKind::kBuilding)},
              {"reduction", s.reduction.empty() ? json(nullptr) : json(s.reduction)},
              {"clustering", std::move(clustering)},
              {"category_counts", counts_json(s.category_counts())},
              {"training", std::move(training)},
              {"correlations", std::move(correlations)}};
}

}  // namespace

std::string_view category_color(Category category) {
  switch (category) {
    case Category::kSupplyChain: return "#1f77b4";
    case Category::kMedicalAccess: return "#d62728";
    case Category::kResidentialProtection: return "#2ca02c";
    case Category::kBalancedMultiUse: return "#7f7f7f";
    case Category::kMixed: return "#ff7f0e";
  }
  return "#000000";
}

std::string overlay_geojson(const CitySnapshot& snapshot) { return overlay_doc(snapshot).dump(); }

std::vector<OverlayFeature> parse_overlay(std::string_view text) {
  const auto doc = detail::parse_json(text, "overlay");
  std::vector<OverlayFeature> out;
  try {
    if (doc.at("type") != "FeatureCollection") throw Error(ErrorCode::kFormat, "overlay: not a FeatureCollection");
    for (const auto& f : doc.at("features")) {
      const auto& geom = f.at("geometry");
      if (geom.at("type") != "Point") throw Error(ErrorCode::kFormat, "overlay: expected Point geometry");
      const auto& p = f.at("properties");
      OverlayFeature o;
      o.lon = geom.at("coordinates").at(0).get<double>();
      o.lat = geom.at("coordinates").at(1).get<double>();
      o.name = p.at("name").get<std::string>();
      o.category = p.at("category").get<std::string>();
      if (!metapath::parse_label(o.category)) {
        throw Error(ErrorCode::kFormat, "overlay: unknown category '" + o.category + "'");
      }
      o.confidence = p.at("confidence").get<double>();
      o.shop_paths = p.at("shop_paths").get<std::uint32_t>();
      o.hospital_paths = p.at("hospital_paths").get<std::uint32_t>();
      o.residence_paths = p.at("residence_paths").get<std::uint32_t>();
      if (const auto& c = p.at("cluster_id"); !c.is_null()) o.cluster_id = c.get<int>();
      o.color = p.at("color").get<std::string>();
      if (auto it = p.find("bridge_id"); it != p.end() && !it->is_null()) o.bridge_id = it->get<NodeId>();
      out.push_back(std::move(o));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("overlay: ") + e.what());
  }
  return out;
}

std::string classification_csv(const CitySnapshot& s) {
  std::string out;
  for (std::size_t i = 0; i < kClassificationColumns.size(); ++i) {
    if (i) out += ',';
    out += kClassificationColumns[i];
  }
  out += '\n';
  const bool has_coords = s.coords2d.rows() == static_cast<Eigen::Index>(s.bridge_count());
  for (std::size_t i = 0; i < s.bridge_count(); ++i) {
    const auto& n = bridge_node(s, i);
    const auto& p = s.profiles.at(i);
    const auto& c = s.classifications.at(i);
    const auto cluster = s.cluster_of(i);
    out += std::to_string(n.id) + ',' + csv_field(bridge_name(s, i)) + ',' + num(n.geo.lat) + ',' +
           num(n.geo.lon) + ',' + std::to_string(p.shop_paths) + ',' + std::to_string(p.hospital_paths) + ',' +
           std::to_string(p.residence_paths) + ',' + std::to_string(p.highway_count) + ',' +
           csv_field(c.label()) + ',' + num(c.confidence) + ',' + (cluster ? std::to_string(*cluster) : "") + ',';
    if (has_coords) {
      const auto r = static_cast<Eigen::Index>(i);
      out += num(s.coords2d(r, 0)) + ',' + num(s.coords2d(r, 1));
    } else {
      out += ',';
    }
    out += '\n';
  }
  return out;
}

std::string metrics_json(const CitySnapshot& snapshot) { return metrics_doc(snapshot).dump(2); }

std::string bridges_json(const CitySnapshot& s) {
  json out = json::array();
  for (std::size_t i = 0; i < s.bridge_count(); ++i) {
    const auto& n = bridge_node(s, i);
    out.push_back(json{{"bridge_id", n.id},
                       {"name", n.name.value_or("")},
                       {"lat", n.geo.lat},
                       {"lon", n.geo.lon},
                       {"span_m", optional_number(n.span_m)},
                       {"year_built", optional_number(n.year_built)},
                       {"is_highway", n.is_highway},
                       {"highway_count", s.graph.highway_count(n.id)}});
  }
  return out.dump();
}

std::string classification_json(const CitySnapshot& s) {
  json rows = json::array();
  for (std::size_t i = 0; i < s.bridge_count(); ++i) {
    const auto& n = bridge_node(s, i);
    const auto cluster = s.cluster_of(i);
    json row = profile_json(s.profiles.at(i), s.classifications.at(i));
    row["bridge_id"] = n.id;
    row["name"] = n.name.value_or("");
    row["highway_count"] = s.profiles.at(i).highway_count;
    row["cluster_id"] = cluster ? json(*cluster) : json(nullptr);
    row["color"] = category_color(s.classifications.at(i).category);
    rows.push_back(std::move(row));
  }
  return json{{"rows", std::move(rows)}, {"category_counts", counts_json(s.category_counts())}}.dump();
}

std::string embedding2d_json(const CitySnapshot& s) {
  json points = json::array();
  const bool has_coords = s.coords2d.rows() == static_cast<Eigen::Index>(s.bridge_count());
  for (std::size_t i = 0; has_coords && i < s.bridge_count(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const auto cluster = s.cluster_of(i);
    points.push_back(json{{"bridge_id", s.bridge_ids[i]},
                          {"u", s.coords2d(r, 0)},
                          {"v", s.coords2d(r, 1)},
                          {"cluster_id", cluster ? json(*cluster) : json(nullptr)},
                          {"category", s.classifications.at(i).label()}});
  }
  return json{{"method", s.reduction}, {"points", std::move(points)}}.dump();
}

std::string whatif_json(const CitySnapshot& s, const WhatIfResult& r) {
  auto name_of = [&](NodeId id) { return s.graph.node(id).name.value_or(""); };
  json changed = json::array();
  for (const auto& ch : r.changed) {
    changed.push_back(json{{"bridge_id", ch.bridge_id},
                           {"name", name_of(ch.bridge_id)},
                           {"before", profile_json(ch.before, ch.class_before)},
                           {"after", profile_json(ch.after, ch.class_after)},
                           {"category_changed", ch.category_changed()},
                           {"color", category_color(ch.class_after.category)}});
  }
  json budget = json::array();
  for (std::size_t i = 0; i < r.budget.size(); ++i) {
    const auto it = std::find_if(r.classifications.begin(), r.classifications.end(),
                                 [&](const auto& c) { return c.bridge_id == r.budget[i]; });
    budget.push_back(json{{"rank", i + 1},
                          {"bridge_id", r.budget[i]},
                          {"name", name_of(r.budget[i])},
                          {"category", it->label()},
                          {"confidence", it->confidence},
                          {"total_paths", it->total_paths}});
  }
  json delta = json::object();
  const char* names[] = {"shop", "hospital", "residence"};
  for (std::size_t c = 0; c < 3; ++c) {
    delta[names[c]] = static_cast<std::int64_t>(r.coverage_after[c]) - static_cast<std::int64_t>(r.coverage_before[c]);
  }
  return json{{"changed", std::move(changed)},
              {"category_counts", {{"before", counts_json(r.counts_before)}, {"after", counts_json(r.counts_after)}}},
              {"coverage",
               {{"before", coverage_json(r.coverage_before)},
                {"after", coverage_json(r.coverage_after)},
                {"delta", std::move(delta)}}},
              {"budget", std::move(budget)}}
      .dump();
}

void write_outputs(const CitySnapshot& s, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const auto path = [&](const char* file) { return (std::filesystem::path(dir) / file).string(); };
  const bool classified = s.classifications.size() == s.bridge_count();
  if (classified) {
    detail::write_file(path("classification.csv"), classification_csv(s));
    detail::write_file(path("overlay.geojson"), overlay_geojson(s));
  }
  if (s.embedding.mu.size() > 0) {
    vgae::write_embeddings_csv(path("embeddings.csv"), s.embedding);
    vgae::write_checkpoint(path("checkpoint.json"), s.config.encoder, s.weights, s.embedding);
  }
  if (s.coords2d.rows() == static_cast<Eigen::Index>(s.bridge_count()) && s.bridge_count() > 0) {
    std::string csv = "bridge_id,u,v\n";
    for (std::size_t i = 0; i < s.bridge_count(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      csv += std::to_string(s.bridge_ids[i]) + ',' + num(s.coords2d(r, 0)) + ',' + num(s.coords2d(r, 1)) + '\n';
    }
    detail::write_file(path("coords2d.csv"), csv);
  }
  detail::write_file(path("metrics.json"), metrics_json(s));
  save_snapshot(s, path("snapshot.json"));
}

}  // namespace bridgerole::pipeline
