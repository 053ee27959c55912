#include "bridgerole/error.hpp"
#include "bridgerole/pipeline.hpp"
#include "pipeline_internal.hpp"

namespace bridgerole::pipeline {

using detail::json;

namespace {

constexpr const char* kFormatName = "bridgerole.snapshot";
constexpr int kFormatVersion = 1;

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
std::optional<double> opt_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

analysis::ClusterMethod method_from(const std::string& s) {
  for (auto m : {analysis::ClusterMethod::kHdbscan, analysis::ClusterMethod::kKmeansFallback,
                 analysis::ClusterMethod::kKmeansAdaptive}) {
    if (s == analysis::to_string(m)) return m;
  }
  throw Error(ErrorCode::kFormat, "unknown cluster method '" + s + "'");
}

}  // namespace

json graph_to_json(const graph::HetGraph& g) {
  json nodes = json::array();
  for (const auto& n : g.nodes()) {
    json j{{"kind", static_cast<int>(n.kind)},
           {"lat", n.geo.lat},
           {"lon", n.geo.lon},
           {"x", n.plane.x},
           {"y", n.plane.y},
           {"is_highway", n.is_highway}};
    if (n.name) j["name"] = *n.name;
    if (n.category) j["category"] = static_cast<int>(*n.category);
    if (n.span_m) j["span_m"] = *n.span_m;
    if (n.year_built) j["year_built"] = *n.year_built;
    if (n.kind == graph::NodeKind::kBridge) {
      const auto snapped = g.snapped_street(n.id);
      j["snapped"] = snapped ? json(*snapped) : json(nullptr);
      j["highway_count"] = g.highway_count(n.id);
      json edges = json::array();
      for (auto c : graph::kCategories) edges.push_back(g.building_edges(n.id, c));
      j["building_edges"] = std::move(edges);
    }
    nodes.push_back(std::move(j));
  }
  json edges = json::array();
  for (const auto& [a, b] : g.street_edges()) edges.push_back({a, b});
  return json{{"nodes", std::move(nodes)}, {"street_edges", std::move(edges)}};
}

graph::HetGraph graph_from_json(const json& j) {
  graph::HetGraph g;
  const auto& nodes = j.at("nodes");
  for (const auto& nj : nodes) {
    graph::Node n;
    const int kind = nj.at("kind").get<int>();
    if (kind < 0 || kind > 2) throw Error(ErrorCode::kFormat, "snapshot: bad node kind");
    n.kind = static_cast<graph::NodeKind>(kind);
    n.geo = {nj.at("lat").get<double>(), nj.at("lon").get<double>()};
    n.plane = {nj.at("x").get<double>(), nj.at("y").get<double>()};
    n.is_highway = nj.at("is_highway").get<bool>();
    if (auto it = nj.find("name"); it != nj.end()) n.name = it->get<std::string>();
    if (auto it = nj.find("category"); it != nj.end()) {
      const int c = it->get<int>();
      if (c < 0 || c > 2) throw Error(ErrorCode::kFormat, "snapshot: bad building category");
      n.category = static_cast<graph::BuildingCategory>(c);
    }
    if (auto it = nj.find("span_m"); it != nj.end()) n.span_m = it->get<double>();
    if (auto it = nj.find("year_built"); it != nj.end()) n.year_built = it->get<double>();
    g.add_node(std::move(n));
  }
  for (const auto& e : j.at("street_edges")) g.add_street_edge(e.at(0).get<NodeId>(), e.at(1).get<NodeId>());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& nj = nodes[i];
    if (nj.at("kind").get<int>() != static_cast<int>(graph::NodeKind::kBridge)) continue;
    const auto id = static_cast<NodeId>(i);
    if (const auto& s = nj.at("snapped"); !s.is_null()) g.set_snapped(id, s.get<NodeId>());
    const auto& be = nj.at("building_edges");
    for (std::size_t c = 0; c < 3; ++c) {
      g.set_building_edges(id, graph::kCategories[c], be.at(c).get<std::vector<NodeId>>());
    }
    const bool flag = nj.at("is_highway").get<bool>();
    g.set_highway_count(id, nj.at("highway_count").get<std::uint32_t>());
    g.mutable_node(id).is_highway = flag;
  }
  return g;
}

void save_snapshot(const CitySnapshot& s, const std::string& path) {
  json epochs = json::array();
  for (const auto& e : s.train_report.epochs) {
    epochs.push_back(json{{"epoch", e.epoch},
                          {"total", e.total},
                          {"recon", e.recon},
                          {"kl", e.kl},
                          {"beta", e.beta},
                          {"wall_time_s", e.wall_time_s}});
  }
  json profiles = json::array();
  for (const auto& p : s.profiles) {
    profiles.push_back(json{{"bridge_id", p.bridge_id},
                            {"shop_paths", p.shop_paths},
                            {"hospital_paths", p.hospital_paths},
                            {"residence_paths", p.residence_paths},
                            {"highway_count", p.highway_count},
                            {"is_highway", p.is_highway}});
  }
  json classes = json::array();
  for (const auto& c : s.classifications) {
    classes.push_back(json{{"bridge_id", c.bridge_id},
                           {"label", c.label()},
                           {"confidence", c.confidence},
                           {"dominant", static_cast<int>(c.dominant)},
                           {"total_paths", c.total_paths}});
  }
  json correlations = json::array();
  for (const auto& r : s.correlations) {
    correlations.push_back(
        json{{"dim", r.dim}, {"spearman_r", r.spearman_r}, {"p_value", r.p_value}, {"defined", r.defined}});
  }
  const auto& cl = s.clusters;
  json doc{{"format", kFormatName},
           {"version", kFormatVersion},
           {"content_hash", s.content_hash},
           {"created_at", s.created_at},
           {"config", config_json(s.config)},
           {"graph", graph_to_json(s.graph)},
           {"features", detail::matrix_to_json(s.features)},
           {"weights", detail::weights_to_json(s.weights)},
           {"embedding",
            {{"node_ids", s.embedding.node_ids},
             {"mu", detail::matrix_to_json(s.embedding.mu)},
             {"logvar", detail::matrix_to_json(s.embedding.logvar)}}},
           {"train_report",
            {{"epochs", std::move(epochs)},
             {"stop_reason", vgae::to_string(s.train_report.stop_reason)},
             {"best_epoch", s.train_report.best_epoch},
             {"holdout_auc", opt_json(s.train_report.holdout_auc)}}},
           {"bridge_ids", s.bridge_ids},
           {"profiles", std::move(profiles)},
           {"classifications", std::move(classes)},
           {"clusters",
            {{"labels", cl.labels},
             {"method", analysis::to_string(cl.method)},
             {"silhouette", opt_json(cl.silhouette)},
             {"n_clusters", cl.n_clusters},
             {"noise_count", cl.noise_count},
             {"k", cl.k},
             {"min_cluster_size", cl.min_cluster_size}}},
           {"coords2d", detail::matrix_to_json(s.coords2d)},
           {"reduction", s.reduction},
           {"correlations", std::move(correlations)}};
  detail::write_file(path, doc.dump());
}

CitySnapshot load_snapshot(const std::string& path) {
  const auto doc = detail::parse_json(detail::read_file(path), path);
  if (!doc.is_object() || doc.value("format", "") != kFormatName) {
    throw Error(ErrorCode::kFormat, path + ": not a snapshot");
  }
  if (doc.value("version", 0) != kFormatVersion) throw Error(ErrorCode::kFormat, path + ": unsupported version");
  CitySnapshot s;
  try {
    s.config = config_from_json(doc.at("config").dump());
    s.graph = graph_from_json(doc.at("graph"));
    s.features = detail::matrix_from_json(doc.at("features"));
    s.weights = detail::weights_from_json(doc.at("weights"));
    const auto& e = doc.at("embedding");
    s.embedding.node_ids = e.at("node_ids").get<std::vector<NodeId>>();
    s.embedding.mu = detail::matrix_from_json(e.at("mu"));
    s.embedding.logvar = detail::matrix_from_json(e.at("logvar"));
    s.embedding.z = s.embedding.mu;

    const auto& tr = doc.at("train_report");
    for (const auto& ej : tr.at("epochs")) {
      vgae::EpochRecord r;
      r.epoch = ej.at("epoch").get<int>();
      r.total = ej.at("total").get<double>();
      r.recon = ej.at("recon").get<double>();
      r.kl = ej.at("kl").get<double>();
      r.beta = ej.at("beta").get<double>();
      r.wall_time_s = ej.at("wall_time_s").get<double>();
      s.train_report.epochs.push_back(r);
    }
    s.train_report.stop_reason = tr.at("stop_reason").get<std::string>() == vgae::to_string(vgae::StopReason::kEarlyStopping)
                                     ? vgae::StopReason::kEarlyStopping
                                     : vgae::StopReason::kMaxEpochs;
    s.train_report.best_epoch = tr.at("best_epoch").get<int>();
    s.train_report.holdout_auc = opt_from(tr.at("holdout_auc"));

    s.bridge_ids = doc.at("bridge_ids").get<std::vector<NodeId>>();
    for (const auto& pj : doc.at("profiles")) {
      metapath::MetapathProfile p;
      p.bridge_id = pj.at("bridge_id").get<NodeId>();
      p.shop_paths = pj.at("shop_paths").get<std::uint32_t>();
      p.hospital_paths = pj.at("hospital_paths").get<std::uint32_t>();
      p.residence_paths = pj.at("residence_paths").get<std::uint32_t>();
      p.highway_count = pj.at("highway_count").get<std::uint32_t>();
      p.is_highway = pj.at("is_highway").get<bool>();
      s.profiles.push_back(p);
    }
    for (const auto& cj : doc.at("classifications")) {
      metapath::BridgeClassification c;
      c.bridge_id = cj.at("bridge_id").get<NodeId>();
      const auto parsed = metapath::parse_label(cj.at("label").get<std::string>());
      if (!parsed) throw Error(ErrorCode::kFormat, path + ": unknown category label");
      c.category = parsed->first;
      c.confidence = cj.at("confidence").get<double>();
      c.dominant = static_cast<graph::BuildingCategory>(cj.at("dominant").get<int>());
      c.total_paths = cj.at("total_paths").get<std::uint32_t>();
      s.classifications.push_back(c);
    }
    const auto& cl = doc.at("clusters");
    s.clusters.labels = cl.at("labels").get<std::vector<int>>();
    s.clusters.method = method_from(cl.at("method").get<std::string>());
    s.clusters.silhouette = opt_from(cl.at("silhouette"));
    s.clusters.n_clusters = cl.at("n_clusters").get<int>();
    s.clusters.noise_count = cl.at("noise_count").get<std::size_t>();
    s.clusters.k = cl.at("k").get<int>();
    s.clusters.min_cluster_size = cl.at("min_cluster_size").get<int>();
    s.coords2d = detail::matrix_from_json(doc.at("coords2d"));
    s.reduction = doc.at("reduction").get<std::string>();
    for (const auto& rj : doc.at("correlations")) {
      analysis::CorrelationRow r;
      r.dim = rj.at("dim").get<int>();
      r.spearman_r = rj.at("spearman_r").get<double>();
      r.p_value = rj.at("p_value").get<double>();
      r.defined = rj.at("defined").get<bool>();
      s.correlations.push_back(r);
    }
    s.content_hash = doc.at("content_hash").get<std::string>();
    s.created_at = doc.at("created_at").get<std::string>();
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::kFormat, path + ": " + ex.what());
  }
  if (compute_content_hash(s) != s.content_hash) {
    throw Error(ErrorCode::kFormat, path + ": content hash mismatch");
  }
  return s;
}

}  // namespace bridgerole::pipeline
