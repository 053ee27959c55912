#include "bridgerole/graphbuild.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

#include "bridgerole/error.hpp"
#include "json.hpp"
#include "spatial_grid.hpp"

namespace bridgerole::graph {
namespace {

using nlohmann::json;

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

json parse_collection(std::string_view text, std::string_view what) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kFormat, std::string(what) + ": invalid JSON: " + e.what());
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
      !doc["features"].is_array()) {
    throw Error(ErrorCode::kFormat, std::string(what) + ": expected a FeatureCollection");
  }
  return doc;
}

// Reads a [lon, lat] position. Throws std::invalid_argument on malformed input.
geo::GeoPoint read_position(const json& pos) {
  if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number()) {
    throw std::invalid_argument("bad position");
  }
  geo::GeoPoint p{pos[1].get<double>(), pos[0].get<double>()};
  if (!p.valid()) throw std::invalid_argument("position out of range");
  return p;
}

std::vector<geo::GeoPoint> read_line(const json& coords) {
  if (!coords.is_array()) throw std::invalid_argument("bad line");
  std::vector<geo::GeoPoint> out;
  out.reserve(coords.size());
  for (const auto& c : coords) out.push_back(read_position(c));
  return out;
}

std::vector<std::vector<geo::GeoPoint>> read_lines(const json& geometry) {
  const std::string type = geometry.value("type", "");
  const json& coords = geometry.at("coordinates");
  if (type == "LineString") return {read_line(coords)};
  if (type == "MultiLineString") {
    std::vector<std::vector<geo::GeoPoint>> out;
    for (const auto& line : coords) out.push_back(read_line(line));
    return out;
  }
  throw std::invalid_argument("not a line geometry");
}

struct Accum {
  double w = 0.0;
  double lat = 0.0;
  double lon = 0.0;
  void add(double weight, double la, double lo) {
    w += weight;
    lat += weight * la;
    lon += weight * lo;
  }
};

// Shoelace centroid in degree space of a closed ring; area weighted.
void accumulate_ring(const std::vector<geo::GeoPoint>& ring, Accum& area, Accum& verts) {
  for (const auto& p : ring) verts.add(1.0, p.lat, p.lon);
  const std::size_t n = ring.size();
  if (n < 3) return;
  double a = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  const double ox = ring[0].lon;
  const double oy = ring[0].lat;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = ring[i];
    const auto& q = ring[(i + 1) % n];
    const double x0 = p.lon - ox;
    const double y0 = p.lat - oy;
    const double x1 = q.lon - ox;
    const double y1 = q.lat - oy;
    const double cross = x0 * y1 - x1 * y0;
    a += cross;
    cx += (x0 + x1) * cross;
    cy += (y0 + y1) * cross;
  }
  a *= 0.5;
  if (std::abs(a) < 1e-18) return;
  area.add(std::abs(a), oy + cy / (6.0 * a), ox + cx / (6.0 * a));
}

geo::GeoPoint centroid(const json& geometry) {
  const std::string type = geometry.value("type", "");
  const json& coords = geometry.at("coordinates");
  if (type == "Point") return read_position(coords);
  Accum area;
  Accum length;
  Accum verts;
  auto add_line = [&](const std::vector<geo::GeoPoint>& line) {
    for (std::size_t i = 0; i + 1 < line.size(); ++i) {
      const double len = geo::haversine_m(line[i], line[i + 1]);
      length.add(len, 0.5 * (line[i].lat + line[i + 1].lat), 0.5 * (line[i].lon + line[i + 1].lon));
    }
    for (const auto& p : line) verts.add(1.0, p.lat, p.lon);
  };
  if (type == "Polygon") {
    if (!coords.is_array() || coords.empty()) throw std::invalid_argument("empty polygon");
    accumulate_ring(read_line(coords[0]), area, verts);
  } else if (type == "MultiPolygon") {
    for (const auto& poly : coords) {
      if (!poly.is_array() || poly.empty()) throw std::invalid_argument("empty polygon");
      accumulate_ring(read_line(poly[0]), area, verts);
    }
  } else if (type == "LineString") {
    add_line(read_line(coords));
  } else if (type == "MultiLineString") {
    for (const auto& l : coords) add_line(read_line(l));
  } else if (type == "MultiPoint") {
    for (const auto& p : read_line(coords)) verts.add(1.0, p.lat, p.lon);
  } else {
    throw std::invalid_argument("unsupported geometry " + type);
  }
  const Accum& pick = area.w > 0 ? area : (length.w > 0 ? length : verts);
  if (pick.w <= 0) throw std::invalid_argument("empty geometry");
  return geo::GeoPoint{pick.lat / pick.w, pick.lon / pick.w};
}

std::optional<std::string> property_string(const json& props, const std::string& key) {
  if (!props.is_object()) return std::nullopt;
  auto it = props.find(key);
  if (it == props.end() || it->is_null()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>();
  if (it->is_boolean()) return it->get<bool>() ? "yes" : "no";
  if (it->is_number()) return it->dump();
  return std::nullopt;
}

std::optional<double> property_number(const json& props, const std::string& key) {
  if (!props.is_object()) return std::nullopt;
  auto it = props.find(key);
  if (it == props.end() || it->is_null()) return std::nullopt;
  if (it->is_number()) {
    const double v = it->get<double>();
    return std::isfinite(v) ? std::optional<double>(v) : std::nullopt;
  }
  if (it->is_string()) {
    // Accept leading numerics such as "1965-04" or "120 m".
    const std::string s = it->get<std::string>();
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used > 0 && std::isfinite(v)) return v;
    } catch (const std::exception&) {
    }
  }
  return std::nullopt;
}

bool contains(const std::vector<std::string>& values, const std::string& v) {
  return std::find(values.begin(), values.end(), v) != values.end();
}

std::optional<BuildingCategory> resolve_category(const json& props, const PropertyKeys& keys) {
  if (auto amenity = property_string(props, keys.amenity); amenity && *amenity == keys.hospital_value) {
    return BuildingCategory::kHospital;
  }
  if (auto shop = property_string(props, keys.shop); shop && !shop->empty() && *shop != "no") {
    return BuildingCategory::kShop;
  }
  if (auto building = property_string(props, keys.building);
      building && contains(keys.residence_values, *building)) {
    return BuildingCategory::kResidence;
  }
  return std::nullopt;
}

Node make_node(NodeKind kind, const geo::GeoPoint& p) {
  Node n;
  n.kind = kind;
  n.geo = p;
  n.plane = geo::project(p);
  return n;
}

// Dijkstra over street edges from `sources`, stopping past `limit_m`.
std::vector<double> street_distances(const HetGraph& graph, const std::vector<NodeId>& sources,
                                     double limit_m) {
  std::vector<double> dist(graph.size(), std::numeric_limits<double>::infinity());
  using Entry = std::pair<double, NodeId>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  for (NodeId s : sources) {
    dist[s] = 0.0;
    heap.push({0.0, s});
  }
  while (!heap.empty()) {
    auto [d, v] = heap.top();
    heap.pop();
    if (d > dist[v]) continue;
    for (const auto& nb : graph.street_neighbors(v)) {
      const double nd = d + nb.length_m;
      if (nd <= limit_m && nd < dist[nb.id]) {
        dist[nb.id] = nd;
        heap.push({nd, nb.id});
      }
    }
  }
  return dist;
}

}  // namespace

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::kBridge: return "bridge";
    case NodeKind::kStreet: return "street";
    case NodeKind::kBuilding: return "building";
  }
  return "?";
}

std::string_view to_string(BuildingCategory category) {
  switch (category) {
    case BuildingCategory::kShop: return "shop";
    case BuildingCategory::kHospital: return "hospital";
    case BuildingCategory::kResidence: return "residence";
  }
  return "?";
}

std::string_view to_string(RelationKind relation) {
  switch (relation) {
    case RelationKind::kStreetToStreet: return "street_to_street";
    case RelationKind::kStreetToBridge: return "street_to_bridge";
    case RelationKind::kToShop: return "to_shop";
    case RelationKind::kToHospital: return "to_hospital";
    case RelationKind::kToResidence: return "to_residence";
  }
  return "?";
}

RelationKind relation_for(BuildingCategory category) {
  switch (category) {
    case BuildingCategory::kShop: return RelationKind::kToShop;
    case BuildingCategory::kHospital: return RelationKind::kToHospital;
    case BuildingCategory::kResidence: return RelationKind::kToResidence;
  }
  return RelationKind::kToShop;
}

// ---------------------------------------------------------------------------
// HetGraph

namespace {
std::pair<std::int64_t, std::int64_t> dedup_key(const geo::GeoPoint& p) {
  return {std::llround(p.lat / kCoordinateDedupDeg), std::llround(p.lon / kCoordinateDedupDeg)};
}
}  // namespace

NodeId HetGraph::add_node(Node node) {
  const auto id = static_cast<NodeId>(nodes_.size());
  node.id = id;
  if (node.kind == NodeKind::kStreet) street_index_.emplace(dedup_key(node.geo), id);
  nodes_.push_back(std::move(node));
  street_adj_.emplace_back();
  snapped_.emplace_back();
  for (auto& per_category : building_edges_) per_category.emplace_back();
  highway_count_.push_back(0);
  return id;
}

NodeId HetGraph::street_node_at(const geo::GeoPoint& p) {
  auto it = street_index_.find(dedup_key(p));
  if (it != street_index_.end()) return it->second;
  return add_node(make_node(NodeKind::kStreet, p));
}

bool HetGraph::add_street_edge(NodeId a, NodeId b) {
  if (a == b) return false;
  if (node(a).kind != NodeKind::kStreet || node(b).kind != NodeKind::kStreet) {
    throw Error(ErrorCode::kInvalidArgument, "street edge endpoints must be street nodes");
  }
  auto& adj_a = street_adj_[a];
  if (std::any_of(adj_a.begin(), adj_a.end(), [b](const StreetNeighbor& n) { return n.id == b; })) {
    return false;
  }
  const double len = geo::haversine_m(node(a).geo, node(b).geo);
  adj_a.push_back({b, len});
  street_adj_[b].push_back({a, len});
  return true;
}

std::vector<NodeId> HetGraph::ids_of(NodeKind kind) const {
  std::vector<NodeId> out;
  for (const auto& n : nodes_) {
    if (n.kind == kind) out.push_back(n.id);
  }
  return out;
}

std::size_t HetGraph::count(NodeKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [kind](const Node& n) { return n.kind == kind; }));
}

std::size_t HetGraph::edge_count(RelationKind relation) const {
  std::size_t total = 0;
  switch (relation) {
    case RelationKind::kStreetToStreet:
      for (const auto& adj : street_adj_) total += adj.size();
      return total / 2;
    case RelationKind::kStreetToBridge:
      return static_cast<std::size_t>(
          std::count_if(snapped_.begin(), snapped_.end(), [](const auto& s) { return s.has_value(); }));
    case RelationKind::kToShop:
    case RelationKind::kToHospital:
    case RelationKind::kToResidence: {
      const auto idx = static_cast<std::size_t>(relation) - static_cast<std::size_t>(RelationKind::kToShop);
      for (const auto& targets : building_edges_[idx]) total += targets.size();
      return total;
    }
  }
  return 0;
}

void HetGraph::set_snapped(NodeId bridge, NodeId street) {
  if (node(bridge).kind != NodeKind::kBridge || node(street).kind != NodeKind::kStreet) {
    throw Error(ErrorCode::kInvalidArgument, "street_to_bridge edge must join a bridge and a street");
  }
  snapped_[bridge] = street;
}

std::vector<NodeId> HetGraph::bridges_at(NodeId street) const {
  std::vector<NodeId> out;
  for (NodeId i = 0; i < snapped_.size(); ++i) {
    if (snapped_[i] && *snapped_[i] == street) out.push_back(i);
  }
  return out;
}

void HetGraph::clear_building_edges() {
  for (auto& per_category : building_edges_) {
    for (auto& targets : per_category) targets.clear();
  }
}

void HetGraph::set_building_edges(NodeId bridge, BuildingCategory category, std::vector<NodeId> targets) {
  if (node(bridge).kind != NodeKind::kBridge) {
    throw Error(ErrorCode::kInvalidArgument, "building edges must originate at a bridge");
  }
  for (NodeId t : targets) {
    const Node& b = node(t);
    if (b.kind != NodeKind::kBuilding || b.category != category) {
      throw Error(ErrorCode::kInvalidArgument, "building edge target has the wrong category");
    }
  }
  building_edges_[static_cast<std::size_t>(category)][bridge] = std::move(targets);
}

void HetGraph::set_highway_count(NodeId bridge, std::uint32_t count) {
  highway_count_.at(bridge) = count;
  Node& n = mutable_node(bridge);
  if (n.kind == NodeKind::kBridge) n.is_highway = count > 0;
}

std::vector<std::pair<NodeId, NodeId>> HetGraph::street_edges() const {
  std::vector<std::pair<NodeId, NodeId>> out;
  for (NodeId a = 0; a < street_adj_.size(); ++a) {
    for (const auto& nb : street_adj_[a]) {
      if (a < nb.id) out.emplace_back(a, nb.id);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Ingestion

IngestReport ingest_streets(HetGraph& graph, std::string_view geojson, const PropertyKeys& keys) {
  const json doc = parse_collection(geojson, "streets");
  IngestReport report;
  for (const auto& feature : doc["features"]) {
    std::vector<std::vector<geo::GeoPoint>> lines;
    try {
      if (!feature.is_object() || !feature.contains("geometry") || !feature["geometry"].is_object()) {
        throw std::invalid_argument("missing geometry");
      }
      lines = read_lines(feature["geometry"]);
      if (std::any_of(lines.begin(), lines.end(), [](const auto& l) { return l.size() < 2; })) {
        throw std::invalid_argument("line with fewer than two vertices");
      }
    } catch (const std::exception&) {
      ++report.malformed;
      continue;
    }
    const json props = feature.value("properties", json::object());
    const auto highway = property_string(props, keys.highway);
    const bool trunk = highway && contains(keys.trunk_values, *highway);
    for (const auto& line : lines) {
      NodeId prev = graph.street_node_at(line.front());
      if (trunk) graph.mutable_node(prev).is_highway = true;
      for (std::size_t i = 1; i < line.size(); ++i) {
        const NodeId cur = graph.street_node_at(line[i]);
        if (trunk) graph.mutable_node(cur).is_highway = true;
        graph.add_street_edge(prev, cur);
        prev = cur;
      }
    }
    ++report.accepted;
  }
  if (graph.count(NodeKind::kStreet) == 0) {
    throw Error(ErrorCode::kEmptyNetwork, "street network is empty");
  }
  return report;
}

IngestReport ingest_bridges(HetGraph& graph, std::string_view geojson, const PropertyKeys& keys) {
  const json doc = parse_collection(geojson, "bridges");
  IngestReport report;
  for (const auto& feature : doc["features"]) {
    geo::GeoPoint at;
    try {
      if (!feature.is_object() || !feature.contains("geometry") || !feature["geometry"].is_object()) {
        throw std::invalid_argument("missing geometry");
      }
      at = centroid(feature["geometry"]);
    } catch (const std::exception&) {
      ++report.malformed;
      continue;
    }
    const json props = feature.value("properties", json::object());
    auto name = property_string(props, keys.name);
    if (!name || name->empty()) {
      ++report.dropped_unnamed;
      continue;
    }
    Node n = make_node(NodeKind::kBridge, at);
    n.name = std::move(name);
    n.span_m = property_number(props, keys.span);
    n.year_built = property_number(props, keys.year);
    graph.add_node(std::move(n));
    ++report.accepted;
  }
  return report;
}

IngestReport ingest_buildings(HetGraph& graph, std::string_view geojson, const PropertyKeys& keys,
                              double radius_m) {
  const json doc = parse_collection(geojson, "buildings");
  IngestReport report;
  const auto bridges = graph.ids_of(NodeKind::kBridge);
  detail::SpatialGrid grid(std::max(radius_m, 1.0));
  for (NodeId b : bridges) grid.insert(b, graph.node(b).plane);
  // Planar and haversine distances differ by well under 1% in-zone.
  const double search = radius_m * 1.01 + 1.0;

  for (const auto& feature : doc["features"]) {
    geo::GeoPoint at;
    try {
      if (!feature.is_object() || !feature.contains("geometry") || !feature["geometry"].is_object()) {
        throw std::invalid_argument("missing geometry");
      }
      at = centroid(feature["geometry"]);
    } catch (const std::exception&) {
      ++report.malformed;
      continue;
    }
    const json props = feature.value("properties", json::object());
    const auto category = resolve_category(props, keys);
    if (!category) {
      ++report.dropped_unknown_category;
      continue;
    }
    const geo::PlanePoint plane = geo::project(at);
    bool near_bridge = false;
    grid.visit_near(plane, search, [&](std::uint32_t id, const geo::PlanePoint&) {
      if (!near_bridge && geo::haversine_m(at, graph.node(id).geo) <= radius_m) near_bridge = true;
    });
    if (!near_bridge) {
      ++report.dropped_out_of_radius;
      continue;
    }
    Node n;
    n.kind = NodeKind::kBuilding;
    n.geo = at;
    n.plane = plane;
    n.category = category;
    n.name = property_string(props, keys.name);
    graph.add_node(std::move(n));
    ++report.accepted;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Edges

void snap_bridges(HetGraph& graph) {
  const auto streets = graph.ids_of(NodeKind::kStreet);
  if (streets.empty()) throw Error(ErrorCode::kNoStreetsAvailable, "no street nodes to snap bridges to");
  detail::SpatialGrid grid(250.0);
  for (NodeId s : streets) grid.insert(s, graph.node(s).plane);
  for (NodeId b : graph.ids_of(NodeKind::kBridge)) {
    graph.set_snapped(b, grid.nearest(graph.node(b).plane));
  }
}

int KnnParams::k_for(BuildingCategory category) const {
  switch (category) {
    case BuildingCategory::kShop: return k_shop;
    case BuildingCategory::kHospital: return k_hospital;
    case BuildingCategory::kResidence: return k_residence;
  }
  return 0;
}

void knn_building_edges(HetGraph& graph, const KnnParams& params) {
  for (auto c : kCategories) {
    if (params.k_for(c) < 0) throw Error(ErrorCode::kInvalidK, "k must be non-negative");
  }
  graph.clear_building_edges();
  detail::SpatialGrid grid(std::max(params.radius_m, 1.0));
  for (NodeId b : graph.ids_of(NodeKind::kBuilding)) grid.insert(b, graph.node(b).plane);
  const double search = params.radius_m * 1.01 + 1.0;

  for (NodeId bridge : graph.ids_of(NodeKind::kBridge)) {
    const Node& src = graph.node(bridge);
    std::array<std::vector<std::pair<double, NodeId>>, 3> ranked;
    grid.visit_near(src.plane, search, [&](std::uint32_t id, const geo::PlanePoint& p) {
      const Node& dst = graph.node(id);
      if (geo::haversine_m(src.geo, dst.geo) > params.radius_m) return;
      ranked[static_cast<std::size_t>(*dst.category)].emplace_back(geo::planar_distance_m(src.plane, p), id);
    });
    for (auto c : kCategories) {
      auto& cand = ranked[static_cast<std::size_t>(c)];
      std::sort(cand.begin(), cand.end());
      const auto k = std::min<std::size_t>(cand.size(), static_cast<std::size_t>(params.k_for(c)));
      std::vector<NodeId> targets;
      targets.reserve(k);
      for (std::size_t i = 0; i < k; ++i) targets.push_back(cand[i].second);
      graph.set_building_edges(bridge, c, std::move(targets));
    }
  }
}

std::vector<double> betweenness(const HetGraph& graph) {
  const std::size_t n = graph.size();
  std::vector<double> score(n, 0.0);
  std::vector<std::size_t> component(n, kNone);
  std::vector<std::size_t> component_size;

  for (NodeId s = 0; s < n; ++s) {
    if (graph.node(s).kind != NodeKind::kStreet || component[s] != kNone) continue;
    const std::size_t c = component_size.size();
    std::size_t size = 0;
    std::vector<NodeId> stack{s};
    component[s] = c;
    while (!stack.empty()) {
      const NodeId v = stack.back();
      stack.pop_back();
      ++size;
      for (const auto& nb : graph.street_neighbors(v)) {
        if (component[nb.id] == kNone) {
          component[nb.id] = c;
          stack.push_back(nb.id);
        }
      }
    }
    component_size.push_back(size);
  }

  // Brandes accumulation; sources in ascending id for a fixed summation order.
  std::vector<std::int64_t> dist(n, -1);
  std::vector<double> sigma(n, 0.0);
  std::vector<double> delta(n, 0.0);
  std::vector<NodeId> order;
  std::vector<NodeId> queue;
  order.reserve(n);
  queue.reserve(n);
  for (NodeId s = 0; s < n; ++s) {
    if (graph.node(s).kind != NodeKind::kStreet || component_size[component[s]] < 3) continue;
    order.clear();
    queue.clear();
    queue.push_back(s);
    dist[s] = 0;
    sigma[s] = 1.0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const NodeId v = queue[head];
      order.push_back(v);
      for (const auto& nb : graph.street_neighbors(v)) {
        const NodeId w = nb.id;
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          queue.push_back(w);
        }
        if (dist[w] == dist[v] + 1) sigma[w] += sigma[v];
      }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const NodeId w = *it;
      for (const auto& nb : graph.street_neighbors(w)) {
        const NodeId v = nb.id;
        if (dist[v] == dist[w] - 1) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      }
      if (w != s) score[w] += delta[w];
    }
    for (NodeId v : order) {
      dist[v] = -1;
      sigma[v] = 0.0;
      delta[v] = 0.0;
    }
  }

  for (NodeId v = 0; v < n; ++v) {
    if (component[v] == kNone) continue;
    const double m = static_cast<double>(component_size[component[v]]);
    // Undirected: every pair was counted from both endpoints.
    score[v] = m >= 3 ? (score[v] / 2.0) / ((m - 1.0) * (m - 2.0) / 2.0) : 0.0;
  }
  return score;
}

std::uint32_t highway_metapath_count(const HetGraph& graph, NodeId bridge, double radius_m) {
  const auto start = graph.snapped_street(bridge);
  if (!start) return 0;
  const auto dist = street_distances(graph, {*start}, radius_m);
  std::uint32_t count = 0;
  for (NodeId v = 0; v < dist.size(); ++v) {
    if (std::isfinite(dist[v]) && graph.node(v).is_highway && graph.node(v).kind == NodeKind::kStreet) {
      ++count;
    }
  }
  return count;
}

void compute_highway_counts(HetGraph& graph, double radius_m) {
  for (NodeId b : graph.ids_of(NodeKind::kBridge)) {
    graph.set_highway_count(b, highway_metapath_count(graph, b, radius_m));
  }
}

void build_edges(HetGraph& graph, const KnnParams& params) {
  snap_bridges(graph);
  knn_building_edges(graph, params);
  compute_highway_counts(graph, params.radius_m);
}

// ---------------------------------------------------------------------------
// Features

FeatureMatrix build_features(const HetGraph& graph) {
  namespace f = feature;
  const std::size_t n = graph.size();
  FeatureMatrix x = FeatureMatrix::Zero(static_cast<Eigen::Index>(n), kFeatureWidth);
  if (n == 0) return x;

  const auto between = betweenness(graph);

  std::vector<double> degree(n, 0.0);
  for (NodeId v = 0; v < n; ++v) {
    const Node& node = graph.node(v);
    if (node.kind == NodeKind::kStreet) degree[v] += static_cast<double>(graph.street_neighbors(v).size());
    if (node.kind == NodeKind::kBridge) {
      if (auto s = graph.snapped_street(v)) {
        degree[v] += 1.0;
        degree[*s] += 1.0;
      }
      for (auto c : kCategories) {
        for (NodeId t : graph.building_edges(v, c)) {
          degree[v] += 1.0;
          degree[t] += 1.0;
        }
      }
    }
  }

  std::vector<NodeId> trunk;
  for (NodeId v = 0; v < n; ++v) {
    if (graph.node(v).kind == NodeKind::kStreet && graph.node(v).is_highway) trunk.push_back(v);
  }
  const auto trunk_dist = street_distances(graph, trunk, std::numeric_limits<double>::infinity());

  double min_x = std::numeric_limits<double>::infinity();
  double max_x = -min_x;
  double min_y = min_x;
  double max_y = -min_x;
  detail::SpatialGrid streets(500.0);
  detail::SpatialGrid buildings(kDefaultRadiusM);
  for (const auto& node : graph.nodes()) {
    min_x = std::min(min_x, node.plane.x);
    max_x = std::max(max_x, node.plane.x);
    min_y = std::min(min_y, node.plane.y);
    max_y = std::max(max_y, node.plane.y);
    if (node.kind == NodeKind::kStreet) streets.insert(node.id, node.plane);
    if (node.kind == NodeKind::kBuilding) buildings.insert(node.id, node.plane);
  }
  auto norm = [](double v, double lo, double hi) { return hi > lo ? (v - lo) / (hi - lo) : 0.0; };
  const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;

  for (NodeId v = 0; v < n; ++v) {
    const Node& node = graph.node(v);
    auto row = x.row(static_cast<Eigen::Index>(v));
    row(f::kDegree) = degree[v] / denom;
    row(f::kKindBridge + static_cast<std::size_t>(node.kind)) = 1.0;
    row(f::kPlaneX) = norm(node.plane.x, min_x, max_x);
    row(f::kPlaneY) = norm(node.plane.y, min_y, max_y);
    row(f::kBias) = 1.0;

    if (node.kind == NodeKind::kBridge) {
      row(f::kSpanLength) = node.span_m.value_or(0.0);
      if (node.year_built) row(f::kYearBuilt) = std::clamp((*node.year_built - 1900.0) / 125.0, 0.0, 1.0);
      row(f::kHighwayCount) = std::log1p(static_cast<double>(graph.highway_count(v)));
      row(f::kShopCount) = std::log1p(static_cast<double>(graph.building_edges(v, BuildingCategory::kShop).size()));
      row(f::kHospitalCount) =
          std::log1p(static_cast<double>(graph.building_edges(v, BuildingCategory::kHospital).size()));
      row(f::kResidenceCount) =
          std::log1p(static_cast<double>(graph.building_edges(v, BuildingCategory::kResidence).size()));
      row(f::kIsHighway) = node.is_highway ? 1.0 : 0.0;
    } else if (node.kind == NodeKind::kStreet) {
      row(f::kIsHighway) = node.is_highway ? 1.0 : 0.0;
    }

    if (node.kind != NodeKind::kBuilding) {
      NodeId anchor = v;
      if (node.kind == NodeKind::kBridge) anchor = graph.snapped_street(v).value_or(v);
      row(f::kBetweenness) = between[anchor];
      const bool anchored = node.kind == NodeKind::kStreet || anchor != v;
      const double d = anchored ? trunk_dist[anchor] : kUnreachableHighwayM;
      row(f::kHighwayDistance) = std::log1p(std::min(d, kUnreachableHighwayM));
    }

    double street_count = 0.0;
    streets.visit_near(node.plane, 500.0, [&](std::uint32_t id, const geo::PlanePoint& p) {
      if (id != v && geo::planar_distance_m(node.plane, p) <= 500.0) street_count += 1.0;
    });
    row(f::kStreetDensity) = std::log1p(street_count);

    std::array<double, 3> nearest = {kDefaultRadiusM, kDefaultRadiusM, kDefaultRadiusM};
    double building_count = 0.0;
    buildings.visit_near(node.plane, kDefaultRadiusM, [&](std::uint32_t id, const geo::PlanePoint& p) {
      if (id == v) return;
      const double d = geo::planar_distance_m(node.plane, p);
      if (d > kDefaultRadiusM) return;
      building_count += 1.0;
      auto& slot = nearest[static_cast<std::size_t>(*graph.node(id).category)];
      slot = std::min(slot, d);
    });
    row(f::kNearestShop) = std::log1p(nearest[0]);
    row(f::kNearestHospital) = std::log1p(nearest[1]);
    row(f::kNearestResidence) = std::log1p(nearest[2]);
    row(f::kBuildingDensity) = std::log1p(building_count);
  }
  return x;
}

}  // namespace bridgerole::graph
