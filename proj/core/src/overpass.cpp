#include "bridgerole/overpass.hpp"

#include <cstdio>

#include "bridgerole/error.hpp"
#include "httplib.h"
#include "json_io.hpp"

namespace bridgerole::overpass {

using detail::json;

void BoundingBox::validate() const {
  const bool ok = south >= -90.0 && north <= 90.0 && west >= -180.0 && east <= 180.0 && south < north && west < east;
  if (!ok) throw Error(ErrorCode::kInvalidArgument, "bounding box must satisfy south < north and west < east");
}

std::string query(const BoundingBox& box) {
  box.validate();
  char bbox[128];
  std::snprintf(bbox, sizeof bbox, "(%.7f,%.7f,%.7f,%.7f)", box.south, box.west, box.north, box.east);
  const std::string b(bbox);
  return "[out:json][timeout:180];(way[\"highway\"]" + b + ";way[\"bridge\"]" + b + ";way[\"man_made\"=\"bridge\"]" +
         b + ";nwr[\"building\"]" + b + ";nwr[\"shop\"]" + b + ";nwr[\"amenity\"=\"hospital\"]" + b +
         ";);out geom;";
}

namespace {

bool truthy(const json& tags, const char* key) {
  auto it = tags.find(key);
  return it != tags.end() && it->is_string() && *it != "no";
}

json way_geometry(const json& geometry) {
  json coords = json::array();
  for (const auto& p : geometry) coords.push_back({p.at("lon").get<double>(), p.at("lat").get<double>()});
  const bool closed = coords.size() >= 4 && coords.front() == coords.back();
  if (closed) return json{{"type", "Polygon"}, {"coordinates", json::array({std::move(coords)})}};
  return json{{"type", "LineString"}, {"coordinates", std::move(coords)}};
}

json feature(json geometry, const json& tags) {
  return json{{"type", "Feature"}, {"geometry", std::move(geometry)}, {"properties", tags}};
}

}  // namespace

pipeline::InputDocuments convert(std::string_view response) {
  const auto doc = detail::parse_json(response, "overpass response");
  if (!doc.is_object() || !doc.contains("elements") || !doc["elements"].is_array()) {
    throw Error(ErrorCode::kFormat, "overpass response has no elements array");
  }
  json streets = json::array();
  json bridges = json::array();
  json buildings = json::array();
  try {
    for (const auto& el : doc["elements"]) {
      const auto type = el.value("type", "");
      const json tags = el.value("tags", json::object());
      const bool building = truthy(tags, "building") || truthy(tags, "shop") ||
                            (tags.contains("amenity") && tags["amenity"] == "hospital");
      const bool bridge = (truthy(tags, "bridge") || tags.value("man_made", "") == "bridge") && tags.contains("name");
      if (type == "way" && el.contains("geometry")) {
        const json geom = way_geometry(el["geometry"]);
        if (tags.contains("highway")) {
          // Closed roads (roundabouts) stay lines.
          const bool ring = geom["type"] == "Polygon";
          json line{{"type", "LineString"}, {"coordinates", ring ? geom["coordinates"][0] : geom["coordinates"]}};
          streets.push_back(feature(std::move(line), tags));
        }
        if (bridge) bridges.push_back(feature(geom, tags));
        if (building && !tags.contains("highway")) buildings.push_back(feature(geom, tags));
      } else if (type == "node" && el.contains("lat") && el.contains("lon")) {
        const json geom{{"type", "Point"}, {"coordinates", {el["lon"].get<double>(), el["lat"].get<double>()}}};
        if (bridge) bridges.push_back(feature(geom, tags));
        if (building) buildings.push_back(feature(geom, tags));
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("overpass response: ") + e.what());
  }
  auto fc = [](json features) { return json{{"type", "FeatureCollection"}, {"features", std::move(features)}}.dump(); };
  return {fc(std::move(streets)), fc(std::move(bridges)), fc(std::move(buildings))};
}

pipeline::InputDocuments fetch(const BoundingBox& box, const FetchOptions& options) {
  const auto& url = options.endpoint;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::kInvalidArgument, "endpoint must include a scheme");
  const auto path_start = url.find('/', scheme_end + 3);
  const std::string origin = url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  httplib::Client client(origin);
  client.set_connection_timeout(options.timeout_s, 0);
  client.set_read_timeout(options.timeout_s, 0);
  client.set_follow_location(true);
  const auto res = client.Post(path, httplib::Params{{"data", query(box)}});
  if (!res) throw Error(ErrorCode::kNetwork, "overpass request failed: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw Error(ErrorCode::kNetwork, "overpass returned HTTP " + std::to_string(res->status));
  }
  return convert(res->body);
}

}  // namespace bridgerole::overpass
