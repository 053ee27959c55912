#include "bridgerole/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "json_io.hpp"
#include "rng.hpp"

namespace bridgerole::synthetic {

using detail::json;

namespace {

constexpr double kMetersPerDegree = geo::kEarthRadiusM * std::numbers::pi / 180.0;

class Offsets {
 public:
  explicit Offsets(geo::GeoPoint center) : c_(center), cos_lat_(std::cos(center.lat * std::numbers::pi / 180.0)) {}
  // (east, north) meters -> [lon, lat]
  json at(double east, double north) const {
    return json::array({c_.lon + east / (kMetersPerDegree * cos_lat_), c_.lat + north / kMetersPerDegree});
  }

 private:
  geo::GeoPoint c_;
  double cos_lat_;
};

class Uniform {
 public:
  explicit Uniform(std::uint64_t seed, std::uint64_t purpose) : rng_(detail::make_rng(seed, purpose, 0)) {}
  double operator()(double lo, double hi) { return lo + (hi - lo) * static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  int index(int n) { return static_cast<int>((*this)(0.0, static_cast<double>(n))) % n; }

 private:
  std::mt19937_64 rng_;
};

json feature(json geometry, json properties) {
  return json{{"type", "Feature"}, {"geometry", std::move(geometry)}, {"properties", std::move(properties)}};
}

json collection(json features) { return json{{"type", "FeatureCollection"}, {"features", std::move(features)}}; }

}  // namespace

CityParams dense_params() {
  CityParams p;
  p.shops = 240;
  p.district_radius_m = 1200.0;
  p.seed = 7;
  return p;
}

pipeline::InputDocuments make_city(const CityParams& p) {
  const Offsets off(p.center);
  const double half = 0.5 * p.spacing_m * (p.grid_lines - 1);
  const int steps = (p.grid_lines - 1) * (p.subdivisions + 1);
  const double step = p.spacing_m / (p.subdivisions + 1);
  const int trunk_line = p.grid_lines / 2;

  json streets = json::array();
  for (int dir = 0; dir < 2; ++dir) {
    for (int line = 0; line < p.grid_lines; ++line) {
      json coords = json::array();
      const double fixed = -half + line * p.spacing_m;
      for (int s = 0; s <= steps; ++s) {
        const double along = -half + s * step;
        coords.push_back(dir == 0 ? off.at(along, fixed) : off.at(fixed, along));
      }
      const bool trunk = dir == 0 && line == trunk_line;
      streets.push_back(feature({{"type", "LineString"}, {"coordinates", std::move(coords)}},
                                {{"highway", trunk ? "trunk" : (dir == 0 ? "secondary" : "residential")},
                                 {"name", (dir == 0 ? "East St " : "North Ave ") + std::to_string(line + 1)}}));
    }
  }

  Uniform u(p.seed, 101);
  json bridges = json::array();
  for (int b = 0; b < p.bridges; ++b) {
    const int dir = u.index(2);
    const double fixed = -half + u.index(p.grid_lines) * p.spacing_m;
    const double along = u(-half + 0.1 * p.spacing_m, half - 0.1 * p.spacing_m);
    const double span = u(12.0, 120.0);
    const double a0 = along - span / 2;
    const double a1 = along + span / 2;
    json coords = dir == 0 ? json::array({off.at(a0, fixed), off.at(a1, fixed)})
                           : json::array({off.at(fixed, a0), off.at(fixed, a1)});
    char name[32];
    std::snprintf(name, sizeof name, "Bridge %02d", b + 1);
    bridges.push_back(feature({{"type", "LineString"}, {"coordinates", std::move(coords)}},
                              {{"bridge", "yes"},
                               {"name", name},
                               {"span_length", std::round(span * 10) / 10},
                               {"year_built", 1950 + u.index(71)}}));
  }
  // An unnamed structure; ingestion skips it.
  bridges.push_back(feature({{"type", "Point"}, {"coordinates", off.at(0.0, -half)}}, {{"bridge", "yes"}}));

  const double r = p.district_radius_m;
  auto scatter = [&](Uniform& g, double cx, double cy) {
    const double angle = g(0.0, 2.0 * std::numbers::pi);
    const double dist = r * std::sqrt(g(0.0, 1.0));
    return std::pair{cx + dist * std::cos(angle), cy + dist * std::sin(angle)};
  };
  auto footprint = [&](double x, double y, bool polygon) {
    if (!polygon) return json{{"type", "Point"}, {"coordinates", off.at(x, y)}};
    const double h = 8.0;
    json ring = json::array({off.at(x - h, y - h), off.at(x + h, y - h), off.at(x + h, y + h), off.at(x - h, y + h),
                             off.at(x - h, y - h)});
    return json{{"type", "Polygon"}, {"coordinates", json::array({std::move(ring)})}};
  };

  Uniform g(p.seed, 202);
  json buildings = json::array();
  const double q = 0.5 * half;
  for (int i = 0; i < p.shops; ++i) {
    const auto [x, y] = scatter(g, -q, q);
    buildings.push_back(feature(footprint(x, y, i % 2 == 0), {{"shop", i % 3 ? "convenience" : "supermarket"}}));
  }
  for (int i = 0; i < p.hospitals; ++i) {
    const auto [x, y] = scatter(g, q, q);
    buildings.push_back(feature(footprint(x, y, true), {{"amenity", "hospital"}, {"building", "hospital"}}));
  }
  for (int i = 0; i < p.residences; ++i) {
    const auto [x, y] = scatter(g, 0.0, -q);
    buildings.push_back(feature(footprint(x, y, i % 4 == 0), {{"building", "residential"}}));
  }
  for (int i = 0; i < p.unrelated_buildings; ++i) {
    buildings.push_back(feature(footprint(g(-half, half), g(-half, half), false), {{"building", "yes"}}));
  }
  return {collection(std::move(streets)).dump(), collection(std::move(bridges)).dump(),
          collection(std::move(buildings)).dump()};
}

}  // namespace bridgerole::synthetic
