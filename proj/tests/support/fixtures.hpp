#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bridgerole/graphbuild.hpp"
#include "bridgerole/rgcnvgae.hpp"

namespace fixture {

using bridgerole::vgae::EncoderGraph;
using bridgerole::vgae::Matrix;
using bridgerole::vgae::NodePair;

inline Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = nd(rng);
  }
  return m;
}

// Two 50-node cliques joined by a single edge.
inline EncoderGraph two_cliques() {
  std::vector<NodePair> edges;
  for (std::uint32_t c = 0; c < 2; ++c) {
    for (std::uint32_t i = 0; i < 50; ++i) {
      for (std::uint32_t j = i + 1; j < 50; ++j) edges.push_back({c * 50 + i, c * 50 + j});
    }
  }
  edges.push_back({0, 50});
  return EncoderGraph::from_edges(100, edges, {});
}

// Eight nodes, both relations present, one node without bridge neighbours.
inline EncoderGraph eight_nodes() {
  return EncoderGraph::from_edges(8, {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {3, 4}, {4, 5}}, {{1, 6}, {4, 7}, {5, 7}});
}

// Minimal GeoJSON writers.
inline std::string coord(double lat, double lon) {
  std::ostringstream os;
  os.precision(12);
  os << '[' << lon << ',' << lat << ']';
  return os.str();
}

inline std::string point_feature(double lat, double lon, const std::string& props) {
  return R"({"type":"Feature","geometry":{"type":"Point","coordinates":)" + coord(lat, lon) +
         R"(},"properties":{)" + props + "}}";
}

inline std::string line_feature(const std::vector<std::array<double, 2>>& latlon, const std::string& props) {
  std::string coords = "[";
  for (std::size_t i = 0; i < latlon.size(); ++i) coords += (i ? "," : "") + coord(latlon[i][0], latlon[i][1]);
  coords += "]";
  return R"({"type":"Feature","geometry":{"type":"LineString","coordinates":)" + coords +
         R"(},"properties":{)" + props + "}}";
}

inline std::string collection(const std::vector<std::string>& features) {
  std::string out = R"({"type":"FeatureCollection","features":[)";
  for (std::size_t i = 0; i < features.size(); ++i) out += (i ? "," : "") + features[i];
  return out + "]}";
}

// Offset by meters north/east (small-distance approximation).
inline std::array<double, 2> offset(double lat, double lon, double north_m, double east_m) {
  constexpr double m_per_deg = 6'371'000.0 * std::numbers::pi / 180.0;
  return {lat + north_m / m_per_deg, lon + east_m / (m_per_deg * std::cos(lat * std::numbers::pi / 180.0))};
}

struct KnownCounts {
  unsigned shop;
  unsigned hospital;
  unsigned residence;
};

// Twelve bridges about 9 km apart; bridge i gets exactly the buildings in
// `counts[i]`, placed 100-600 m away, so with k >= the counts every
// profile equals the table.
inline const std::array<KnownCounts, 12>& twelve_bridge_counts() {
  static const std::array<KnownCounts, 12> table = {{
      {5, 0, 0},    // SupplyChain, share 1
      {9, 1, 0},    // SupplyChain, share exactly 0.9
      {8, 1, 0},    // Mixed(shop), 0.889
      {0, 5, 0},    // MedicalAccess
      {0, 4, 1},    // MedicalAccess, 0.8
      {0, 0, 20},   // ResidentialProtection
      {3, 3, 14},   // ResidentialProtection, share exactly 0.7
      {2, 2, 6},    // Mixed(residence), 0.6
      {0, 0, 0},    // BalancedMultiUse, no paths
      {3, 3, 0},    // tie -> shop, Mixed(shop) 0.5
      {1, 3, 3},    // tie -> hospital, Mixed(hospital)
      {0, 5, 2},    // MedicalAccess, 0.714
  }};
  return table;
}

inline bridgerole::graph::KnnParams twelve_bridge_knn() { return {10, 5, 20, 2000.0}; }

struct CityText {
  std::string streets;
  std::string bridges;
  std::string buildings;
};

inline CityText twelve_bridge_city() {
  std::vector<std::string> streets;
  std::vector<std::string> bridges;
  std::vector<std::string> buildings;
  const auto& table = twelve_bridge_counts();
  for (std::size_t i = 0; i < table.size(); ++i) {
    const double lat = 36.20 + 0.08 * static_cast<double>(i / 4);
    const double lon = 139.95 + 0.10 * static_cast<double>(i % 4);
    const auto w = offset(lat, lon, 0.0, -300.0);
    const auto e = offset(lat, lon, 0.0, 300.0);
    streets.push_back(line_feature({w, {lat, lon}, e}, i == 0 ? R"("highway":"trunk")" : R"("highway":"residential")"));
    bridges.push_back(point_feature(lat, lon, R"("name":"Bridge )" + std::to_string(i + 1) + R"(")"));
    int placed = 0;
    auto place = [&](unsigned count, const std::string& props) {
      for (unsigned k = 0; k < count; ++k, ++placed) {
        const double angle = 0.7 * placed;
        const double r = 100.0 + 20.0 * placed;
        const auto p = offset(lat, lon, r * std::sin(angle), r * std::cos(angle));
        buildings.push_back(point_feature(p[0], p[1], props));
      }
    };
    place(table[i].shop, R"("shop":"convenience")");
    place(table[i].hospital, R"("amenity":"hospital")");
    place(table[i].residence, R"("building":"residential")");
  }
  return {collection(streets), collection(bridges), collection(buildings)};
}

inline bridgerole::graph::HetGraph twelve_bridge_graph() {
  bridgerole::graph::HetGraph g;
  const auto city = twelve_bridge_city();
  bridgerole::graph::ingest_streets(g, city.streets);
  bridgerole::graph::ingest_bridges(g, city.bridges);
  bridgerole::graph::ingest_buildings(g, city.buildings);
  bridgerole::graph::build_edges(g, twelve_bridge_knn());
  return g;
}

// Street-only HetGraph from an adjacency list (nodes spread on a circle).
inline bridgerole::graph::HetGraph street_graph(const std::vector<std::vector<std::size_t>>& adj) {
  bridgerole::graph::HetGraph g;
  for (std::size_t i = 0; i < adj.size(); ++i) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(adj.size());
    const auto p = offset(36.0, 140.0, 500.0 * std::sin(a), 500.0 * std::cos(a));
    g.street_node_at({p[0], p[1]});
  }
  for (std::size_t i = 0; i < adj.size(); ++i) {
    for (auto j : adj[i]) {
      if (i < j) g.add_street_edge(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
    }
  }
  return g;
}

inline std::vector<std::vector<std::size_t>> random_graph(std::size_t n, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(p);
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (coin(rng)) {
        adj[i].push_back(j);
        adj[j].push_back(i);
      }
    }
  }
  return adj;
}

// Points whose gaps grow geometrically: single linkage peels one point at a
// time, so no split ever leaves two parts of min_cluster_size.
inline Matrix geometric_chain(std::size_t n, double ratio) {
  Matrix m(static_cast<Eigen::Index>(n), 2);
  for (std::size_t i = 0; i < n; ++i) {
    m(static_cast<Eigen::Index>(i), 0) = std::pow(ratio, static_cast<double>(i));
    m(static_cast<Eigen::Index>(i), 1) = 0.0;
  }
  return m;
}

inline Matrix blobs(const std::vector<std::array<double, 2>>& centers, std::size_t per_blob, double radius,
                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, radius);
  Matrix m(static_cast<Eigen::Index>(centers.size() * per_blob), 2);
  Eigen::Index r = 0;
  for (const auto& c : centers) {
    for (std::size_t i = 0; i < per_blob; ++i, ++r) {
      m(r, 0) = c[0] + nd(rng);
      m(r, 1) = c[1] + nd(rng);
    }
  }
  return m;
}

}  // namespace fixture
