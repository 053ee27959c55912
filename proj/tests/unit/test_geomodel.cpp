#include <cmath>
#include <numbers>
#include <random>

#include "bridgerole/error.hpp"
#include "bridgerole/geomodel.hpp"
#include "doctest.h"

using namespace bridgerole;
using namespace bridgerole::geo;

namespace {

double great_circle_oracle(GeoPoint a, GeoPoint b) {
  // Spherical law of cosines in long double.
  const long double d2r = std::numbers::pi_v<long double> / 180.0L;
  const long double p1 = a.lat * d2r;
  const long double p2 = b.lat * d2r;
  const long double dl = (b.lon - a.lon) * d2r;
  const long double c = std::sin(p1) * std::sin(p2) + std::cos(p1) * std::cos(p2) * std::cos(dl);
  return static_cast<double>(std::acos(std::min(1.0L, c)) * 6'371'000.0L);
}

}  // namespace

TEST_CASE("haversine examples") {
  CHECK(haversine_m({36.0, 140.0}, {36.0, 140.0}) == 0.0);
  CHECK(std::abs(haversine_m({35.0, 139.0}, {36.0, 139.0}) - 111'195.0) < 5.0);
  CHECK(std::abs(haversine_m({35.0, 139.0}, {36.0, 139.0}) - great_circle_oracle({35.0, 139.0}, {36.0, 139.0})) < 1e-3);
  const double small = std::cos(36.0 * std::numbers::pi / 180.0) * 0.02 * 6'371'000.0 * std::numbers::pi / 180.0;
  CHECK(std::abs(haversine_m({36.0, 140.0}, {36.0, 140.02}) - small) < 10.0);
  CHECK(std::abs(haversine_m({36.0, 140.0}, {36.0, 140.02}) - 1800.0) < 10.0);
}

TEST_CASE("haversine is symmetric") {
  const GeoPoint a{35.9, 139.7};
  const GeoPoint b{36.3, 140.4};
  CHECK(haversine_m(a, b) == haversine_m(b, a));
}

TEST_CASE("GeoPoint::make validates") {
  CHECK_NOTHROW(GeoPoint::make(36.0, 140.0));
  CHECK_THROWS_AS(GeoPoint::make(91.0, 0.0), Error);
  CHECK_THROWS_AS(GeoPoint::make(0.0, 181.0), Error);
  CHECK_THROWS_AS(GeoPoint::make(std::nan(""), 0.0), Error);
  try {
    GeoPoint::make(100.0, 0.0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidArgument);
  }
}

TEST_CASE("origin maps to origin and back") {
  const PlanePoint o = project(kZone9Origin);
  CHECK(std::abs(o.x) < 0.01);
  CHECK(std::abs(o.y) < 0.01);
  const GeoPoint g = unproject({0.0, 0.0});
  CHECK(std::abs(g.lat - 36.0) < 1e-7);
  CHECK(std::abs(g.lon - (139.0 + 50.0 / 60.0)) < 1e-7);
}

TEST_CASE("axes point east and north") {
  CHECK(unproject({1000.0, 0.0}).lon > kZone9Origin.lon);
  CHECK(unproject({0.0, 1000.0}).lat > kZone9Origin.lat);
  const PlanePoint p = project({36.1, 140.0});
  CHECK(p.x > 0.0);
  CHECK(p.y > 0.0);
}

TEST_CASE("projection round trip on random in-zone points") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dlat(-2.5, 2.5);
  std::uniform_real_distribution<double> dlon(-2.5, 2.5);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const GeoPoint p{kZone9Origin.lat + dlat(rng), kZone9Origin.lon + dlon(rng)};
    const GeoPoint q = unproject(project(p));
    worst = std::max({worst, std::abs(q.lat - p.lat), std::abs(q.lon - p.lon)});
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("1 km pairs keep their length") {
  const GeoPoint a{36.05, 139.9};
  const GeoPoint b{36.05 + 1000.0 / (6'371'000.0 * std::numbers::pi / 180.0), 139.9};
  const double h = haversine_m(a, b);
  CHECK(h == doctest::Approx(1000.0).epsilon(1e-6));
  const double p = planar_distance_m(project(a), project(b));
  CHECK(std::abs(p - h) / h < 1e-3);
}

TEST_CASE("out of zone") {
  CHECK_THROWS_AS(project({36.0, 150.0}), Error);
  try {
    project({36.0, 150.0});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kOutOfZone);
  }
  CHECK(TransverseMercator::zone9_sphere().in_zone({36.5, 140.5}));
  CHECK_FALSE(TransverseMercator::zone9_sphere().in_zone({36.5, 143.5}));
}

TEST_CASE("GRS80 zone 9 round trip and known scale") {
  const auto& tm = TransverseMercator::jgd2011_zone9();
  const PlanePoint o = tm.forward(kZone9Origin);
  CHECK(std::abs(o.x) < 1e-6);
  CHECK(std::abs(o.y) < 1e-6);
  const GeoPoint p{36.3, 140.2};
  const GeoPoint q = tm.inverse(tm.forward(p));
  CHECK(std::abs(q.lat - p.lat) < 1e-9);
  CHECK(std::abs(q.lon - p.lon) < 1e-9);
  // Meridian arc from 36N to 37N on GRS80 (numerical quadrature): 110,968.304 m.
  const double arc = tm.forward({37.0, kZone9Origin.lon}).y;
  CHECK(arc == doctest::Approx(110'968.304 * 0.9999).epsilon(1e-7));
}
