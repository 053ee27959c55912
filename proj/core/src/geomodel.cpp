#include "bridgerole/geomodel.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "bridgerole/error.hpp"

namespace bridgerole::geo {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::string describe(const GeoPoint& p) {
  std::ostringstream os;
  os.precision(10);
  os << "(" << p.lat << ", " << p.lon << ")";
  return os.str();
}

}  // namespace

GeoPoint GeoPoint::make(double lat, double lon) {
  GeoPoint p{lat, lon};
  if (!p.valid()) {
    throw Error(ErrorCode::kInvalidArgument, "invalid WGS84 coordinate " + describe(p));
  }
  return p;
}

bool GeoPoint::valid() const noexcept {
  return std::isfinite(lat) && std::isfinite(lon) && lat >= -90.0 && lat <= 90.0 &&
         lon >= -180.0 && lon <= 180.0;
}

double haversine_m(const GeoPoint& a, const GeoPoint& b) noexcept {
  const double phi1 = a.lat * kDeg;
  const double phi2 = b.lat * kDeg;
  const double dphi = (b.lat - a.lat) * kDeg;
  const double dlambda = (b.lon - a.lon) * kDeg;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

double planar_distance_m(const PlanePoint& a, const PlanePoint& b) noexcept {
  return std::hypot(a.x - b.x, a.y - b.y);
}

TransverseMercator::TransverseMercator(Ellipsoid ellipsoid, GeoPoint origin, double scale_factor,
                                       double zone_half_width_deg)
    : ellipsoid_(ellipsoid), origin_(origin), scale_(scale_factor),
      half_width_deg_(zone_half_width_deg) {
  const double f = ellipsoid_.flattening;
  n_ = f / (2.0 - f);
  e_ = std::sqrt(f * (2.0 - f));
  const double n = n_;
  const double n2 = n * n;
  const double n3 = n2 * n;
  const double n4 = n3 * n;
  rect_radius_ = ellipsoid_.semi_major_m / (1.0 + n) * (1.0 + n2 / 4.0 + n4 / 64.0);
  alpha_ = {n / 2.0 - 2.0 * n2 / 3.0 + 5.0 * n3 / 16.0 + 41.0 * n4 / 180.0,
            13.0 * n2 / 48.0 - 3.0 * n3 / 5.0 + 557.0 * n4 / 1440.0,
            61.0 * n3 / 240.0 - 103.0 * n4 / 140.0,
            49561.0 * n4 / 161280.0};
  beta_ = {n / 2.0 - 2.0 * n2 / 3.0 + 37.0 * n3 / 96.0 - n4 / 360.0,
           n2 / 48.0 + n3 / 15.0 - 437.0 * n4 / 1440.0,
           17.0 * n3 / 480.0 - 37.0 * n4 / 840.0,
           4397.0 * n4 / 161280.0};
  delta_ = {2.0 * n - 2.0 * n2 / 3.0 - 2.0 * n3 + 116.0 * n4 / 45.0,
            7.0 * n2 / 3.0 - 8.0 * n3 / 5.0 - 227.0 * n4 / 45.0,
            56.0 * n3 / 15.0 - 136.0 * n4 / 35.0,
            4279.0 * n4 / 630.0};
  origin_northing_ = northing_raw(origin_.lat * kDeg, 0.0);
}

const TransverseMercator& TransverseMercator::zone9_sphere() {
  static const TransverseMercator tm(Ellipsoid::sphere(kEarthRadiusM), kZone9Origin, kZone9Scale);
  return tm;
}

const TransverseMercator& TransverseMercator::jgd2011_zone9() {
  static const TransverseMercator tm(Ellipsoid::grs80(), kZone9Origin, kZone9Scale);
  return tm;
}

bool TransverseMercator::in_zone(const GeoPoint& p) const noexcept {
  return p.valid() && std::abs(p.lat - origin_.lat) <= half_width_deg_ &&
         std::abs(p.lon - origin_.lon) <= half_width_deg_;
}

double TransverseMercator::northing_raw(double lat_rad, double dlon_rad) const {
  const double sin_phi = std::sin(lat_rad);
  const double tan_chi = std::sinh(std::atanh(sin_phi) - e_ * std::atanh(e_ * sin_phi));
  const double xi_p = std::atan2(tan_chi, std::cos(dlon_rad));
  const double eta_p = std::atanh(std::sin(dlon_rad) / std::sqrt(1.0 + tan_chi * tan_chi));
  double xi = xi_p;
  for (int j = 1; j <= 4; ++j) {
    xi += alpha_[j - 1] * std::sin(2.0 * j * xi_p) * std::cosh(2.0 * j * eta_p);
  }
  return scale_ * rect_radius_ * xi;
}

PlanePoint TransverseMercator::forward(const GeoPoint& p) const {
  if (!in_zone(p)) {
    throw Error(ErrorCode::kOutOfZone, "point " + describe(p) + " is outside the projection zone");
  }
  const double lat = p.lat * kDeg;
  const double dlon = (p.lon - origin_.lon) * kDeg;
  const double sin_phi = std::sin(lat);
  const double tan_chi = std::sinh(std::atanh(sin_phi) - e_ * std::atanh(e_ * sin_phi));
  const double xi_p = std::atan2(tan_chi, std::cos(dlon));
  const double eta_p = std::atanh(std::sin(dlon) / std::sqrt(1.0 + tan_chi * tan_chi));
  double xi = xi_p;
  double eta = eta_p;
  for (int j = 1; j <= 4; ++j) {
    const double a = alpha_[j - 1];
    xi += a * std::sin(2.0 * j * xi_p) * std::cosh(2.0 * j * eta_p);
    eta += a * std::cos(2.0 * j * xi_p) * std::sinh(2.0 * j * eta_p);
  }
  const double k = scale_ * rect_radius_;
  return {k * eta, k * xi - origin_northing_};
}

GeoPoint TransverseMercator::inverse(const PlanePoint& p) const {
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
    throw Error(ErrorCode::kInvalidArgument, "non-finite plane coordinate");
  }
  const double k = scale_ * rect_radius_;
  const double xi = (p.y + origin_northing_) / k;
  const double eta = p.x / k;
  double xi_p = xi;
  double eta_p = eta;
  for (int j = 1; j <= 4; ++j) {
    const double b = beta_[j - 1];
    xi_p -= b * std::sin(2.0 * j * xi) * std::cosh(2.0 * j * eta);
    eta_p -= b * std::cos(2.0 * j * xi) * std::sinh(2.0 * j * eta);
  }
  const double chi = std::asin(std::sin(xi_p) / std::cosh(eta_p));
  const double dlon = std::atan2(std::sinh(eta_p), std::cos(xi_p));
  double phi = chi;
  for (int j = 1; j <= 4; ++j) {
    phi += delta_[j - 1] * std::sin(2.0 * j * chi);
  }
  GeoPoint out{phi / kDeg, origin_.lon + dlon / kDeg};
  if (!in_zone(out)) {
    std::ostringstream os;
    os << "plane point (" << p.x << ", " << p.y << ") maps outside the projection zone";
    throw Error(ErrorCode::kOutOfZone, os.str());
  }
  return out;
}

PlanePoint project(const GeoPoint& p) { return TransverseMercator::zone9_sphere().forward(p); }

GeoPoint unproject(const PlanePoint& p) { return TransverseMercator::zone9_sphere().inverse(p); }

}  // namespace bridgerole::geo
