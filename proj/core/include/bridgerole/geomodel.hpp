#pragma once

#include <array>

namespace bridgerole::geo {

/// WGS84 geographic position in degrees.
struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  /// Throws Error(kInvalidArgument) for NaN or out-of-range values.
  static GeoPoint make(double lat, double lon);
  bool valid() const noexcept;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Metric plane coordinates: meters east (x) and north (y) of the zone origin.
struct PlanePoint {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const PlanePoint&, const PlanePoint&) = default;
};

inline constexpr double kEarthRadiusM = 6'371'000.0;

/// Great-circle distance on a sphere of radius kEarthRadiusM.
double haversine_m(const GeoPoint& a, const GeoPoint& b) noexcept;

double planar_distance_m(const PlanePoint& a, const PlanePoint& b) noexcept;

struct Ellipsoid {
  double semi_major_m;
  double flattening;

  static constexpr Ellipsoid grs80() { return {6'378'137.0, 1.0 / 298.257222101}; }
  static constexpr Ellipsoid sphere(double radius_m) { return {radius_m, 0.0}; }
};

/// Transverse Mercator via Krüger's series (4th order in the third
/// flattening). With flattening 0 the series collapses to the exact
/// spherical transverse Mercator.
class TransverseMercator {
 public:
  TransverseMercator(Ellipsoid ellipsoid, GeoPoint origin, double scale_factor,
                     double zone_half_width_deg = 3.0);

  /// Zone 9 of the Japan Plane Rectangular system on the earth sphere used by
  /// haversine_m. Distances agree with haversine_m to ~1e-4 within 50 km.
  static const TransverseMercator& zone9_sphere();
  /// JGD2011 zone 9 on GRS80 (EPSG:6677).
  static const TransverseMercator& jgd2011_zone9();

  /// Throws Error(kOutOfZone) when `p` is outside the zone.
  PlanePoint forward(const GeoPoint& p) const;
  /// Throws Error(kOutOfZone) when the result would fall outside the zone.
  GeoPoint inverse(const PlanePoint& p) const;

  const GeoPoint& origin() const noexcept { return origin_; }
  bool in_zone(const GeoPoint& p) const noexcept;

 private:
  double northing_raw(double lat_rad, double dlon_rad) const;

  Ellipsoid ellipsoid_;
  GeoPoint origin_;
  double scale_;
  double half_width_deg_;
  double n_;
  double e_;
  double rect_radius_;
  std::array<double, 4> alpha_;
  std::array<double, 4> beta_;
  std::array<double, 4> delta_;
  double origin_northing_;
};

/// Zone 9 origin: 36°N, 139°50'E.
inline constexpr GeoPoint kZone9Origin{36.0, 139.0 + 50.0 / 60.0};
inline constexpr double kZone9Scale = 0.9999;

/// Forward projection used by every spatial stage (zone9_sphere()).
PlanePoint project(const GeoPoint& p);
GeoPoint unproject(const PlanePoint& p);

}  // namespace bridgerole::geo
