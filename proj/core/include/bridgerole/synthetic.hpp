#pragma once

#include <cstdint>

#include "bridgerole/geomodel.hpp"
#include "bridgerole/pipeline.hpp"

namespace bridgerole::synthetic {

/// Grid city with a trunk road, named bridges on street segments and three
/// building districts (commercial, medical, residential).
struct CityParams {
  geo::GeoPoint center{36.37, 140.47};
  int grid_lines = 12;        // per direction
  double spacing_m = 600.0;   // between parallel streets
  int subdivisions = 2;       // extra vertices per block edge
  int bridges = 30;
  int shops = 60;
  int hospitals = 10;
  int residences = 160;
  int unrelated_buildings = 12;
  double district_radius_m = 700.0;
  std::uint64_t seed = 1;
};

/// Many shops packed around the commercial district.
CityParams dense_params();

pipeline::InputDocuments make_city(const CityParams& params = {});

}  // namespace bridgerole::synthetic
