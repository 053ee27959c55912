#pragma once

#include <string>
#include <string_view>

#include "bridgerole/pipeline.hpp"

namespace bridgerole::overpass {

struct BoundingBox {
  double south = 0.0;
  double west = 0.0;
  double north = 0.0;
  double east = 0.0;

  /// Throws Error(kInvalidArgument) unless south < north, west < east and
  /// all values are valid WGS84 coordinates.
  void validate() const;
};

/// Overpass QL asking for roads, bridges and candidate buildings with geometry.
std::string query(const BoundingBox& box);

/// Splits an Overpass JSON response (`out geom`) into the three input
/// collections. Tags become feature properties. Throws Error(kFormat).
pipeline::InputDocuments convert(std::string_view response);

struct FetchOptions {
  std::string endpoint = "https://overpass-api.de/api/interpreter";
  int timeout_s = 180;
};

/// POSTs the query and converts the answer. Throws Error(kNetwork) on
/// transport failures or non-200 replies; there is no offline fallback.
pipeline::InputDocuments fetch(const BoundingBox& box, const FetchOptions& options = {});

}  // namespace bridgerole::overpass
