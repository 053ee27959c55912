#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <vector>

#include "bridgerole/geomodel.hpp"

namespace bridgerole::detail {

// Uniform bucket grid over plane coordinates. Stored items keep insertion
// order inside each cell, so visiting order is deterministic.
class SpatialGrid {
 public:
  explicit SpatialGrid(double cell_m) : cell_(cell_m) {}

  void insert(std::uint32_t id, const geo::PlanePoint& p) {
    cells_[key(cell_of(p.x), cell_of(p.y))].push_back({id, p});
    ++size_;
  }

  std::size_t size() const { return size_; }

  // Calls fn(id, point) for every item whose cell intersects the square of
  // half-width `radius` around `center`. Callers apply the exact predicate.
  template <class Fn>
  void visit_near(const geo::PlanePoint& center, double radius, Fn&& fn) const {
    const std::int64_t x0 = cell_of(center.x - radius);
    const std::int64_t x1 = cell_of(center.x + radius);
    const std::int64_t y0 = cell_of(center.y - radius);
    const std::int64_t y1 = cell_of(center.y + radius);
    for (std::int64_t cx = x0; cx <= x1; ++cx) {
      for (std::int64_t cy = y0; cy <= y1; ++cy) {
        auto it = cells_.find(key(cx, cy));
        if (it == cells_.end()) continue;
        for (const auto& item : it->second) fn(item.id, item.p);
      }
    }
  }

  // Nearest item by planar distance, ties to lowest id. Expands rings until
  // the best candidate is provably closest.
  std::uint32_t nearest(const geo::PlanePoint& center) const {
    std::uint32_t best = std::numeric_limits<std::uint32_t>::max();
    double best_d = std::numeric_limits<double>::infinity();
    if (size_ == 0) return best;
    const std::int64_t cx = cell_of(center.x);
    const std::int64_t cy = cell_of(center.y);
    for (std::int64_t ring = 0;; ++ring) {
      for (std::int64_t dx = -ring; dx <= ring; ++dx) {
        for (std::int64_t dy = -ring; dy <= ring; ++dy) {
          if (std::max(std::abs(dx), std::abs(dy)) != ring) continue;
          auto it = cells_.find(key(cx + dx, cy + dy));
          if (it == cells_.end()) continue;
          for (const auto& item : it->second) {
            const double d = geo::planar_distance_m(center, item.p);
            if (d < best_d || (d == best_d && item.id < best)) {
              best_d = d;
              best = item.id;
            }
          }
        }
      }
      // Everything outside the scanned rings is at least ring * cell_ away.
      if (best_d < static_cast<double>(ring) * cell_) return best;
      if (ring > 1'000'000) return best;
    }
  }

 private:
  struct Item {
    std::uint32_t id;
    geo::PlanePoint p;
  };

  std::int64_t cell_of(double v) const { return static_cast<std::int64_t>(std::floor(v / cell_)); }
  static std::uint64_t key(std::int64_t x, std::int64_t y) {
    return (static_cast<std::uint64_t>(x) << 32) ^ (static_cast<std::uint64_t>(y) & 0xffffffffULL);
  }

  double cell_;
  std::size_t size_ = 0;
  std::unordered_map<std::uint64_t, std::vector<Item>> cells_;
};

}  // namespace bridgerole::detail
