#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "povmap/common.hpp"

namespace povmap {

// Equirectangular meters-per-degree at the equator. The study region
// straddles the equator, so the approximation error is negligible.
inline constexpr double kMetersPerDegree = 111320.0;

// Cluster neighborhood geometry: a square grid of image tiles, each scanned
// by an overlapping lattice of detector chips.
struct GridSpec {
  int tiles_per_side = 34;
  int tile_px = 1000;
  double meters_per_px = 0.3;
  int chip_px = 416;
  int chip_overlap_px = 124;
  int channels = 3;

  int tile_count() const { return tiles_per_side * tiles_per_side; }
  int chip_stride() const { return chip_px - chip_overlap_px; }
  int chips_per_axis() const {
    return (tile_px - chip_px) / chip_stride() + 1;
  }
  // Side of the square neighborhood covered by the whole grid.
  double side_meters() const {
    return tiles_per_side * tile_px * meters_per_px;
  }

  void validate() const {
    if (tiles_per_side <= 0 || tile_px <= 0 || meters_per_px <= 0 ||
        chip_px <= 0 || channels <= 0) {
      throw InputError("grid spec: all dimensions must be positive");
    }
    if (chip_overlap_px < 0 || chip_overlap_px >= chip_px) {
      throw InputError("grid spec: chip overlap must be in [0, chip_px)");
    }
    if (chip_px > tile_px) {
      throw InputError("grid spec: chip larger than tile");
    }
    if ((tile_px - chip_px) % chip_stride() != 0) {
      throw InputError("grid spec: chip stride " +
                       std::to_string(chip_stride()) +
                       " does not tile the tile width exactly");
    }
  }
};

struct GeoPoint {
  double lat = 0;
  double lon = 0;

  bool valid() const {
    return lat >= -90.0 && lat <= 90.0 && lon >= -180.0 && lon <= 180.0;
  }
};

struct TileIndex {
  int row = 0;
  int col = 0;

  int flat(const GridSpec& spec) const { return row * spec.tiles_per_side + col; }

  static TileIndex from_flat(int flat, const GridSpec& spec) {
    return TileIndex{flat / spec.tiles_per_side, flat % spec.tiles_per_side};
  }

  bool in_range(const GridSpec& spec) const {
    return row >= 0 && row < spec.tiles_per_side && col >= 0 &&
           col < spec.tiles_per_side;
  }

  bool operator==(const TileIndex& o) const {
    return row == o.row && col == o.col;
  }
};

// Center-size box in pixel coordinates of its declared frame.
struct BoundingBox {
  double x_c = 0;
  double y_c = 0;
  double w = 0;
  double h = 0;

  double area() const { return w * h; }

  bool within_frame(double frame_px) const {
    return x_c - w / 2 >= 0 && x_c + w / 2 <= frame_px && y_c - h / 2 >= 0 &&
           y_c + h / 2 <= frame_px && w > 0 && h > 0;
  }
};

struct ChipWindow {
  int x0 = 0;
  int y0 = 0;
};

// Row-major chip origins; the default spec yields {0,292,584} x {0,292,584}.
inline std::vector<ChipWindow> chip_layout(const GridSpec& spec) {
  spec.validate();
  std::vector<ChipWindow> windows;
  const int n = spec.chips_per_axis();
  const int stride = spec.chip_stride();
  windows.reserve(std::size_t(n) * n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      windows.push_back(ChipWindow{c * stride, r * stride});
    }
  }
  return windows;
}

// Translates a chip-frame box into the tile frame, shrinking it around its
// center where it spills past a tile edge. Boxes reduced to zero area are
// reported as nullopt and dropped by callers.
inline std::optional<BoundingBox> chip_to_tile(const BoundingBox& box,
                                               const ChipWindow& window,
                                               const GridSpec& spec) {
  BoundingBox out{box.x_c + window.x0, box.y_c + window.y0, box.w, box.h};
  const double frame = spec.tile_px;
  const double half_w = std::min({out.w / 2, out.x_c, frame - out.x_c});
  const double half_h = std::min({out.h / 2, out.y_c, frame - out.y_c});
  if (half_w <= 0 || half_h <= 0) return std::nullopt;
  out.w = 2 * half_w;
  out.h = 2 * half_h;
  return out;
}

// Clamp a tile-frame box the same way (used when ingesting exporter output).
inline std::optional<BoundingBox> clamp_to_tile(const BoundingBox& box,
                                                const GridSpec& spec) {
  return chip_to_tile(box, ChipWindow{0, 0}, spec);
}

// Survey coordinates are degrees; neighborhoods are axis-aligned squares of
// side spec.side_meters() centered on each cluster. Two such squares
// intersect iff both axis separations are strictly below the side length.
inline bool neighborhoods_overlap(const GeoPoint& a, const GeoPoint& b,
                                  const GridSpec& spec) {
  const double side = spec.side_meters();
  const double d_north = kMetersPerDegree * (a.lat - b.lat);
  const double mean_lat_rad = (a.lat + b.lat) / 2 * M_PI / 180.0;
  const double d_east =
      kMetersPerDegree * std::cos(mean_lat_rad) * (a.lon - b.lon);
  return std::abs(d_north) < side && std::abs(d_east) < side;
}

inline double box_iou(const BoundingBox& a, const BoundingBox& b) {
  const double ax0 = a.x_c - a.w / 2, ax1 = a.x_c + a.w / 2;
  const double ay0 = a.y_c - a.h / 2, ay1 = a.y_c + a.h / 2;
  const double bx0 = b.x_c - b.w / 2, bx1 = b.x_c + b.w / 2;
  const double by0 = b.y_c - b.h / 2, by1 = b.y_c + b.h / 2;
  const double iw = std::max(0.0, std::min(ax1, bx1) - std::max(ax0, bx0));
  const double ih = std::max(0.0, std::min(ay1, by1) - std::max(ay0, by0));
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni <= 0 ? 0.0 : inter / uni;
}

}  // namespace povmap
