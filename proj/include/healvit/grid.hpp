#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "healvit/healpix.hpp"

namespace healvit {

// Regular latitude-longitude grid. Latitude rows run from +90 at row 0 down
// to -90 at row n_lat-1 inclusive; longitude columns start at 0 and step
// 360/n_lon without wrapping back to 360.
struct GridSpec {
  int n_lat = 0;
  int n_lon = 0;

  GridSpec() = default;
  GridSpec(int n_lat_, int n_lon_);

  double latitude_deg(int row) const {
    return 90.0 - row * 180.0 / (n_lat - 1);
  }
  double longitude_deg(int col) const { return col * 360.0 / n_lon; }

  std::int64_t node_count() const {
    return static_cast<std::int64_t>(n_lat) * n_lon;
  }
  std::int64_t node_index(int row, int col) const {
    return static_cast<std::int64_t>(row) * n_lon + col;
  }
  hpx::SphericalPoint node_point(std::int64_t node) const {
    const int row = static_cast<int>(node / n_lon);
    const int col = static_cast<int>(node % n_lon);
    return {latitude_deg(row), longitude_deg(col)};
  }

  friend bool operator==(const GridSpec& a, const GridSpec& b) {
    return a.n_lat == b.n_lat && a.n_lon == b.n_lon;
  }
};

// Multi-channel scalar field on a GridSpec, stored channel-major with
// latitude rows from north to south.
struct GridField {
  GridSpec grid;
  std::vector<std::string> channels;
  std::vector<double> data;  // channels * n_lat * n_lon

  GridField() = default;
  GridField(GridSpec g, std::vector<std::string> names);

  std::size_t channel_count() const { return channels.size(); }
  double& at(std::size_t c, int row, int col) {
    return data[(c * grid.n_lat + row) * grid.n_lon + col];
  }
  double at(std::size_t c, int row, int col) const {
    return data[(c * grid.n_lat + row) * grid.n_lon + col];
  }
  // Channel values in node order (row-major over the grid).
  const double* channel_data(std::size_t c) const {
    return data.data() + c * grid.node_count();
  }
  double* channel_data(std::size_t c) {
    return data.data() + c * grid.node_count();
  }
  std::size_t channel_index(const std::string& name) const;
};

// The 54 forecast channels: 9 surface quantities followed by 5 upper-air
// quantities on 9 pressure levels.
const std::vector<std::string>& forecast_channel_manifest();
// Static inputs: land-sea mask and surface elevation.
const std::vector<std::string>& static_channel_manifest();

}  // namespace healvit
