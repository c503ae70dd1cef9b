#include "healvit/grid.hpp"

#include <stdexcept>

namespace healvit {

GridSpec::GridSpec(int n_lat_, int n_lon_) : n_lat(n_lat_), n_lon(n_lon_) {
  if (n_lat < 2) throw std::invalid_argument("GridSpec: n_lat must be >= 2");
  if (n_lon < 4) throw std::invalid_argument("GridSpec: n_lon must be >= 4");
}

GridField::GridField(GridSpec g, std::vector<std::string> names)
    : grid(g), channels(std::move(names)) {
  data.assign(channels.size() * grid.node_count(), 0.0);
}

std::size_t GridField::channel_index(const std::string& name) const {
  for (std::size_t c = 0; c < channels.size(); ++c) {
    if (channels[c] == name) return c;
  }
  throw std::out_of_range("GridField: no channel named " + name);
}

const std::vector<std::string>& forecast_channel_manifest() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v = {"t2m", "d2m", "u10", "v10", "msl",
                                  "sp",  "u100", "v100", "tcwv"};
    const char* quantities[] = {"t", "u", "v", "z", "r"};
    const char* levels[] = {"1000", "925", "850", "700", "500",
                            "300",  "250", "200", "50"};
    for (const char* q : quantities) {
      for (const char* l : levels) {
        v.push_back(std::string(q) + l);
      }
    }
    return v;
  }();
  return names;
}

const std::vector<std::string>& static_channel_manifest() {
  static const std::vector<std::string> names = {"lsm", "zs"};
  return names;
}

}  // namespace healvit
