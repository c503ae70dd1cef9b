#include "healvit/windowing.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace healvit::windowing {

namespace {

using hpx::Direction;
using hpx::MeshLevel;
using hpx::PixelId;
using hpx::Quadrant;

void check_window_param(MeshLevel level, int w) {
  if (w < 1 || w > level.n()) {
    throw std::invalid_argument("window_param must be in [1, n], got " +
                                std::to_string(w) + " at level " +
                                std::to_string(level.n()));
  }
}

// Directions a quadrant merges across in the shifted partition. Each set
// points at the corner of the parent pixel that the quadrant touches, so the
// merged group is exactly the set of quadrants incident to that corner.
const std::array<Direction, 3>& merge_directions(Quadrant q) {
  static const std::array<Direction, 3> south = {Direction::SW, Direction::S,
                                                 Direction::SE};
  static const std::array<Direction, 3> east = {Direction::NE, Direction::E,
                                                Direction::SE};
  static const std::array<Direction, 3> west = {Direction::NW, Direction::W,
                                                Direction::SW};
  static const std::array<Direction, 3> north = {Direction::NW, Direction::N,
                                                 Direction::NE};
  switch (q) {
    case Quadrant::South: return south;
    case Quadrant::East: return east;
    case Quadrant::West: return west;
    case Quadrant::North: return north;
  }
  throw std::invalid_argument("merge_directions: bad quadrant");
}

// Expands a subpixel at level n-w+1 to its descendants at level n and
// appends them to out.
void append_descendants(std::int64_t subpixel, int depth,
                        std::vector<std::int64_t>* out) {
  const std::int64_t span = std::int64_t{1} << (2 * depth);
  const std::int64_t base = subpixel * span;
  for (std::int64_t i = 0; i < span; ++i) out->push_back(base + i);
}

}  // namespace

std::size_t WindowPartition::max_window_size() const {
  std::size_t m = 0;
  for (const auto& w : windows) m = std::max(m, w.size());
  return m;
}

WindowPartition build_windows(MeshLevel level, int window_param) {
  check_window_param(level, window_param);
  const MeshLevel coarse(level.n() - window_param);
  const MeshLevel sub(level.n() - window_param + 1);
  const std::int64_t span = std::int64_t{1} << (2 * window_param);

  WindowPartition part;
  part.level = level.n();
  part.window_param = window_param;
  part.kind = PartitionKind::Plain;
  part.windows.resize(coarse.num_pixels());
  part.quadrants.resize(coarse.num_pixels());
  part.pixel_to_window.assign(level.num_pixels(), -1);

  for (std::int64_t k = 0; k < coarse.num_pixels(); ++k) {
    auto& members = part.windows[k];
    members.reserve(span);
    append_descendants(k, window_param, &members);
    for (std::int64_t p : members) part.pixel_to_window[p] = k;
    auto& quads = part.quadrants[k];
    for (std::int64_t c = 0; c < 4; ++c) {
      const PixelId sp(4 * k + c, sub);
      quads.push_back({sp.index(), hpx::child_quadrant(sp)});
    }
  }
  return part;
}

WindowPartition build_shifted_windows(MeshLevel level, int window_param) {
  check_window_param(level, window_param);
  const MeshLevel sub(level.n() - window_param + 1);
  const std::int64_t num_sub = sub.num_pixels();

  // Every subpixel anchors the corner of its parent that its quadrant label
  // points at, and claims the subpixels incident to that corner. A corner is
  // claimed by several anchors; the smallest anchor index owns it.
  std::vector<std::vector<std::int64_t>> merge_sets(num_sub);
  std::vector<std::int64_t> owner(num_sub, -1);
  for (std::int64_t s = 0; s < num_sub; ++s) {
    const PixelId sp(s, sub);
    auto& set = merge_sets[s];
    set.push_back(s);
    for (Direction d : merge_directions(hpx::child_quadrant(sp))) {
      if (auto nb = hpx::neighbor(sp, d)) set.push_back(nb->index());
    }
    std::sort(set.begin(), set.end());
    if (std::adjacent_find(set.begin(), set.end()) != set.end()) {
      throw std::logic_error("shifted windows: duplicate member in merge set");
    }
  }
  for (std::int64_t s = 0; s < num_sub; ++s) {
    for (std::int64_t q : merge_sets[s]) {
      if (owner[q] < 0 || s < owner[q]) owner[q] = s;
    }
  }

  // All anchors sharing a corner must agree on the full member set;
  // otherwise the groups would not form a partition.
  std::vector<std::int64_t> anchors;
  for (std::int64_t s = 0; s < num_sub; ++s) {
    if (owner[s] == s) anchors.push_back(s);
  }
  std::vector<std::vector<std::int64_t>> groups(anchors.size());
  std::vector<std::int64_t> anchor_slot(num_sub, -1);
  for (std::size_t g = 0; g < anchors.size(); ++g) anchor_slot[anchors[g]] = g;
  for (std::int64_t s = 0; s < num_sub; ++s) {
    const std::int64_t slot = anchor_slot[owner[s]];
    if (slot < 0) {
      throw std::logic_error("shifted windows: owner is not an anchor");
    }
    groups[slot].push_back(s);
  }
  for (std::size_t g = 0; g < anchors.size(); ++g) {
    if (groups[g] != merge_sets[anchors[g]]) {
      throw std::logic_error(
          "shifted windows: ownership group differs from its anchor's merge "
          "set");
    }
  }

  WindowPartition part;
  part.level = level.n();
  part.window_param = window_param;
  part.kind = PartitionKind::Shifted;
  part.windows.resize(groups.size());
  part.quadrants.resize(groups.size());
  part.pixel_to_window.assign(level.num_pixels(), -1);

  const int depth = window_param - 1;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto& quads = part.quadrants[g];
    auto& members = part.windows[g];
    std::vector<std::int64_t> parents;
    for (std::int64_t s : groups[g]) {
      const PixelId sp(s, sub);
      quads.push_back({s, hpx::child_quadrant(sp)});
      parents.push_back(hpx::parent(sp).index());
      append_descendants(s, depth, &members);
    }
    std::sort(parents.begin(), parents.end());
    if (std::adjacent_find(parents.begin(), parents.end()) != parents.end()) {
      throw std::logic_error(
          "shifted windows: two quadrants come from the same plain window");
    }
    std::sort(members.begin(), members.end());
    for (std::int64_t p : members) {
      if (part.pixel_to_window[p] != -1) {
        throw std::logic_error("shifted windows: pixel claimed twice");
      }
      part.pixel_to_window[p] = static_cast<std::int64_t>(g);
    }
  }
  for (std::int64_t p = 0; p < level.num_pixels(); ++p) {
    if (part.pixel_to_window[p] < 0) {
      throw std::logic_error("shifted windows: pixel left unassigned");
    }
  }
  return part;
}

WindowPartition build_global_window(MeshLevel level) {
  WindowPartition part;
  part.level = level.n();
  part.window_param = 0;
  part.kind = PartitionKind::Global;
  part.windows.resize(1);
  part.quadrants.resize(1);
  part.windows[0].resize(level.num_pixels());
  std::iota(part.windows[0].begin(), part.windows[0].end(), std::int64_t{0});
  part.pixel_to_window.assign(level.num_pixels(), 0);
  return part;
}

WindowLayout make_layout(const WindowPartition& partition) {
  WindowLayout layout;
  layout.num_windows = partition.window_count();
  layout.max_size = partition.max_window_size();
  layout.members.assign(layout.num_windows * layout.max_size, -1);
  layout.valid.assign(layout.num_windows * layout.max_size, 0);
  for (std::size_t w = 0; w < layout.num_windows; ++w) {
    const auto& members = partition.windows[w];
    for (std::size_t i = 0; i < members.size(); ++i) {
      layout.members[w * layout.max_size + i] = members[i];
      layout.valid[w * layout.max_size + i] = 1;
    }
  }
  return layout;
}

}  // namespace healvit::windowing
