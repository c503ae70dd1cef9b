#pragma once

#include <cstdint>
#include <vector>

#include "healvit/healpix.hpp"

namespace healvit::windowing {

enum class PartitionKind { Plain, Shifted, Global };

// One quadrant of a window: a pixel one level above the window's member
// pixels, together with its position label inside its own parent.
struct WindowQuadrant {
  std::int64_t subpixel = 0;
  hpx::Quadrant label = hpx::Quadrant::South;
};

// Disjoint cover of all pixels at one mesh level by attention windows.
struct WindowPartition {
  int level = 0;
  int window_param = 0;  // 0 means a single window spanning the mesh
  PartitionKind kind = PartitionKind::Plain;
  // Member pixel indices per window, each sorted ascending.
  std::vector<std::vector<std::int64_t>> windows;
  // The level n-w+1 subpixels forming each window, with quadrant labels.
  // Empty for Global partitions.
  std::vector<std::vector<WindowQuadrant>> quadrants;
  std::vector<std::int64_t> pixel_to_window;  // size 12*4^n

  std::size_t window_count() const { return windows.size(); }
  std::size_t max_window_size() const;
};

// Plain partition: window k holds the 4^w descendants of level n-w pixel k.
WindowPartition build_windows(hpx::MeshLevel level, int window_param);

// Shifted partition: windows are regrouped around the corners of the level
// n-w pixels, so that attention mixes across plain window boundaries.
WindowPartition build_shifted_windows(hpx::MeshLevel level, int window_param);

// Single window holding every pixel; used when the mesh is too coarse to
// subdivide (window_param 0 in the model configuration).
WindowPartition build_global_window(hpx::MeshLevel level);

// Rectangular member table for batched attention. Windows shorter than the
// widest one are padded with -1 entries and valid = 0.
struct WindowLayout {
  std::size_t num_windows = 0;
  std::size_t max_size = 0;
  std::vector<std::int64_t> members;  // num_windows * max_size, -1 padding
  std::vector<std::uint8_t> valid;    // 1 for real members

  std::int64_t member(std::size_t w, std::size_t slot) const {
    return members[w * max_size + slot];
  }
};

WindowLayout make_layout(const WindowPartition& partition);

}  // namespace healvit::windowing
