#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "healvit/grid.hpp"
#include "healvit/healpix.hpp"

namespace healvit::graphs {

// Directed bipartite graph between two node sets. Edges are kept in
// canonical order, sorted by (target, source), so edge k has a stable
// identity that per-edge embeddings can bind to.
struct BipartiteGraph {
  std::int64_t source_count = 0;
  std::int64_t target_count = 0;
  std::vector<std::uint32_t> sources;
  std::vector<std::uint32_t> targets;
  int edge_embedding_dim = 32;

  std::size_t edge_count() const { return sources.size(); }
};

// Sorts parallel edge arrays by (target, source) and checks ranges and
// duplicates. Builders call this before returning.
void canonicalize(BipartiteGraph* g);

// One edge per grid node, to the pixel containing it.
BipartiteGraph build_grid2mesh(const GridSpec& grid, hpx::MeshLevel level);

// Four edges per grid node, from the pixels with nearest centers.
BipartiteGraph build_mesh2grid(const GridSpec& grid, hpx::MeshLevel level,
                               int threads = 1);

// One edge per pixel at `level`, to its parent at level-1.
BipartiteGraph build_downsample(hpx::MeshLevel level);

// Four edges per pixel at `level`, from the nearest level-1 pixel centers.
BipartiteGraph build_upsample(hpx::MeshLevel level, int threads = 1);

// Bucketed spatial index over pixel centers for exact nearest-4 queries.
// Ties in distance are broken toward the smaller pixel index.
class NearestPixelIndex {
 public:
  explicit NearestPixelIndex(hpx::MeshLevel level);

  std::array<std::int64_t, 4> nearest4(const hpx::SphericalPoint& query) const;

  hpx::MeshLevel level() const { return level_; }

 private:
  hpx::MeshLevel level_;
  int n_rows_;
  int n_cols_;
  // Centers kept in degrees: candidate distances go through the same
  // great_circle_distance call a brute-force scan would make, so the two
  // agree bitwise and the tie rule is exact.
  std::vector<hpx::SphericalPoint> centers_;
  std::vector<std::int32_t> bucket_offsets_;  // CSR over row-major buckets
  std::vector<std::int32_t> bucket_pixels_;

  friend struct NearestQuery;
};

}  // namespace healvit::graphs
