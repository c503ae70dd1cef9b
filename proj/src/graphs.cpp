#include "healvit/graphs.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <thread>

namespace healvit::graphs {

namespace {

constexpr double kPi = 3.14159265358979323846;
// Pruning bounds mix acos- and asin-based angle computations; the slack
// covers their floating-point disagreement so no true candidate is pruned.
constexpr double kBoundSlack = 1e-6;

// Circular distance between two longitudes, folded into [0, pi].
double circular_lon_distance(double a, double b) {
  double d = std::fmod(std::abs(a - b), 2.0 * kPi);
  return d > kPi ? 2.0 * kPi - d : d;
}

void run_chunked(std::int64_t count, int threads,
                 const std::function<void(std::int64_t, std::int64_t)>& fn) {
  if (threads <= 1 || count < 2) {
    fn(0, count);
    return;
  }
  const int t = std::min<std::int64_t>(threads, count);
  std::vector<std::thread> pool;
  pool.reserve(t);
  const std::int64_t chunk = (count + t - 1) / t;
  for (int i = 0; i < t; ++i) {
    const std::int64_t lo = i * chunk;
    const std::int64_t hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back(fn, lo, hi);
  }
  for (auto& th : pool) th.join();
}

}  // namespace

void canonicalize(BipartiteGraph* g) {
  const std::size_t e = g->sources.size();
  if (g->targets.size() != e) {
    throw std::invalid_argument("canonicalize: source/target size mismatch");
  }
  std::vector<std::uint64_t> keys(e);
  for (std::size_t i = 0; i < e; ++i) {
    if (g->sources[i] >= g->source_count || g->targets[i] >= g->target_count) {
      throw std::out_of_range("canonicalize: edge index out of range");
    }
    keys[i] = (static_cast<std::uint64_t>(g->targets[i]) << 32) | g->sources[i];
  }
  std::sort(keys.begin(), keys.end());
  for (std::size_t i = 0; i + 1 < e; ++i) {
    if (keys[i] == keys[i + 1]) {
      throw std::invalid_argument("canonicalize: duplicate edge");
    }
  }
  for (std::size_t i = 0; i < e; ++i) {
    g->targets[i] = static_cast<std::uint32_t>(keys[i] >> 32);
    g->sources[i] = static_cast<std::uint32_t>(keys[i] & 0xFFFFFFFFu);
  }
}

BipartiteGraph build_grid2mesh(const GridSpec& grid, hpx::MeshLevel level) {
  BipartiteGraph g;
  g.source_count = grid.node_count();
  g.target_count = level.num_pixels();
  const std::int64_t n = grid.node_count();
  g.sources.resize(n);
  g.targets.resize(n);
  for (std::int64_t i = 0; i < n; ++i) {
    g.sources[i] = static_cast<std::uint32_t>(i);
    g.targets[i] =
        static_cast<std::uint32_t>(hpx::locate(grid.node_point(i), level).index());
  }
  canonicalize(&g);
  return g;
}

NearestPixelIndex::NearestPixelIndex(hpx::MeshLevel level)
    : level_(level),
      n_rows_(static_cast<int>(4 * level.nside())),
      n_cols_(static_cast<int>(8 * level.nside())) {
  const std::int64_t n = level.num_pixels();
  centers_.resize(n);
  std::vector<std::int32_t> bucket_of(n);
  std::vector<std::int32_t> counts(n_rows_ * n_cols_ + 1, 0);
  for (std::int64_t p = 0; p < n; ++p) {
    const hpx::SphericalPoint c = hpx::pixel_center(hpx::PixelId(p, level));
    centers_[p] = c;
    int row = static_cast<int>((90.0 - c.latitude_deg) / 180.0 * n_rows_);
    row = std::clamp(row, 0, n_rows_ - 1);
    int col = static_cast<int>(c.longitude_deg / 360.0 * n_cols_);
    col = std::clamp(col, 0, n_cols_ - 1);
    bucket_of[p] = row * n_cols_ + col;
    ++counts[bucket_of[p] + 1];
  }
  for (std::size_t b = 1; b < counts.size(); ++b) counts[b] += counts[b - 1];
  bucket_offsets_ = counts;
  bucket_pixels_.resize(n);
  std::vector<std::int32_t> cursor(bucket_offsets_.begin(),
                                   bucket_offsets_.end() - 1);
  for (std::int64_t p = 0; p < n; ++p) {
    bucket_pixels_[cursor[bucket_of[p]]++] = static_cast<std::int32_t>(p);
  }
}

namespace {

// Running set of the four nearest pixels, ordered by (distance, index) so
// exact-distance ties resolve to the smaller index.
struct Best4 {
  std::array<double, 4> dist;
  std::array<std::int64_t, 4> idx;
  int count = 0;

  double worst() const {
    return count < 4 ? std::numeric_limits<double>::infinity() : dist[3];
  }
  void offer(double d, std::int64_t p) {
    if (count == 4 &&
        (d > dist[3] || (d == dist[3] && p > idx[3]))) {
      return;
    }
    int slot = std::min(count, 3);
    if (count < 4) ++count;
    while (slot > 0 &&
           (dist[slot - 1] > d || (dist[slot - 1] == d && idx[slot - 1] > p))) {
      dist[slot] = dist[slot - 1];
      idx[slot] = idx[slot - 1];
      --slot;
    }
    dist[slot] = d;
    idx[slot] = p;
  }
};

}  // namespace

std::array<std::int64_t, 4> NearestPixelIndex::nearest4(
    const hpx::SphericalPoint& query) const {
  const double deg = kPi / 180.0;
  const double qlat = query.latitude_deg * deg;
  const double qlon = hpx::normalize_longitude(query.longitude_deg) * deg;
  const double sin_q = std::sin(qlat);
  const double cos_q = std::cos(qlat);
  const double row_height = kPi / n_rows_;
  const double col_width = 2.0 * kPi / n_cols_;

  Best4 best;

  // Smallest central angle from the query to any point with latitude in the
  // row's interval and longitude at least dlon away.
  const auto box_bound = [&](int row, double dlon_min) {
    const double lat_hi = kPi / 2.0 - row * row_height;
    const double lat_lo = lat_hi - row_height;
    const double b = cos_q * std::cos(dlon_min);
    double f = std::max(sin_q * std::sin(lat_lo) + b * std::cos(lat_lo),
                        sin_q * std::sin(lat_hi) + b * std::cos(lat_hi));
    const double peak = std::atan2(sin_q, b);
    if (peak >= lat_lo && peak <= lat_hi) {
      f = std::max(f, std::sqrt(sin_q * sin_q + b * b));
    }
    return std::acos(std::clamp(f, -1.0, 1.0));
  };

  const auto scan_bucket = [&](int row, int col) {
    const int b = row * n_cols_ + col;
    for (std::int32_t i = bucket_offsets_[b]; i < bucket_offsets_[b + 1]; ++i) {
      const std::int32_t p = bucket_pixels_[i];
      best.offer(hpx::great_circle_distance(query, centers_[p]), p);
    }
  };

  // Minimal |dlon| from the query longitude to a column's interval.
  const auto col_dlon = [&](int col) {
    const double lo = col * col_width;
    const double hi = lo + col_width;
    if (qlon >= lo && qlon <= hi) return 0.0;
    return std::min(circular_lon_distance(qlon, lo),
                    circular_lon_distance(qlon, hi));
  };

  const auto scan_row = [&](int row) {
    const int c0 = std::clamp(static_cast<int>(qlon / col_width), 0, n_cols_ - 1);
    const int half = n_cols_ / 2;
    bool more_plus = true;
    bool more_minus = true;
    for (int dc = 0; dc <= half && (more_plus || more_minus); ++dc) {
      if (more_plus) {
        const int col = (c0 + dc) % n_cols_;
        if (box_bound(row, col_dlon(col)) > best.worst() + kBoundSlack) {
          more_plus = false;
        } else {
          scan_bucket(row, col);
        }
      }
      // Skip the minus side where it would revisit the plus column.
      if (dc == 0 || (dc == half && n_cols_ % 2 == 0)) continue;
      if (more_minus) {
        const int col = (c0 - dc + n_cols_) % n_cols_;
        if (box_bound(row, col_dlon(col)) > best.worst() + kBoundSlack) {
          more_minus = false;
        } else {
          scan_bucket(row, col);
        }
      }
    }
  };

  // Latitude-only lower bound for a whole row.
  const auto row_bound = [&](int row) {
    const double lat_hi = kPi / 2.0 - row * row_height;
    const double lat_lo = lat_hi - row_height;
    if (qlat > lat_hi) return qlat - lat_hi;
    if (qlat < lat_lo) return lat_lo - qlat;
    return 0.0;
  };

  int r0 = std::clamp(static_cast<int>((kPi / 2.0 - qlat) / row_height), 0,
                      n_rows_ - 1);
  int ru = r0;
  int rd = r0 + 1;
  bool more_up = true;
  bool more_down = rd < n_rows_;
  while (more_up || more_down) {
    const double bu =
        more_up ? row_bound(ru) : std::numeric_limits<double>::infinity();
    const double bd =
        more_down ? row_bound(rd) : std::numeric_limits<double>::infinity();
    if (bu <= bd) {
      if (bu > best.worst() + kBoundSlack) {
        more_up = false;
      } else {
        scan_row(ru);
        if (--ru < 0) more_up = false;
      }
    } else {
      if (bd > best.worst() + kBoundSlack) {
        more_down = false;
      } else {
        scan_row(rd);
        if (++rd >= n_rows_) more_down = false;
      }
    }
  }
  if (best.count < 4) {
    throw std::logic_error("nearest4: fewer than 4 pixels found");
  }
  return best.idx;
}

BipartiteGraph build_mesh2grid(const GridSpec& grid, hpx::MeshLevel level,
                               int threads) {
  const NearestPixelIndex index(level);
  const std::int64_t n = grid.node_count();
  BipartiteGraph g;
  g.source_count = level.num_pixels();
  g.target_count = n;
  g.sources.resize(4 * n);
  g.targets.resize(4 * n);
  run_chunked(n, threads, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t i = lo; i < hi; ++i) {
      const auto near = index.nearest4(grid.node_point(i));
      for (int k = 0; k < 4; ++k) {
        g.sources[4 * i + k] = static_cast<std::uint32_t>(near[k]);
        g.targets[4 * i + k] = static_cast<std::uint32_t>(i);
      }
    }
  });
  canonicalize(&g);
  return g;
}

BipartiteGraph build_downsample(hpx::MeshLevel level) {
  if (level.n() < 1) {
    throw std::invalid_argument("build_downsample: level must be >= 1");
  }
  const std::int64_t n = level.num_pixels();
  BipartiteGraph g;
  g.source_count = n;
  g.target_count = n / 4;
  g.sources.resize(n);
  g.targets.resize(n);
  for (std::int64_t p = 0; p < n; ++p) {
    g.sources[p] = static_cast<std::uint32_t>(p);
    g.targets[p] = static_cast<std::uint32_t>(p >> 2);
  }
  canonicalize(&g);
  return g;
}

BipartiteGraph build_upsample(hpx::MeshLevel level, int threads) {
  if (level.n() < 1) {
    throw std::invalid_argument("build_upsample: level must be >= 1");
  }
  const hpx::MeshLevel coarse(level.n() - 1);
  const NearestPixelIndex index(coarse);
  const std::int64_t n = level.num_pixels();
  BipartiteGraph g;
  g.source_count = coarse.num_pixels();
  g.target_count = n;
  g.sources.resize(4 * n);
  g.targets.resize(4 * n);
  run_chunked(n, threads, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t p = lo; p < hi; ++p) {
      const auto near = index.nearest4(hpx::pixel_center(hpx::PixelId(p, level)));
      for (int k = 0; k < 4; ++k) {
        g.sources[4 * p + k] = static_cast<std::uint32_t>(near[k]);
        g.targets[4 * p + k] = static_cast<std::uint32_t>(p);
      }
    }
  });
  canonicalize(&g);
  return g;
}

}  // namespace healvit::graphs
