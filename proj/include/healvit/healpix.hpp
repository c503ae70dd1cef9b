#pragma once

#include <array>
#include <cstdint>
#include <optional>

namespace healvit::hpx {

inline constexpr int kNumFaces = 12;
// 12 * 4^13 still fits comfortably in int64 index math and u32 file fields.
inline constexpr int kMaxLevel = 13;

// Refinement level of the spherical mesh. Level n subdivides each of the 12
// base faces into nside*nside pixels with nside = 2^n.
class MeshLevel {
 public:
  explicit MeshLevel(int n);

  int n() const { return n_; }
  std::int64_t nside() const { return std::int64_t{1} << n_; }
  std::int64_t num_pixels() const { return std::int64_t{12} << (2 * n_); }

  friend bool operator==(MeshLevel a, MeshLevel b) { return a.n_ == b.n_; }
  friend bool operator!=(MeshLevel a, MeshLevel b) { return a.n_ != b.n_; }

 private:
  int n_;
};

// Pixel in nested order: the low 2n bits interleave the (x, y) position
// inside the base face, the remaining high bits select the face.
class PixelId {
 public:
  PixelId(std::int64_t index, MeshLevel level);

  std::int64_t index() const { return index_; }
  MeshLevel level() const { return level_; }

  friend bool operator==(const PixelId& a, const PixelId& b) {
    return a.index_ == b.index_ && a.level_ == b.level_;
  }
  friend bool operator!=(const PixelId& a, const PixelId& b) {
    return !(a == b);
  }

 private:
  std::int64_t index_;
  MeshLevel level_;
};

// Position within a base face. x runs along the south-east edge, y along the
// south-west edge, both toward the north corner.
struct FaceCoords {
  int face = 0;
  std::int64_t x = 0;
  std::int64_t y = 0;
};

// Quadrant of a pixel inside its parent, equal to the low two index bits.
enum class Quadrant : int { South = 0, East = 1, West = 2, North = 3 };

char quadrant_char(Quadrant q);

// Compass directions on the face grid. N points from a face's south corner
// toward its north corner (+x, +y), E is (+x, -y).
enum class Direction : int { N, S, E, W, NE, NW, SE, SW };

inline constexpr std::array<Direction, 8> kAllDirections = {
    Direction::N,  Direction::S,  Direction::E,  Direction::W,
    Direction::NE, Direction::NW, Direction::SE, Direction::SW};

struct SphericalPoint {
  double latitude_deg = 0.0;   // [-90, 90]
  double longitude_deg = 0.0;  // [0, 360)
};

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

FaceCoords to_face_coords(const PixelId& p);
PixelId from_face_coords(const FaceCoords& fc, MeshLevel level);
int face_of(const PixelId& p);

std::array<PixelId, 4> children(const PixelId& p);
PixelId parent(const PixelId& p);
// Ancestor `levels_up` levels above p (0 returns p itself).
PixelId ancestor(const PixelId& p, int levels_up);
Quadrant child_quadrant(const PixelId& p);

SphericalPoint pixel_center(const PixelId& p);
// Corner order: south, east, north, west.
std::array<SphericalPoint, 4> pixel_corners(const PixelId& p);

// Neighbor across one of the 8 directions, or nullopt where the diagonal
// does not exist (across base-face corners that only join three faces).
std::optional<PixelId> neighbor(const PixelId& p, Direction d);
std::array<std::optional<PixelId>, 8> neighbors(const PixelId& p);

// Pixel whose footprint contains the given point.
PixelId locate(const SphericalPoint& pt, MeshLevel level);

Vec3 to_unit_vector(const SphericalPoint& pt);
double normalize_longitude(double lon_deg);

// Central angle in radians between two points, by the haversine formula.
double great_circle_distance(const SphericalPoint& a, const SphericalPoint& b);

}  // namespace healvit::hpx
