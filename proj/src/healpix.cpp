#include "healvit/healpix.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace healvit::hpx {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Longitude of each base face center in units of pi/4.
constexpr int kFaceLon[kNumFaces] = {1, 3, 5, 7, 0, 2, 4, 6, 1, 3, 5, 7};
// Vertical offset of each base face in the same units: 0 for the north
// faces, -1 for the equatorial belt, -2 for the south faces.
constexpr int kFaceLat[kNumFaces] = {0, 0, 0,  0,  -1, -1,
                                     -1, -1, -2, -2, -2, -2};

// Destination face when a neighbor lookup leaves its base face. Rows are
// indexed by crossing code 4 + dxf + 3*dyf where dxf/dyf in {-1,0,1} say
// which coordinate over- or underflowed. -1 marks the missing diagonal at
// corners where only three faces meet.
constexpr int kCrossFace[9][kNumFaces] = {
    {8, 9, 10, 11, -1, -1, -1, -1, 10, 11, 8, 9},
    {5, 6, 7, 4, 8, 9, 10, 11, 9, 10, 11, 8},
    {-1, -1, -1, -1, 5, 6, 7, 4, -1, -1, -1, -1},
    {4, 5, 6, 7, 11, 8, 9, 10, 11, 8, 9, 10},
    {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11},
    {1, 2, 3, 0, 0, 1, 2, 3, 5, 6, 7, 4},
    {-1, -1, -1, -1, 7, 4, 5, 6, -1, -1, -1, -1},
    {3, 0, 1, 2, 3, 0, 1, 2, 4, 5, 6, 7},
    {2, 3, 0, 1, -1, -1, -1, -1, 0, 1, 2, 3}};

// Coordinate transform applied after a crossing, same indexing as above.
// Bit 0 mirrors x, bit 1 mirrors y, bit 2 swaps x and y, in that order.
constexpr int kCrossTransform[9][kNumFaces] = {
    {0, 0, 0, 0, 0, 0, 0, 0, 3, 3, 3, 3},
    {0, 0, 0, 0, 0, 0, 0, 0, 6, 6, 6, 6},
    {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0},
    {0, 0, 0, 0, 0, 0, 0, 0, 5, 5, 5, 5},
    {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0},
    {5, 5, 5, 5, 0, 0, 0, 0, 0, 0, 0, 0},
    {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0},
    {6, 6, 6, 6, 0, 0, 0, 0, 0, 0, 0, 0},
    {3, 3, 3, 3, 0, 0, 0, 0, 0, 0, 0, 0}};

std::uint64_t spread_bits(std::uint64_t v) {
  v &= 0xFFFFFFFFu;
  v = (v | (v << 16)) & 0x0000FFFF0000FFFFull;
  v = (v | (v << 8)) & 0x00FF00FF00FF00FFull;
  v = (v | (v << 4)) & 0x0F0F0F0F0F0F0F0Full;
  v = (v | (v << 2)) & 0x3333333333333333ull;
  v = (v | (v << 1)) & 0x5555555555555555ull;
  return v;
}

std::uint64_t compact_bits(std::uint64_t v) {
  v &= 0x5555555555555555ull;
  v = (v | (v >> 1)) & 0x3333333333333333ull;
  v = (v | (v >> 2)) & 0x0F0F0F0F0F0F0F0Full;
  v = (v | (v >> 4)) & 0x00FF00FF00FF00FFull;
  v = (v | (v >> 8)) & 0x0000FFFF0000FFFFull;
  v = (v | (v >> 16)) & 0x00000000FFFFFFFFull;
  return v;
}

struct ZPhi {
  double z = 0.0;    // sine of latitude
  double phi = 0.0;  // longitude in radians, [0, 2*pi)
};

double wrap_two_pi(double phi) {
  const double two_pi = 2.0 * kPi;
  phi = std::fmod(phi, two_pi);
  if (phi < 0.0) phi += two_pi;
  return phi;
}

// Maps a continuous position (u, v) in [0, nside]^2 on a base face to the
// sphere. Pixel (x, y) has its center at (x+0.5, y+0.5) and its corners at
// the integer grid points. The map is area preserving.
ZPhi project_face_point(int face, double u, double v, double nside) {
  const double xh = kFaceLon[face] + (u - v) / nside;
  const double yh = kFaceLat[face] + (u + v) / nside;
  ZPhi r;
  if (std::abs(yh) <= 1.0) {
    r.z = yh * (2.0 / 3.0);
    r.phi = wrap_two_pi(xh * (kPi / 4.0));
  } else {
    const double sigma = 2.0 - std::abs(yh);
    r.z = (yh > 0.0 ? 1.0 : -1.0) * (1.0 - sigma * sigma / 3.0);
    // Nearest odd multiple of pi/4 below or at the pole sector center.
    const double xc = 2.0 * std::floor((xh + 4.0) / 2.0) - 3.0;
    const double ph = sigma > 0.0 ? xc + (xh - xc) / sigma : xh;
    r.phi = wrap_two_pi(ph * (kPi / 4.0));
  }
  return r;
}

SphericalPoint to_spherical(const ZPhi& zp) {
  const double z = std::min(1.0, std::max(-1.0, zp.z));
  SphericalPoint p;
  p.latitude_deg = std::asin(z) * (180.0 / kPi);
  p.longitude_deg = normalize_longitude(zp.phi * (180.0 / kPi));
  return p;
}

FaceCoords locate_zphi(double z, double phi, std::int64_t nside, int order) {
  const double tt = wrap_two_pi(phi) / (kPi / 2.0);  // [0, 4)
  const double za = std::abs(z);
  FaceCoords fc;
  if (za <= 2.0 / 3.0) {
    const double temp1 = static_cast<double>(nside) * (0.5 + tt);
    const double temp2 = static_cast<double>(nside) * (z * 0.75);
    // Indices of the ascending and descending edge lines.
    const auto jp = static_cast<std::int64_t>(temp1 - temp2);
    const auto jm = static_cast<std::int64_t>(temp1 + temp2);
    const std::int64_t ifp = jp >> order;
    const std::int64_t ifm = jm >> order;
    if (ifp == ifm) {
      fc.face = (ifp == 4) ? 4 : static_cast<int>(ifp) + 4;
    } else if (ifp < ifm) {
      fc.face = static_cast<int>(ifp);
    } else {
      fc.face = static_cast<int>(ifm) + 8;
    }
    fc.x = jm & (nside - 1);
    fc.y = nside - (jp & (nside - 1)) - 1;
  } else {
    int ntt = static_cast<int>(tt);
    if (ntt >= 4) ntt = 3;
    const double tp = tt - ntt;
    const double tmp = static_cast<double>(nside) * std::sqrt(3.0 * (1.0 - za));
    auto jp = static_cast<std::int64_t>(tp * tmp);
    auto jm = static_cast<std::int64_t>((1.0 - tp) * tmp);
    // Points exactly on the cap boundary can land one cell outside.
    jp = std::min(jp, nside - 1);
    jm = std::min(jm, nside - 1);
    if (z >= 0.0) {
      fc.face = ntt;
      fc.x = nside - jm - 1;
      fc.y = nside - jp - 1;
    } else {
      fc.face = ntt + 8;
      fc.x = jp;
      fc.y = jm;
    }
  }
  return fc;
}

}  // namespace

MeshLevel::MeshLevel(int n) : n_(n) {
  if (n < 0 || n > kMaxLevel) {
    throw std::invalid_argument("MeshLevel: n must be in [0, " +
                                std::to_string(kMaxLevel) + "], got " +
                                std::to_string(n));
  }
}

PixelId::PixelId(std::int64_t index, MeshLevel level)
    : index_(index), level_(level) {
  if (index < 0 || index >= level.num_pixels()) {
    throw std::out_of_range("PixelId: index " + std::to_string(index) +
                            " outside level " + std::to_string(level.n()));
  }
}

char quadrant_char(Quadrant q) {
  switch (q) {
    case Quadrant::South: return 'S';
    case Quadrant::East: return 'E';
    case Quadrant::West: return 'W';
    case Quadrant::North: return 'N';
  }
  throw std::invalid_argument("quadrant_char: bad quadrant");
}

FaceCoords to_face_coords(const PixelId& p) {
  const int n = p.level().n();
  const std::uint64_t within =
      static_cast<std::uint64_t>(p.index()) & ((std::uint64_t{1} << (2 * n)) - 1);
  FaceCoords fc;
  fc.face = static_cast<int>(p.index() >> (2 * n));
  fc.x = static_cast<std::int64_t>(compact_bits(within));
  fc.y = static_cast<std::int64_t>(compact_bits(within >> 1));
  return fc;
}

PixelId from_face_coords(const FaceCoords& fc, MeshLevel level) {
  const std::int64_t nside = level.nside();
  if (fc.face < 0 || fc.face >= kNumFaces || fc.x < 0 || fc.x >= nside ||
      fc.y < 0 || fc.y >= nside) {
    throw std::out_of_range("from_face_coords: coordinates outside face");
  }
  const std::uint64_t within = spread_bits(static_cast<std::uint64_t>(fc.x)) |
                               (spread_bits(static_cast<std::uint64_t>(fc.y)) << 1);
  const std::int64_t index =
      (static_cast<std::int64_t>(fc.face) << (2 * level.n())) |
      static_cast<std::int64_t>(within);
  return PixelId(index, level);
}

int face_of(const PixelId& p) {
  return static_cast<int>(p.index() >> (2 * p.level().n()));
}

std::array<PixelId, 4> children(const PixelId& p) {
  const MeshLevel next(p.level().n() + 1);
  const std::int64_t base = p.index() * 4;
  return {PixelId(base + 0, next), PixelId(base + 1, next),
          PixelId(base + 2, next), PixelId(base + 3, next)};
}

PixelId parent(const PixelId& p) {
  if (p.level().n() == 0) {
    throw std::invalid_argument("parent: base face pixels have no parent");
  }
  return PixelId(p.index() >> 2, MeshLevel(p.level().n() - 1));
}

PixelId ancestor(const PixelId& p, int levels_up) {
  if (levels_up < 0 || levels_up > p.level().n()) {
    throw std::invalid_argument("ancestor: levels_up out of range");
  }
  return PixelId(p.index() >> (2 * levels_up),
                 MeshLevel(p.level().n() - levels_up));
}

Quadrant child_quadrant(const PixelId& p) {
  if (p.level().n() == 0) {
    throw std::invalid_argument("child_quadrant: base face pixels have no parent");
  }
  return static_cast<Quadrant>(p.index() & 3);
}

SphericalPoint pixel_center(const PixelId& p) {
  const FaceCoords fc = to_face_coords(p);
  const double nside = static_cast<double>(p.level().nside());
  return to_spherical(project_face_point(
      fc.face, static_cast<double>(fc.x) + 0.5, static_cast<double>(fc.y) + 0.5,
      nside));
}

std::array<SphericalPoint, 4> pixel_corners(const PixelId& p) {
  const FaceCoords fc = to_face_coords(p);
  const double nside = static_cast<double>(p.level().nside());
  const double x = static_cast<double>(fc.x);
  const double y = static_cast<double>(fc.y);
  return {to_spherical(project_face_point(fc.face, x, y, nside)),
          to_spherical(project_face_point(fc.face, x + 1.0, y, nside)),
          to_spherical(project_face_point(fc.face, x + 1.0, y + 1.0, nside)),
          to_spherical(project_face_point(fc.face, x, y + 1.0, nside))};
}

namespace {

// (dx, dy) step on the face grid for each direction.
constexpr std::pair<int, int> direction_offset(Direction d) {
  switch (d) {
    case Direction::N: return {1, 1};
    case Direction::S: return {-1, -1};
    case Direction::E: return {1, -1};
    case Direction::W: return {-1, 1};
    case Direction::NE: return {1, 0};
    case Direction::NW: return {0, 1};
    case Direction::SE: return {0, -1};
    case Direction::SW: return {-1, 0};
  }
  return {0, 0};
}

}  // namespace

std::optional<PixelId> neighbor(const PixelId& p, Direction d) {
  const MeshLevel level = p.level();
  const std::int64_t nside = level.nside();
  FaceCoords fc = to_face_coords(p);
  const auto [dx, dy] = direction_offset(d);
  std::int64_t x = fc.x + dx;
  std::int64_t y = fc.y + dy;
  int crossing = 4;
  if (x < 0) {
    x += nside;
    crossing -= 1;
  } else if (x >= nside) {
    x -= nside;
    crossing += 1;
  }
  if (y < 0) {
    y += nside;
    crossing -= 3;
  } else if (y >= nside) {
    y -= nside;
    crossing += 3;
  }
  const int face = kCrossFace[crossing][fc.face];
  if (face < 0) return std::nullopt;
  const int transform = kCrossTransform[crossing][fc.face];
  if (transform & 1) x = nside - x - 1;
  if (transform & 2) y = nside - y - 1;
  if (transform & 4) std::swap(x, y);
  return from_face_coords({face, x, y}, level);
}

std::array<std::optional<PixelId>, 8> neighbors(const PixelId& p) {
  std::array<std::optional<PixelId>, 8> out;
  for (std::size_t i = 0; i < kAllDirections.size(); ++i) {
    out[i] = neighbor(p, kAllDirections[i]);
  }
  return out;
}

PixelId locate(const SphericalPoint& pt, MeshLevel level) {
  if (!std::isfinite(pt.latitude_deg) || !std::isfinite(pt.longitude_deg)) {
    throw std::invalid_argument("locate: non-finite coordinates");
  }
  if (pt.latitude_deg < -90.0 || pt.latitude_deg > 90.0) {
    throw std::invalid_argument("locate: latitude outside [-90, 90]");
  }
  const double lat = pt.latitude_deg * (kPi / 180.0);
  const double phi = pt.longitude_deg * (kPi / 180.0);
  const FaceCoords fc = locate_zphi(std::sin(lat), phi, level.nside(), level.n());
  return from_face_coords(fc, level);
}

Vec3 to_unit_vector(const SphericalPoint& pt) {
  const double lat = pt.latitude_deg * (kPi / 180.0);
  const double lon = pt.longitude_deg * (kPi / 180.0);
  const double c = std::cos(lat);
  return {c * std::cos(lon), c * std::sin(lon), std::sin(lat)};
}

double normalize_longitude(double lon_deg) {
  lon_deg = std::fmod(lon_deg, 360.0);
  if (lon_deg < 0.0) lon_deg += 360.0;
  return lon_deg;
}

double great_circle_distance(const SphericalPoint& a, const SphericalPoint& b) {
  const double lat1 = a.latitude_deg * (kPi / 180.0);
  const double lat2 = b.latitude_deg * (kPi / 180.0);
  const double dlat = lat2 - lat1;
  const double dlon = (b.longitude_deg - a.longitude_deg) * (kPi / 180.0);
  const double s1 = std::sin(0.5 * dlat);
  const double s2 = std::sin(0.5 * dlon);
  const double h = s1 * s1 + std::cos(lat1) * std::cos(lat2) * s2 * s2;
  return 2.0 * std::asin(std::min(1.0, std::sqrt(h)));
}

}  // namespace healvit::hpx
