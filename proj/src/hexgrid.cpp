#include "hexwar/hexgrid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include "hexwar/error.hpp"

namespace hexwar {

namespace {

constexpr std::array<CubeCoord, kDirections> kCubeDirections{{
    {0, 1, -1},   // N
    {1, 0, -1},   // NE
    {1, -1, 0},   // SE
    {0, -1, 1},   // S
    {-1, 0, 1},   // SW
    {-1, 1, 0},   // NW
}};

CubeCoord add(CubeCoord a, CubeCoord b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }

CubeCoord scale(CubeCoord a, int k) { return {a.x * k, a.y * k, a.z * k}; }

std::string describe(HexCoord h) {
  return "(" + std::to_string(h.col) + "," + std::to_string(h.row) + ")";
}

// ceil(a / b) for b > 0.
long ceil_div(long a, long b) { return a >= 0 ? (a + b - 1) / b : -((-a) / b); }

}  // namespace

std::string_view to_string(Terrain t) {
  switch (t) {
    case Terrain::clear: return "clear";
    case Terrain::rough: return "rough";
    case Terrain::urban: return "urban";
    case Terrain::water: return "water";
  }
  return "clear";
}

Terrain terrain_from_string(std::string_view s) {
  if (s == "clear") return Terrain::clear;
  if (s == "rough") return Terrain::rough;
  if (s == "urban") return Terrain::urban;
  if (s == "water") return Terrain::water;
  throw FormatError("unknown terrain '" + std::string(s) + "'");
}

Board::Board(int width, int height, Terrain fill) : width_(width), height_(height) {
  if (width < 2 || height < 2) {
    throw ShapeError("board must be at least 2x2, got " + std::to_string(width) + "x" +
                     std::to_string(height));
  }
  terrain_.assign(static_cast<std::size_t>(width) * height, fill);
}

int Board::index(HexCoord h) const {
  if (!contains(h)) {
    throw CoordinateError("hex " + describe(h) + " outside " + std::to_string(width_) + "x" +
                          std::to_string(height_) + " board");
  }
  return h.row * width_ + h.col;
}

CubeCoord to_cube(HexCoord h) {
  const int x = h.col;
  const int z = h.row - (h.col - (h.col & 1)) / 2;
  return {x, -x - z, z};
}

HexCoord from_cube(CubeCoord c) {
  return {c.x, c.z + (c.x - (c.x & 1)) / 2};
}

HexCoord step(HexCoord h, Direction d) {
  return from_cube(add(to_cube(h), kCubeDirections[static_cast<int>(d)]));
}

HexCoord relative_hex(HexCoord center, int dcol, int drow) {
  return from_cube(add(to_cube(center), to_cube({dcol, drow})));
}

std::array<std::optional<HexCoord>, kDirections> neighbor_slots(HexCoord h, const Board& b) {
  if (!b.contains(h)) throw CoordinateError("hex " + describe(h) + " is off the board");
  std::array<std::optional<HexCoord>, kDirections> out;
  for (int d = 0; d < kDirections; ++d) {
    const HexCoord n = step(h, static_cast<Direction>(d));
    if (b.contains(n)) out[d] = n;
  }
  return out;
}

std::vector<HexCoord> neighbors(HexCoord h, const Board& b) {
  std::vector<HexCoord> out;
  out.reserve(kDirections);
  for (const auto& n : neighbor_slots(h, b)) {
    if (n) out.push_back(*n);
  }
  return out;
}

int distance(HexCoord a, HexCoord b) {
  const CubeCoord ca = to_cube(a);
  const CubeCoord cb = to_cube(b);
  return std::max({std::abs(ca.x - cb.x), std::abs(ca.y - cb.y), std::abs(ca.z - cb.z)});
}

std::vector<HexCoord> ring(HexCoord center, int radius, const Board& b) {
  if (!b.contains(center)) throw CoordinateError("hex " + describe(center) + " is off the board");
  if (radius < 0) throw DomainError("ring radius must be >= 0");
  if (radius == 0) return {center};

  std::vector<HexCoord> out;
  CubeCoord cube = add(to_cube(center), scale(kCubeDirections[0], radius));
  // Clockwise walk starting at the north corner.
  constexpr std::array<int, kDirections> kWalk{2, 3, 4, 5, 0, 1};
  for (int side : kWalk) {
    for (int k = 0; k < radius; ++k) {
      const HexCoord h = from_cube(cube);
      if (b.contains(h)) out.push_back(h);
      cube = add(cube, kCubeDirections[side]);
    }
  }
  std::sort(out.begin(), out.end(), [](HexCoord a, HexCoord c) {
    return a.row != c.row ? a.row < c.row : a.col < c.col;
  });
  return out;
}

Eigen::Vector2d planar_offset(HexCoord from, HexCoord to) {
  const CubeCoord a = to_cube(from);
  const CubeCoord c = to_cube(to);
  const double dx = c.x - a.x;
  const double dz = c.z - a.z;
  return {1.5 * dx, std::sqrt(3.0) * (dz + dx / 2.0)};
}

Direction nearest_direction(HexCoord from, HexCoord to) {
  const Eigen::Vector2d v = planar_offset(from, to);
  int best = 0;
  double best_cos = -2.0;
  for (int d = 0; d < kDirections; ++d) {
    const Eigen::Vector2d u = planar_offset({0, 0}, step({0, 0}, static_cast<Direction>(d)));
    const double c = v.dot(u) / (v.norm() * u.norm());
    if (c > best_cos + 1e-12) {
      best_cos = c;
      best = d;
    }
  }
  return static_cast<Direction>(best);
}

WindowCell border_sector(HexCoord center, HexCoord h, int window_radius) {
  if (center == h) throw DomainError("border_sector undefined for the center hex");
  if (window_radius < 1) throw DomainError("window radius must be >= 1");
  // Window units: one column pitch (1.5) by one row pitch (sqrt 3), doubled so
  // that half-row offsets of odd columns stay integral.
  const CubeCoord a = to_cube(center);
  const CubeCoord c = to_cube(h);
  const long dx = c.x - a.x;
  const long dz = c.z - a.z;
  const long wx2 = 2 * dx;
  const long wy2 = 2 * dz + dx;
  const long m2 = std::max(std::labs(wx2), std::labs(wy2));
  const long r = window_radius;
  // round-half-down(w * r / m) == ceil((2 w r - m) / 2m); exact in integers.
  const long col = ceil_div(2 * wx2 * r - m2, 2 * m2);
  const long row = ceil_div(2 * wy2 * r - m2, 2 * m2);
  return {static_cast<int>(r + row), static_cast<int>(r + col)};
}

}  // namespace hexwar
