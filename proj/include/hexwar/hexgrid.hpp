#ifndef HEXWAR_HEXGRID_HPP
#define HEXWAR_HEXGRID_HPP

#include <Eigen/Core>
#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace hexwar {

/// Offset coordinate in the "odd-q" layout: flat-topped hexes, odd columns
/// shifted down by half a hex. Rows grow southward.
struct HexCoord {
  int col = 0;
  int row = 0;
  auto operator<=>(const HexCoord&) const = default;
};

/// Cube coordinate (x + y + z == 0).
struct CubeCoord {
  int x = 0;
  int y = 0;
  int z = 0;
  auto operator<=>(const CubeCoord&) const = default;
};

enum class Terrain : std::uint8_t { clear = 0, rough = 1, urban = 2, water = 3 };

std::string_view to_string(Terrain t);
Terrain terrain_from_string(std::string_view s);

/// Neighbor directions in the fixed encoding order.
enum class Direction : std::uint8_t { N = 0, NE, SE, S, SW, NW };
inline constexpr int kDirections = 6;

class Board {
 public:
  Board(int width, int height, Terrain fill = Terrain::clear);

  int width() const { return width_; }
  int height() const { return height_; }
  int size() const { return width_ * height_; }

  bool contains(HexCoord h) const {
    return h.col >= 0 && h.col < width_ && h.row >= 0 && h.row < height_;
  }
  /// Row-major index; throws CoordinateError when out of bounds.
  int index(HexCoord h) const;
  HexCoord coord(int index) const { return {index % width_, index / width_}; }

  Terrain at(HexCoord h) const { return terrain_[index(h)]; }
  void set(HexCoord h, Terrain t) { terrain_[index(h)] = t; }
  bool passable(HexCoord h) const { return contains(h) && at(h) != Terrain::water; }

  const std::vector<Terrain>& terrain() const { return terrain_; }

  bool operator==(const Board&) const = default;

 private:
  int width_;
  int height_;
  std::vector<Terrain> terrain_;
};

CubeCoord to_cube(HexCoord h);
HexCoord from_cube(CubeCoord c);

/// Unbounded single step; the result may lie off any board.
HexCoord step(HexCoord h, Direction d);

/// Hex reached from `center` by the offset (dcol, drow) as read on an
/// even-column origin. Translating `center` by any cube vector translates the
/// result rigidly, so windows built from it look the same at every parity.
HexCoord relative_hex(HexCoord center, int dcol, int drow);

/// Neighbor in direction d if it is on the board.
std::array<std::optional<HexCoord>, kDirections> neighbor_slots(HexCoord h, const Board& b);

/// In-bounds neighbors in N, NE, SE, S, SW, NW order.
std::vector<HexCoord> neighbors(HexCoord h, const Board& b);

/// Hex step count between a and b.
int distance(HexCoord a, HexCoord b);

/// In-bounds hexes at exactly `radius` from `center`, row-major order.
std::vector<HexCoord> ring(HexCoord center, int radius, const Board& b);

/// Planar offset of `to` from `from` in hex-center units (hex size 1,
/// x east, y south).
Eigen::Vector2d planar_offset(HexCoord from, HexCoord to);

/// Direction whose bearing is nearest to the planar offset from `from` to
/// `to` (ties to the lower direction index).
Direction nearest_direction(HexCoord from, HexCoord to);

struct WindowCell {
  int row = 0;
  int col = 0;
  auto operator<=>(const WindowCell&) const = default;
};

/// Border cell of the (2r+1)^2 window around `center` hit by the ray toward
/// `h`. Throws DomainError when h == center.
WindowCell border_sector(HexCoord center, HexCoord h, int window_radius);

}  // namespace hexwar

#endif  // HEXWAR_HEXGRID_HPP
