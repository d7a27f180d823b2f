#ifndef HEXWAR_OBSERVATION_HPP
#define HEXWAR_OBSERVATION_HPP

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "hexwar/engine.hpp"

namespace hexwar {

/// Dense channels x height x width tensor, channel-major then row-major.
template <typename Scalar>
class ChannelTensor {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using ChannelMap = Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using ConstChannelMap =
      Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

  ChannelTensor() = default;
  ChannelTensor(int channels, int height, int width)
      : channels_(channels), height_(height), width_(width),
        values_(Vector::Zero(static_cast<Eigen::Index>(channels) * height * width)) {}

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }

  Scalar& operator()(int c, int r, int w) { return values_[offset(c, r, w)]; }
  Scalar operator()(int c, int r, int w) const { return values_[offset(c, r, w)]; }

  ChannelMap channel(int c) {
    return ChannelMap(values_.data() + offset(c, 0, 0), height_, width_);
  }
  ConstChannelMap channel(int c) const {
    return ConstChannelMap(values_.data() + offset(c, 0, 0), height_, width_);
  }

  /// Flattened view in storage order, the layout fed to networks.
  const Vector& values() const { return values_; }
  Vector& values() { return values_; }

  bool operator==(const ChannelTensor& o) const {
    return channels_ == o.channels_ && height_ == o.height_ && width_ == o.width_ &&
           values_ == o.values_;
  }

 private:
  Eigen::Index offset(int c, int r, int w) const {
    return (static_cast<Eigen::Index>(c) * height_ + r) * width_ + w;
  }

  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  Vector values_;
};

using ObsTensor = ChannelTensor<double>;

/// Channel roster of the full encoding.
namespace channel {
inline constexpr int kOnMove = 0;
inline constexpr int kBlueStrength = 1;  ///< + UnitKind
inline constexpr int kRedStrength = 4;   ///< + UnitKind
inline constexpr int kBlueOccupancy = 7;
inline constexpr int kRedOccupancy = 8;
inline constexpr int kTerrain = 9;  ///< + Terrain
inline constexpr int kBlueTotal = 13;
inline constexpr int kRedTotal = 14;
inline constexpr int kPhaseRemaining = 15;
inline constexpr int kOnMoveFaction = 16;
inline constexpr int kCount = 17;

inline constexpr bool is_broadcast(int c) { return c >= kBlueTotal; }
}  // namespace channel

struct DecaySpec {
  int inner_radius = 3;
  /// Distance at which the weight reaches zero; defaults to width + height.
  std::optional<int> zero_distance;

  int zero_for(const Board& b) const { return zero_distance.value_or(b.width() + b.height()); }
};

/// Full 17-channel encoding from the acting unit's point of view.
ObsTensor encode_full(const GameState& s, int acting_unit_id);

/// Half-open row/column range of block `cell` when `extent` cells are pooled
/// into `blocks` parts.
struct BlockRange {
  int begin = 0;
  int end = 0;
};
BlockRange block_range(int extent, int blocks, int cell);

/// K x K pooling: sums for spatial channels, means for broadcast channels.
ObsTensor coarse_abstract(const ObsTensor& t, int k = 5);

double decay_weight(int d, int inner_radius, int zero_distance);
inline double decay_weight(int d, const DecaySpec& spec, const Board& b) {
  return decay_weight(d, spec.inner_radius, spec.zero_for(b));
}

inline constexpr int kLocalRadius = 3;  ///< 7 x 7 window
inline constexpr int kExactRadius = 2;  ///< 5 x 5 interior copied verbatim

/// 17 x 7 x 7 egocentric window with a decay-weighted far-field border ring.
ObsTensor local_egocentric(const GameState& s, int acting_unit_id, const DecaySpec& spec = {});

/// Board hex shown at interior window cell (wrow, wcol), 1 <= wrow, wcol <= 5.
HexCoord window_hex(HexCoord center, int wrow, int wcol);

// Tensor dump: header {C, H, W, version} as little-endian uint16, then
// float32 little-endian values in storage order.
inline constexpr std::uint16_t kTensorDumpVersion = 1;
void write_tensor(std::ostream& out, const ObsTensor& t);
ObsTensor read_tensor(std::istream& in);
void save_tensor(const std::filesystem::path& path, const ObsTensor& t);
ObsTensor load_tensor(const std::filesystem::path& path);

}  // namespace hexwar

#endif  // HEXWAR_OBSERVATION_HPP
