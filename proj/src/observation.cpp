#include "hexwar/observation.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "hexwar/error.hpp"

namespace hexwar {

namespace {

void put_u16(std::ostream& out, std::uint16_t v) {
  const char bytes[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
  out.write(bytes, 2);
}

std::uint16_t get_u16(std::istream& in) {
  unsigned char bytes[2];
  if (!in.read(reinterpret_cast<char*>(bytes), 2)) throw FormatError("truncated tensor header");
  return static_cast<std::uint16_t>(bytes[0] | (bytes[1] << 8));
}

}  // namespace

ObsTensor encode_full(const GameState& s, int acting_unit_id) {
  const Unit* actor = s.find(acting_unit_id);
  if (actor == nullptr) {
    throw StateError("acting unit " + std::to_string(acting_unit_id) + " is not alive");
  }
  const Board& b = s.board;
  ObsTensor t(channel::kCount, b.height(), b.width());

  t(channel::kOnMove, actor->pos.row, actor->pos.col) = 1.0;
  for (const Unit& u : s.units) {
    const int kind = static_cast<int>(u.kind);
    const bool blue = u.faction == Faction::blue;
    t((blue ? channel::kBlueStrength : channel::kRedStrength) + kind, u.pos.row, u.pos.col) =
        u.strength / rules::kMaxStrength;
    t(blue ? channel::kBlueOccupancy : channel::kRedOccupancy, u.pos.row, u.pos.col) = 1.0;
  }
  for (int i = 0; i < b.size(); ++i) {
    const HexCoord h = b.coord(i);
    t(channel::kTerrain + static_cast<int>(b.at(h)), h.row, h.col) = 1.0;
  }

  // Both totals share one normalizer so that they stay comparable.
  int initial = s.initial_blue + s.initial_red;
  if (initial == 0) initial = static_cast<int>(s.units.size());
  const double norm = initial > 0 ? 1.0 / (rules::kMaxStrength * initial) : 0.0;
  const double remaining =
      std::clamp(static_cast<double>(s.max_phases - s.phase + 1) / s.max_phases, 0.0, 1.0);
  t.channel(channel::kBlueTotal).setConstant(s.total_strength(Faction::blue) * norm);
  t.channel(channel::kRedTotal).setConstant(s.total_strength(Faction::red) * norm);
  t.channel(channel::kPhaseRemaining).setConstant(remaining);
  t.channel(channel::kOnMoveFaction).setConstant(actor->faction == Faction::blue ? 1.0 : 0.0);
  return t;
}

BlockRange block_range(int extent, int blocks, int cell) {
  return {cell * extent / blocks, (cell + 1) * extent / blocks};
}

ObsTensor coarse_abstract(const ObsTensor& t, int k) {
  if (k < 1 || k > std::min(t.height(), t.width())) {
    throw ShapeError("cannot pool a " + std::to_string(t.height()) + "x" +
                     std::to_string(t.width()) + " grid into " + std::to_string(k) + "x" +
                     std::to_string(k));
  }
  ObsTensor out(t.channels(), k, k);
  for (int c = 0; c < t.channels(); ++c) {
    const auto src = t.channel(c);
    auto dst = out.channel(c);
    for (int bi = 0; bi < k; ++bi) {
      const BlockRange rows = block_range(t.height(), k, bi);
      for (int bj = 0; bj < k; ++bj) {
        const BlockRange cols = block_range(t.width(), k, bj);
        const auto block =
            src.block(rows.begin, cols.begin, rows.end - rows.begin, cols.end - cols.begin);
        dst(bi, bj) = channel::is_broadcast(c) ? block.mean() : block.sum();
      }
    }
  }
  return out;
}

double decay_weight(int d, int inner_radius, int zero_distance) {
  if (d < 0) throw DomainError("decay distance must be >= 0");
  if (zero_distance <= inner_radius) {
    throw DomainError("decay zero distance must exceed the inner radius");
  }
  if (d <= inner_radius) return 1.0;
  if (d >= zero_distance) return 0.0;
  return static_cast<double>(zero_distance - d) / (zero_distance - inner_radius);
}

HexCoord window_hex(HexCoord center, int wrow, int wcol) {
  return relative_hex(center, wcol - kLocalRadius, wrow - kLocalRadius);
}

ObsTensor local_egocentric(const GameState& s, int acting_unit_id, const DecaySpec& spec) {
  const ObsTensor full = encode_full(s, acting_unit_id);
  const Board& b = s.board;
  const HexCoord center = s.find(acting_unit_id)->pos;
  constexpr int kSide = 2 * kLocalRadius + 1;
  ObsTensor out(channel::kCount, kSide, kSide);

  for (int c = channel::kBlueTotal; c < channel::kCount; ++c) {
    out.channel(c).setConstant(full(c, 0, 0));
  }

  std::vector<char> exact(b.size(), 0);
  for (int wr = kLocalRadius - kExactRadius; wr <= kLocalRadius + kExactRadius; ++wr) {
    for (int wc = kLocalRadius - kExactRadius; wc <= kLocalRadius + kExactRadius; ++wc) {
      const HexCoord h = window_hex(center, wr, wc);
      if (!b.contains(h)) {
        out(channel::kTerrain + static_cast<int>(Terrain::water), wr, wc) = 1.0;
        continue;
      }
      exact[b.index(h)] = 1;
      for (int c = 0; c < channel::kBlueTotal; ++c) out(c, wr, wc) = full(c, h.row, h.col);
    }
  }

  const int zero = spec.zero_for(b);
  for (int i = 0; i < b.size(); ++i) {
    if (exact[i]) continue;
    const HexCoord h = b.coord(i);
    const double w = decay_weight(distance(center, h), spec.inner_radius, zero);
    if (w == 0.0) continue;
    const WindowCell cell = border_sector(center, h, kLocalRadius);
    for (int c = 0; c < channel::kBlueTotal; ++c) {
      out(c, cell.row, cell.col) += w * full(c, h.row, h.col);
    }
  }
  return out;
}

void write_tensor(std::ostream& out, const ObsTensor& t) {
  if (t.channels() > 0xffff || t.height() > 0xffff || t.width() > 0xffff) {
    throw ShapeError("tensor too large for the dump header");
  }
  put_u16(out, static_cast<std::uint16_t>(t.channels()));
  put_u16(out, static_cast<std::uint16_t>(t.height()));
  put_u16(out, static_cast<std::uint16_t>(t.width()));
  put_u16(out, kTensorDumpVersion);
  for (Eigen::Index i = 0; i < t.values().size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(t.values()[i]));
    const char bytes[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                           static_cast<char>((bits >> 16) & 0xff),
                           static_cast<char>((bits >> 24) & 0xff)};
    out.write(bytes, 4);
  }
}

ObsTensor read_tensor(std::istream& in) {
  const int c = get_u16(in);
  const int h = get_u16(in);
  const int w = get_u16(in);
  const int version = get_u16(in);
  if (version != kTensorDumpVersion) {
    throw VersionError("tensor dump version " + std::to_string(version) + " is not supported");
  }
  ObsTensor t(c, h, w);
  for (Eigen::Index i = 0; i < t.values().size(); ++i) {
    unsigned char bytes[4];
    if (!in.read(reinterpret_cast<char*>(bytes), 4)) throw FormatError("truncated tensor data");
    const std::uint32_t bits = bytes[0] | (bytes[1] << 8) | (bytes[2] << 16) |
                               (static_cast<std::uint32_t>(bytes[3]) << 24);
    t.values()[i] = std::bit_cast<float>(bits);
  }
  return t;
}

void save_tensor(const std::filesystem::path& path, const ObsTensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_tensor(out, t);
}

ObsTensor load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_tensor(in);
}

}  // namespace hexwar
