#ifndef HEXWAR_ENGINE_HPP
#define HEXWAR_ENGINE_HPP

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hexwar/hexgrid.hpp"

namespace hexwar {

enum class Faction : std::uint8_t { blue = 0, red = 1 };
enum class UnitKind : std::uint8_t { infantry = 0, armor = 1, artillery = 2 };

inline constexpr Faction opponent(Faction f) { return f == Faction::blue ? Faction::red : Faction::blue; }

std::string_view to_string(Faction f);
std::string_view to_string(UnitKind k);
Faction faction_from_string(std::string_view s);
UnitKind unit_kind_from_string(std::string_view s);

/// Rule constants of the combat model.
namespace rules {
inline constexpr double kMaxStrength = 100.0;
inline constexpr double kBaseRate = 0.3;
inline constexpr double kCityPoints = 10.0;

double type_multiplier(UnitKind attacker, UnitKind defender);
/// Damage multiplier for a defender standing on t; water has none.
double terrain_defense(Terrain t);
int attack_range(UnitKind k);
}  // namespace rules

struct Unit {
  int id = 0;
  Faction faction = Faction::blue;
  UnitKind kind = UnitKind::infantry;
  double strength = rules::kMaxStrength;
  HexCoord pos;
  bool acted = false;

  bool operator==(const Unit&) const = default;
};

struct GameState {
  Board board{2, 2};
  std::vector<Unit> units;  ///< sorted by id, all alive
  int phase = 1;
  int max_phases = 30;
  Faction on_move = Faction::blue;
  std::optional<int> cursor;  ///< next unit to act; empty at a phase boundary
  double score = 0.0;         ///< blue perspective
  std::uint64_t seed = 0;     ///< scenario provenance
  int initial_blue = 0;
  int initial_red = 0;

  const Unit* find(int unit_id) const;
  const Unit* unit_at(HexCoord h) const;
  double total_strength(Faction f) const;
  int count(Faction f) const;

  bool operator==(const GameState&) const = default;
};

enum class ActionKind : std::uint8_t { pass = 0, move = 1, attack = 2 };

std::string_view to_string(ActionKind k);
ActionKind action_kind_from_string(std::string_view s);

struct Action {
  ActionKind kind = ActionKind::pass;
  HexCoord target;  ///< unused for pass

  static Action pass() { return {}; }
  static Action move(HexCoord h) { return {ActionKind::move, h}; }
  static Action attack(HexCoord h) { return {ActionKind::attack, h}; }

  bool operator==(const Action& o) const {
    return kind == o.kind && (kind == ActionKind::pass || target == o.target);
  }
};

enum class ScoreKind : std::uint8_t { kill = 0, loss = 1, urban_hold = 2 };

std::string_view to_string(ScoreKind k);
ScoreKind score_kind_from_string(std::string_view s);

struct ScoreEvent {
  int phase = 1;
  ScoreKind kind = ScoreKind::kill;
  double amount = 0.0;  ///< non-negative magnitude

  /// Contribution to the blue-perspective score.
  double signed_amount() const { return kind == ScoreKind::loss ? -amount : amount; }
  bool operator==(const ScoreEvent&) const = default;
};

double sum_signed(const std::vector<ScoreEvent>& events);

struct Transition {
  GameState state;
  std::vector<ScoreEvent> events;
};

/// Terrain mix weights; urban hexes are placed separately.
struct TerrainMix {
  double clear = 0.70;
  double rough = 0.15;
  double water = 0.10;
};

struct ScenarioParams {
  int width = 10;
  int height = 10;
  int blue_min = 2;
  int blue_max = 4;
  int red_min = 2;
  int red_max = 4;
  int cities = 1;
  int max_phases = 30;
  TerrainMix mix;
};

GameState generate_scenario(const ScenarioParams& params, std::uint64_t seed);

/// Legal actions for the unit under the cursor: pass, moves in neighbor order,
/// attacks by ascending target id.
std::vector<Action> legal_actions(const GameState& s, int unit_id);

/// Damage dealt; throws RuleError when the defender is out of range.
double resolve_combat(const Unit& attacker, const Unit& defender, Terrain defender_terrain);

Transition apply_action(const GameState& s, int unit_id, const Action& a);

/// Closes a phase: urban-hold events, reset flags, next phase.
Transition advance_phase(const GameState& s);

bool is_terminal(const GameState& s);

/// True when every living unit has acted and the phase awaits advance_phase.
inline bool phase_complete(const GameState& s) { return !s.cursor.has_value(); }

// JSON forms. Objects use sorted keys so dumps are canonical.
nlohmann::json to_json(HexCoord h);
HexCoord hex_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Action& a);
Action action_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ScoreEvent& e);
ScoreEvent score_event_from_json(const nlohmann::json& j);
nlohmann::json to_json(const std::vector<ScoreEvent>& events);
std::vector<ScoreEvent> score_events_from_json(const nlohmann::json& j);

/// Full state including turn bookkeeping.
nlohmann::json to_json(const GameState& s);
GameState state_from_json(const nlohmann::json& j);

/// Scenario file: {width, height, terrain (run-length), units, max_phases, seed}.
nlohmann::json scenario_to_json(const GameState& s);
GameState scenario_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ScenarioParams& p);
ScenarioParams scenario_params_from_json(const nlohmann::json& j, ScenarioParams base = {});

}  // namespace hexwar

#endif  // HEXWAR_ENGINE_HPP
