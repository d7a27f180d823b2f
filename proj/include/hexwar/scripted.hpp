#ifndef HEXWAR_SCRIPTED_HPP
#define HEXWAR_SCRIPTED_HPP

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hexwar/agent.hpp"

namespace hexwar {

/// Built-in policies: greedy_attack, hold_city, withdraw, pass_only, baseline.
std::vector<std::string> scripted_policy_names();

/// Throws LookupError for unknown names.
Action scripted_act(std::string_view policy, const GameState& s, int unit_id);
BehaviorModel scripted_behavior(std::string_view policy);

namespace tactics {

/// Weakest enemy the unit can legally attack within `max_distance`
/// (ties to the lowest id).
std::optional<Action> attack_weakest(const GameState& s, const Unit& u, int max_distance);

/// Nearest enemy unit by hex distance, ties to the lowest id.
const Unit* nearest_enemy(const GameState& s, const Unit& u);

/// Legal move that most reduces hex distance to `target` (neighbor order
/// breaks ties); nullopt when no move gets strictly closer.
std::optional<Action> step_toward(const GameState& s, const Unit& u, HexCoord target);

/// Nearest urban hex not occupied by the unit's own faction.
std::optional<HexCoord> nearest_open_city(const GameState& s, const Unit& u);

}  // namespace tactics

}  // namespace hexwar

#endif  // HEXWAR_SCRIPTED_HPP
