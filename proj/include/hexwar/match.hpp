#ifndef HEXWAR_MATCH_HPP
#define HEXWAR_MATCH_HPP

#include <functional>
#include <vector>

#include "hexwar/agent.hpp"

namespace hexwar {

/// One action-selection step as seen by a match observer.
struct StepInfo {
  const GameState& before;
  int unit_id;
  Faction faction;
  const Decision& decision;
  const std::vector<ScoreEvent>& events;        ///< from the action
  const std::vector<ScoreEvent>& phase_events;  ///< from a phase close that followed, if any
  const GameState& after;
};

using StepObserver = std::function<void(const StepInfo&)>;

/// Per-game seeds derived from a run seed and the game index.
struct GameSeeds {
  std::uint64_t scenario = 0;
  std::uint64_t blue_policy = 0;
  std::uint64_t red_policy = 0;
};
GameSeeds game_seeds(std::uint64_t run_seed, int game);

/// Produces the starting state of a game from its scenario seed.
using ScenarioSource = std::function<GameState(std::uint64_t scenario_seed)>;
ScenarioSource random_scenarios(const ScenarioParams& params);
ScenarioSource fixed_scenario(GameState start);

/// Plays from `start` to a terminal state. Every decision is checked against
/// legal_actions; an illegal choice throws LegalityError.
GameState run_match(const GameState& start, Agent& blue, Agent& red,
                    const StepObserver& observer = {});

}  // namespace hexwar

#endif  // HEXWAR_MATCH_HPP
