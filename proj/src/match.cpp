#include "hexwar/match.hpp"

#include "hexwar/rng.hpp"

namespace hexwar {

GameSeeds game_seeds(std::uint64_t run_seed, int game) {
  const auto g = static_cast<std::uint64_t>(game);
  return {mix_seed(run_seed, 3 * g), mix_seed(run_seed, 3 * g + 1), mix_seed(run_seed, 3 * g + 2)};
}

ScenarioSource random_scenarios(const ScenarioParams& params) {
  return [params](std::uint64_t seed) { return generate_scenario(params, seed); };
}

ScenarioSource fixed_scenario(GameState start) {
  return [start = std::move(start)](std::uint64_t) { return start; };
}

GameState run_match(const GameState& start, Agent& blue, Agent& red, const StepObserver& observer) {
  GameState s = start;
  static const std::vector<ScoreEvent> kNone;
  // A snapshot may sit on a phase boundary.
  if (!is_terminal(s) && phase_complete(s)) s = advance_phase(s).state;
  while (!is_terminal(s)) {
    const int unit_id = *s.cursor;
    const Faction side = s.on_move;
    Agent& agent = side == Faction::blue ? blue : red;
    const Decision d = agent.decide(s, unit_id);
    require_legal(s, unit_id, d.action, agent.name());
    Transition t = apply_action(s, unit_id, d.action);
    Transition closed;
    const bool close = !is_terminal(t.state) && phase_complete(t.state);
    if (close) closed = advance_phase(t.state);
    if (observer) {
      observer(StepInfo{s, unit_id, side, d, t.events, close ? closed.events : kNone,
                        close ? closed.state : t.state});
    }
    s = close ? std::move(closed.state) : std::move(t.state);
  }
  return s;
}

}  // namespace hexwar
