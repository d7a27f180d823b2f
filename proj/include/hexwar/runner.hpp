#ifndef HEXWAR_RUNNER_HPP
#define HEXWAR_RUNNER_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "hexwar/agent.hpp"
#include "hexwar/match.hpp"
#include "hexwar/multimodel.hpp"

namespace hexwar {

inline constexpr int kReplayFormatVersion = 1;

struct ReplayStep {
  int phase = 1;
  int unit_id = 0;
  Faction faction = Faction::blue;
  Action action;
  std::vector<ScoreEvent> events;        ///< from the action
  std::vector<ScoreEvent> phase_events;  ///< from the phase close that followed, if any
  nlohmann::json audit;                  ///< null when the agent recorded nothing
};

struct Replay {
  GameState start;
  std::vector<ReplayStep> steps;
  double final_score = 0.0;
  GameSeeds seeds;
  std::string blue_agent;
  std::string red_agent;
  bool aborted = false;
  std::string abort_reason;  ///< names the offending agent when aborted
};

/// Canonical form: sorted keys, shortest round-trip numbers, seeds as decimal
/// strings (JavaScript-safe).
nlohmann::json to_json(const Replay& r);
Replay replay_from_json(const nlohmann::json& j);
std::string canonical_dump(const Replay& r);

/// Resets both agents with the policy seeds and plays `start` to the end. An
/// agent error (illegal action included) aborts the game; the replay keeps
/// the steps played so far.
Replay play_game(Agent& blue, Agent& red, const GameState& start, const GameSeeds& seeds);

/// Checks a replay's audit record for the step taken from `before`.
using AuditVerifier = std::function<void(const GameState& before, int unit_id, const nlohmann::json& audit)>;

/// Re-derives multimodel audits, bare or nested under "operator" by a hierarchy.
AuditVerifier multimodel_audit_verifier(std::shared_ptr<const MultiModel> mm);

/// Replays every recorded action from the start state and checks units, turn
/// order, score events and the final score; IntegrityError on any mismatch.
/// Returns the final state.
GameState resimulate(const Replay& r, const AuditVerifier& verify = {});

/// State after `step` recorded steps (0 = start), via re-simulation.
GameState state_at_step(const Replay& r, std::size_t step);

void export_replay(const Replay& r, const std::filesystem::path& path);
/// FormatError/IntegrityError for corrupt files, VersionError for unknown
/// versions; the replay is re-simulated before it is returned.
Replay import_replay(const std::filesystem::path& path, const AuditVerifier& verify = {});

struct EvalSpec {
  ScenarioParams scenario;
  int n_games = 100;
  std::uint64_t base_seed = 0;
  bool fixed_scenario = false;    ///< reuse scenario_seed, vary policy seeds only
  std::uint64_t scenario_seed = 0;
  int threads = 1;                ///< 0 = hardware concurrency
};

/// Game i uses seed base_seed + i: the scenario seed (random-start mode) and
/// the two policy seeds derive from it.
GameSeeds evaluation_seeds(const EvalSpec& spec, int game);

struct EvalReport {
  int n_games = 0;
  int completed = 0;
  double mean_score = 0.0;
  double std_dev = 0.0;      ///< population standard deviation over completed games
  std::vector<double> scores;  ///< per game, in game order; aborted games keep their partial score
  std::vector<int> aborted;    ///< game indices
  std::string fingerprint;     ///< hash of agents + spec

  nlohmann::json to_json() const;
};

/// Parallel over games; the report does not depend on the thread count.
EvalReport evaluate(const Agent& blue, const Agent& red, const EvalSpec& spec);

}  // namespace hexwar

#endif  // HEXWAR_RUNNER_HPP
