#ifndef HEXWAR_HIERARCHY_HPP
#define HEXWAR_HIERARCHY_HPP

#include <Eigen/Core>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hexwar/agent.hpp"
#include "hexwar/dqn.hpp"
#include "hexwar/match.hpp"
#include "hexwar/multimodel.hpp"
#include "hexwar/observation.hpp"

namespace hexwar {

enum class Posture { offensive = 0, defensive = 1 };
enum class Objective { max_score, destroy_red, preserve_blue, hold_urban };
enum class TaskKind { seize = 0, hold = 1, screen = 2 };
enum class Level { commander, manager, op };

std::string_view to_string(Posture p);
std::string_view to_string(Objective o);
std::string_view to_string(TaskKind t);
std::string_view to_string(Level l);
Posture posture_from_string(std::string_view s);
Objective objective_from_string(std::string_view s);
TaskKind task_kind_from_string(std::string_view s);
Level level_from_string(std::string_view s);

inline constexpr int kCommanderGrid = 5;
inline constexpr int kManagerGrid = 7;
inline constexpr int kCommanderInputs = channel::kCount * kCommanderGrid * kCommanderGrid;
inline constexpr int kCommanderActions = 2 * kCommanderGrid * kCommanderGrid;
inline constexpr int kManagerInputs =
    channel::kCount * kManagerGrid * kManagerGrid + kCommanderGrid * kCommanderGrid + 2;
inline constexpr int kManagerActions = kManagerGrid * kManagerGrid * 3;
inline constexpr int kOperatorInputs = channel::kCount * 49 + 6;

/// Expires after `max_phases` phases, or earlier when `on_target_occupied`
/// and a blue unit stands inside the target cell.
struct Termination {
  int max_phases = 5;
  bool on_target_occupied = false;
};

struct Subgoal {
  Posture posture = Posture::offensive;
  int target_cell = 0;  ///< row-major index on the 5 x 5 coarse grid
  Termination termination;

  void validate() const;  ///< ConfigError on out-of-range fields
  bool operator==(const Subgoal& o) const {
    return posture == o.posture && target_cell == o.target_cell &&
           termination.max_phases == o.termination.max_phases &&
           termination.on_target_occupied == o.termination.on_target_occupied;
  }
};

struct UnitTask {
  int unit_id = 0;
  HexCoord objective;
  TaskKind task = TaskKind::hold;

  bool operator==(const UnitTask&) const = default;
};

nlohmann::json to_json(const Subgoal& g);
nlohmann::json to_json(const UnitTask& t);

enum class PolicyKind { scripted, learned };

struct CommanderPolicy {
  PolicyKind kind = PolicyKind::scripted;
  MlpD net;  ///< learned: 425 -> 50
  Objective objective = Objective::max_score;
  int period = 5;  ///< phases between routine re-issues
  bool stop_on_occupied = false;
  bool trainable = false;
};

struct ManagerPolicy {
  PolicyKind kind = PolicyKind::scripted;
  MlpD net;  ///< learned: 860 -> 147, one evaluation per unit
  bool trainable = false;
};

enum class OperatorKind { scripted, behavior, multimodel, learned };

struct OperatorPolicy {
  OperatorKind kind = OperatorKind::scripted;
  BehaviorModel behavior;
  std::shared_ptr<const MultiModel> multimodel;
  MlpD net;  ///< learned: 839 -> 13 action slots
  DecaySpec decay{3, 20};
  /// How a bundle rebuilds a behavior or multimodel operator, e.g.
  /// {"kind": "scripted", "name": "greedy_attack"} or {"kind": "multimodel", "dir": "mm"}.
  nlohmann::json source;
  bool trainable = false;
};

/// One to three levels: operator alone, manager + operator, or all three.
struct HierarchySpec {
  std::optional<CommanderPolicy> commander;
  std::optional<ManagerPolicy> manager;
  OperatorPolicy op;
  TaskKind default_task = TaskKind::hold;  ///< operator task when no manager

  int levels() const { return 1 + (manager ? 1 : 0) + (commander ? 1 : 0); }
  /// ConfigError for a commander without a manager, a bad period, mismatched
  /// network shapes or more than one trainable level.
  void validate() const;
};

// --- level inputs ------------------------------------------------------------

/// Coarse 5 x 5 view with the on-move mask cleared.
ObsTensor commander_observation(const GameState& s);
/// 7 x 7 coarse view from the unit's point of view.
ObsTensor manager_observation(const GameState& s, int unit_id);
/// Flattened manager view ++ posture one-hot ++ target-cell one-hot.
Eigen::VectorXd manager_input(const GameState& s, int unit_id, const Subgoal& g);
/// local7 ++ task one-hot ++ unit bearing to the objective ++ normalized distance.
Eigen::VectorXd operator_input(const GameState& s, int unit_id, const UnitTask& t, const DecaySpec& decay);

/// Half-open hex block of a coarse cell.
struct CellBlock {
  BlockRange rows;
  BlockRange cols;

  bool contains(HexCoord h) const {
    return h.row >= rows.begin && h.row < rows.end && h.col >= cols.begin && h.col < cols.end;
  }
};
CellBlock cell_block(const Board& b, int grid, int cell);

// --- decisions ---------------------------------------------------------------

/// Scripted or greedy learned choice; CompatibilityError unless 17 x 5 x 5.
Subgoal commander_decide(const CommanderPolicy& p, const ObsTensor& coarse);
Subgoal decode_commander_action(int slot, const CommanderPolicy& p);

/// One task per living blue unit, by ascending id. PreconditionError when
/// blue has no units.
std::vector<UnitTask> manager_decide(const ManagerPolicy& p, const GameState& s, const Subgoal& g);
UnitTask decode_manager_action(int slot, const GameState& s, int unit_id);

struct OperatorChoice {
  Action action;
  nlohmann::json audit;
};

/// PreconditionError unless the task belongs to the unit on move.
OperatorChoice operator_act(const OperatorPolicy& p, const GameState& s, int unit_id, const UnitTask& t);
Action scripted_operator(const GameState& s, int unit_id, const UnitTask& t);

// --- agent ---------------------------------------------------------------------

/// Hook used by training: picks an action index for a learned level given the
/// level input and a legality mask. `unit_id` is -1 for the commander.
using LevelChooser =
    std::function<int(Level, int unit_id, const Eigen::VectorXd& input, const std::vector<char>& mask)>;

/// Commander decisions happen at the first blue step of a phase: on the first
/// phase seen, when the termination fires (checked first) or every `period`
/// phases. The manager re-tasks every living blue unit once per phase.
class HierarchyAgent final : public Agent {
 public:
  explicit HierarchyAgent(HierarchySpec spec, std::string name = "hierarchy");

  std::string name() const override { return name_; }
  Decision decide(const GameState& s, int unit_id) override;
  void reset(std::uint64_t policy_seed) override;
  std::unique_ptr<Agent> clone() const override { return std::make_unique<HierarchyAgent>(*this); }

  const HierarchySpec& spec() const { return spec_; }
  const std::optional<Subgoal>& subgoal() const { return subgoal_; }

  /// Routes learned decisions at `level` through `chooser` instead of argmax.
  void set_chooser(Level level, LevelChooser chooser);

 private:
  void plan(const GameState& s);
  bool termination_fired(const GameState& s) const;

  HierarchySpec spec_;
  std::string name_;
  std::optional<Level> hooked_;
  LevelChooser chooser_;

  std::optional<Subgoal> subgoal_;
  int subgoal_phase_ = 0;
  int planned_phase_ = 0;
  std::map<int, UnitTask> tasks_;
  nlohmann::json plan_audit_;
};

// --- training ------------------------------------------------------------------

/// Intrinsic reward hook: maps the environment reward of a step to the
/// reward credited to `level`. Only called when set.
using RewardShaper = std::function<double(Level level, const StepInfo& step, double env_reward)>;

struct LevelTraining {
  QLearnerConfig learner;
  EpsilonSchedule epsilon;
  long budget = 10000;  ///< decisions taken at the trained level
  double reward_scale = 0.01;
  std::uint64_t seed = 0;
  RewardShaper shaper;
};

/// DQN training of one level with every other level frozen. The level becomes
/// learned (fresh network when it was scripted); other levels are returned
/// untouched. Budget 0 returns the spec unchanged.
HierarchySpec train_level(const HierarchySpec& h, Level level, const DqnEnvParams& env,
                          const Agent& red, const LevelTraining& cfg);

// --- bundle ----------------------------------------------------------------------

/// Directory with manifest.json plus commander.bin / manager.bin / operator.bin
/// for learned levels. Behavior and multimodel operators are stored by source.
void save_hierarchy(const HierarchySpec& h, const std::filesystem::path& dir);
HierarchySpec load_hierarchy(const std::filesystem::path& dir);

}  // namespace hexwar

#endif  // HEXWAR_HIERARCHY_HPP
