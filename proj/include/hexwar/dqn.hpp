#ifndef HEXWAR_DQN_HPP
#define HEXWAR_DQN_HPP

#include <Eigen/Core>
#include <array>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hexwar/agent.hpp"
#include "hexwar/nnet.hpp"
#include "hexwar/observation.hpp"

namespace hexwar {

enum class ObsMode { global_full, coarse5, local7 };

std::string_view to_string(ObsMode m);
ObsMode obs_mode_from_string(std::string_view s);

/// Flattened network input for the acting unit.
Eigen::VectorXd observe(const GameState& s, int unit_id, ObsMode mode, const DecaySpec& decay);
int observation_size(ObsMode mode, int width, int height);

// Fixed 13-slot action encoding: pass, six moves (N..NW), six attack
// directions. Range-2 artillery targets fold into their nearest bearing.
inline constexpr int kActionSlots = 13;
inline constexpr int kActionEncodingVersion = 1;
using SlotActions = std::array<std::optional<Action>, kActionSlots>;

SlotActions action_slots(const GameState& s, int unit_id);
std::vector<char> slot_mask(const SlotActions& slots);

/// argmax over entries with mask != 0, ties to the lowest index; -1 if none.
int masked_argmax(const Eigen::VectorXd& values, const std::vector<char>& mask);

struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.05;
  long decay_steps = 10000;

  double at(long step) const;
};

/// Replay, target network and optimizer settings shared by every Q-learner.
struct QLearnerConfig {
  std::vector<int> hidden{64, 64};
  SgdConfig sgd{5e-4, 0.9, 32, 0, 10.0, Optimizer::adam};
  int replay_capacity = 50000;
  int target_sync = 1000;  ///< in gradient steps
  double gamma = 0.99;
  int warmup = 1000;       ///< transitions stored before learning starts
  int train_every = 2;     ///< transitions per gradient step
  bool double_q = true;    ///< online net picks the bootstrap action, target net scores it
  std::uint64_t seed = 0;
};

/// Epsilon-greedy Q-learning over fixed-size vector observations with
/// experience replay and a periodically synced target network.
class QLearner {
 public:
  QLearner(int input_size, int n_actions, const QLearnerConfig& cfg);
  /// Continues training an existing network.
  QLearner(MlpD net, const QLearnerConfig& cfg);

  int act(const Eigen::VectorXd& obs, const std::vector<char>& mask, double epsilon);
  Eigen::VectorXd q_values(const Eigen::VectorXd& obs) const;

  /// Stores a transition and runs a gradient step when due. `next_obs` and
  /// `next_mask` are ignored when `done`.
  void record(const Eigen::VectorXd& obs, int action, double reward, const Eigen::VectorXd& next_obs,
              const std::vector<char>& next_mask, bool done);

  const MlpD& net() const { return online_; }
  long transitions() const { return transitions_; }
  long gradient_steps() const { return gradient_steps_; }
  double last_loss() const { return last_loss_; }
  Rng& rng() { return rng_; }

 private:
  struct Entry {
    Eigen::VectorXf obs;
    Eigen::VectorXf next_obs;
    std::vector<char> next_mask;
    int action = 0;
    double reward = 0.0;
    bool done = false;
  };

  void learn();

  QLearnerConfig cfg_;
  int n_actions_;
  MlpD online_;
  MlpD target_;
  SgdState<double> sgd_state_;
  std::vector<Entry> buffer_;
  std::size_t head_ = 0;
  long transitions_ = 0;
  long gradient_steps_ = 0;
  double last_loss_ = 0.0;
  Rng rng_;
};

struct DqnConfig {
  ObsMode obs_mode = ObsMode::local7;
  EpsilonSchedule epsilon;
  QLearnerConfig learner;
  long budget = 50000;  ///< blue action-selection steps
  double reward_scale = 0.01;
  DecaySpec decay{3, 20};
  std::uint64_t seed = 0;
  long eval_interval = 0;  ///< steps between learning-curve points; 0 disables
  int eval_games = 20;
};

/// Where training episodes come from.
struct DqnEnvParams {
  ScenarioParams scenario;
  bool fixed_scenario = false;  ///< reuse scenario_seed for every episode
  std::uint64_t scenario_seed = 0;
};

struct DqnModel {
  MlpD net;
  ObsMode mode = ObsMode::local7;
  DecaySpec decay{3, 20};
  int board_width = 0;  ///< training board, binding only for global_full
  int board_height = 0;
};

struct LearningPoint {
  long step = 0;
  double mean = 0.0;
  double std = 0.0;
};

struct DqnResult {
  DqnModel model;
  std::vector<LearningPoint> curve;
};

/// Trains blue against `red_opponent`. Reward per step is the sum of score
/// events between consecutive blue action-selection steps, times reward_scale.
DqnResult dqn_train(const DqnEnvParams& env, const DqnConfig& cfg, const Agent& red_opponent);

/// Greedy argmax over legal slots, or epsilon-greedy when !greedy.
Action dqn_act(const DqnModel& model, const GameState& s, int unit_id, bool greedy,
               Rng* rng = nullptr, double epsilon = 0.0);

BehaviorModel dqn_behavior(std::shared_ptr<const DqnModel> model, std::string name);

class DqnAgent final : public Agent {
 public:
  DqnAgent(std::shared_ptr<const DqnModel> model, std::string name, double epsilon = 0.0)
      : model_(std::move(model)), name_(std::move(name)), epsilon_(epsilon) {}
  std::string name() const override { return name_; }
  Decision decide(const GameState& s, int unit_id) override;
  void reset(std::uint64_t policy_seed) override { rng_.seed(policy_seed); }
  std::unique_ptr<Agent> clone() const override { return std::make_unique<DqnAgent>(*this); }

 private:
  std::shared_ptr<const DqnModel> model_;
  std::string name_;
  double epsilon_;
  Rng rng_{0};
};

/// Weights at `path`, JSON sidecar at `path` + ".json".
void save_dqn(const DqnModel& m, const std::filesystem::path& path);
DqnModel load_dqn(const std::filesystem::path& path);

/// CSV: step,mean_eval_score,std
void write_learning_curve(const std::vector<LearningPoint>& curve, const std::filesystem::path& path);

}  // namespace hexwar

#endif  // HEXWAR_DQN_HPP
