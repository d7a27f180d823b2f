#ifndef HEXWAR_MULTIMODEL_HPP
#define HEXWAR_MULTIMODEL_HPP

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "hexwar/agent.hpp"
#include "hexwar/match.hpp"
#include "hexwar/nnet.hpp"
#include "hexwar/observation.hpp"

namespace hexwar {

inline constexpr int kPredictorInputs = channel::kCount * 25;

/// Flattened coarse 5 x 5 view, the predictor input.
Eigen::VectorXd predictor_input(const GameState& s, int unit_id);

enum class PredictorMode { supervised, td };

std::string_view to_string(PredictorMode m);
PredictorMode predictor_mode_from_string(std::string_view s);

struct PredictorMeta {
  PredictorMode mode = PredictorMode::supervised;
  long games = 0;  ///< games played to produce training data
  std::string red_opponent;
  std::uint64_t seed = 0;
};

/// Predicts the final blue score if blue keeps playing `behavior_name`.
/// Supervised predictors regress the final score from the view alone; TD
/// predictors learn the score still to come, so the running score is added.
struct ScorePredictor {
  std::string behavior_name;
  MlpD net;
  double label_mean = 0.0;
  double label_std = 1.0;
  PredictorMeta meta;

  double predict_input(const Eigen::VectorXd& input) const;
  double predict(const GameState& s, int unit_id) const;
  double predict(const GameState& s, const Eigen::VectorXd& input) const;
};

/// Coarse views paired with the final blue score of the game they came from.
struct ScoreDataset {
  std::vector<Eigen::VectorXf> inputs;
  std::vector<double> labels;

  std::size_t size() const { return labels.size(); }
};

struct DatasetSpec {
  int games = 1;
  std::uint64_t seed = 0;
  int threads = 1;
};

/// Plays `spec.games` games blue = behavior vs red and records every blue
/// action-selection step.
ScoreDataset generate_score_dataset(const Agent& behavior, const Agent& red,
                                    const ScenarioSource& scenarios, const DatasetSpec& spec);
ScoreDataset generate_score_dataset(const Agent& behavior, const Agent& red,
                                    const ScenarioParams& params, const DatasetSpec& spec);

// Dataset file: "HXDS", u32 version, u64 record count, then per record a
// tensor dump (17 x 5 x 5) followed by a float64 label, all little-endian.
inline constexpr std::uint32_t kDatasetVersion = 1;
void save_dataset(const ScoreDataset& d, const std::filesystem::path& path);
ScoreDataset load_dataset(const std::filesystem::path& path);

struct PredictorTraining {
  std::vector<int> hidden{64, 32};
  SgdConfig sgd{1e-3, 0.9, 64, 0, 0.0, Optimizer::adam, 0.999, 1e-8, 0.05};
  int epochs = 30;
  std::uint64_t init_seed = 0;
};

/// Supervised regression on z-scored labels; returns per-epoch mean loss
/// through `history` when non-null.
ScorePredictor train_predictor(const ScoreDataset& data, const std::string& behavior_name,
                               const PredictorTraining& cfg, std::vector<double>* history = nullptr);

/// One TD sample: value(obs) should equal reward + gamma * value(next).
struct TdSample {
  Eigen::VectorXd input;
  double reward = 0.0;
  Eigen::VectorXd next_input;  ///< ignored when terminal
  bool terminal = false;
};

/// Semi-gradient TD(0) step on a batch with targets from `target_net`.
double td_step(MlpD& net, SgdState<double>& state, const MlpD& target_net,
               const std::vector<TdSample>& batch, double gamma, const SgdConfig& cfg);

struct TdTraining {
  std::vector<int> hidden{64, 32};
  SgdConfig sgd{5e-4, 0.9, 32, 0, 10.0, Optimizer::adam};
  long steps = 20000;          ///< blue action-selection steps observed
  double reward_scale = 0.01;  ///< score units per network unit
  int replay_capacity = 20000;
  int target_sync = 250;       ///< gradient steps
  int warmup = 500;
  std::uint64_t seed = 0;
};

ScorePredictor train_predictor_td(const Agent& behavior, const Agent& red,
                                  const ScenarioSource& scenarios, const TdTraining& cfg,
                                  const std::string& behavior_name);

/// argmax with ties to the lowest index; EvaluationError on empty or NaN.
int select_model(const std::vector<double>& predictions);

struct MultiModelMember {
  BehaviorModel behavior;
  ScorePredictor predictor;
};

/// Ordered behavior/predictor pairs; order breaks prediction ties.
class MultiModel {
 public:
  /// Throws ConfigError unless non-empty with one predictor per behavior.
  explicit MultiModel(std::vector<MultiModelMember> members);

  const std::vector<MultiModelMember>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }

 private:
  std::vector<MultiModelMember> members_;
};

struct MultiModelChoice {
  Action action;
  int chosen = 0;
  std::vector<double> predictions;

  nlohmann::json audit(const MultiModel& mm) const;
};

MultiModelChoice multimodel_act(const MultiModel& mm, const GameState& s, int unit_id);

class MultiModelAgent final : public Agent {
 public:
  MultiModelAgent(std::shared_ptr<const MultiModel> mm, std::string name = "multimodel")
      : mm_(std::move(mm)), name_(std::move(name)) {}
  std::string name() const override { return name_; }
  Decision decide(const GameState& s, int unit_id) override;
  std::unique_ptr<Agent> clone() const override { return std::make_unique<MultiModelAgent>(*this); }
  const MultiModel& model() const { return *mm_; }

 private:
  std::shared_ptr<const MultiModel> mm_;
  std::string name_;
};

/// Re-derives the choice recorded in an audit record; throws IntegrityError
/// when the predictions or the chosen member differ.
void verify_multimodel_audit(const MultiModel& mm, const GameState& s, int unit_id,
                             const nlohmann::json& audit);

// Predictor bundle: weights at `path`, JSON meta at `path` + ".json".
void save_predictor(const ScorePredictor& p, const std::filesystem::path& path);
ScorePredictor load_predictor(const std::filesystem::path& path);

/// Resolves a behavior description from a bundle manifest.
using BehaviorResolver = std::function<BehaviorModel(const nlohmann::json& spec)>;
/// Scripted names ({"kind": "scripted", "name": ...}) and DQN model files
/// ({"kind": "dqn", "name": ..., "path": ...}, relative to the bundle).
BehaviorResolver default_behavior_resolver(const std::filesystem::path& base_dir);

/// Directory with manifest.json and one predictor per member.
void save_multimodel(const MultiModel& mm, const std::vector<nlohmann::json>& behavior_specs,
                     const std::filesystem::path& dir);
MultiModel load_multimodel(const std::filesystem::path& dir, const BehaviorResolver& resolve = {});

}  // namespace hexwar

#endif  // HEXWAR_MULTIMODEL_HPP
