#include "hexwar/dqn.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>

#include "hexwar/error.hpp"
#include "hexwar/match.hpp"

namespace hexwar {

std::string_view to_string(ObsMode m) {
  switch (m) {
    case ObsMode::global_full: return "global_full";
    case ObsMode::coarse5: return "coarse5";
    case ObsMode::local7: return "local7";
  }
  return "local7";
}

ObsMode obs_mode_from_string(std::string_view s) {
  if (s == "global_full") return ObsMode::global_full;
  if (s == "coarse5") return ObsMode::coarse5;
  if (s == "local7") return ObsMode::local7;
  throw ConfigError("unknown observation mode '" + std::string(s) + "'");
}

Eigen::VectorXd observe(const GameState& s, int unit_id, ObsMode mode, const DecaySpec& decay) {
  switch (mode) {
    case ObsMode::global_full: return encode_full(s, unit_id).values();
    case ObsMode::coarse5: return coarse_abstract(encode_full(s, unit_id), 5).values();
    case ObsMode::local7: return local_egocentric(s, unit_id, decay).values();
  }
  throw ConfigError("unknown observation mode");
}

int observation_size(ObsMode mode, int width, int height) {
  switch (mode) {
    case ObsMode::global_full: return channel::kCount * width * height;
    case ObsMode::coarse5: return channel::kCount * 25;
    case ObsMode::local7: return channel::kCount * 49;
  }
  throw ConfigError("unknown observation mode");
}

SlotActions action_slots(const GameState& s, int unit_id) {
  SlotActions slots;
  const auto legal = legal_actions(s, unit_id);
  const HexCoord pos = s.find(unit_id)->pos;
  for (const Action& a : legal) {
    switch (a.kind) {
      case ActionKind::pass:
        slots[0] = a;
        break;
      case ActionKind::move: {
        for (int d = 0; d < kDirections; ++d) {
          if (step(pos, static_cast<Direction>(d)) == a.target) slots[1 + d] = a;
        }
        break;
      }
      case ActionKind::attack: {
        // Attacks arrive in target-id order; the first claim on a slot wins.
        const int slot = 7 + static_cast<int>(nearest_direction(pos, a.target));
        if (!slots[slot]) slots[slot] = a;
        break;
      }
    }
  }
  return slots;
}

std::vector<char> slot_mask(const SlotActions& slots) {
  std::vector<char> mask(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) mask[i] = slots[i].has_value() ? 1 : 0;
  return mask;
}

int masked_argmax(const Eigen::VectorXd& values, const std::vector<char>& mask) {
  int best = -1;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (!mask[i]) continue;
    if (best < 0 || values[i] > values[best]) best = static_cast<int>(i);
  }
  return best;
}

double EpsilonSchedule::at(long step) const {
  if (decay_steps <= 0 || step >= decay_steps) return end;
  return start + (end - start) * static_cast<double>(step) / static_cast<double>(decay_steps);
}

namespace {

int sample_legal(const std::vector<char>& mask, Rng& rng) {
  int n = 0;
  for (char m : mask) n += m ? 1 : 0;
  if (n == 0) return -1;
  auto k = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(n)));
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] && k-- == 0) return static_cast<int>(i);
  }
  return -1;
}

std::vector<int> with_io(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

}  // namespace

QLearner::QLearner(int input_size, int n_actions, const QLearnerConfig& cfg)
    : QLearner(MlpD::xavier(with_io(input_size, cfg.hidden, n_actions), mix_seed(cfg.seed, 1)), cfg) {}

QLearner::QLearner(MlpD net, const QLearnerConfig& cfg)
    : cfg_(cfg),
      n_actions_(net.output_size()),
      online_(std::move(net)),
      target_(online_),
      sgd_state_(online_),
      rng_(mix_seed(cfg.seed, 2)) {
  if (cfg.replay_capacity < 1 || cfg.sgd.batch_size < 1 || cfg.target_sync < 1 ||
      cfg.train_every < 1 || !(cfg.gamma > 0.0 && cfg.gamma <= 1.0)) {
    throw ConfigError("invalid Q-learner configuration");
  }
  buffer_.reserve(static_cast<std::size_t>(std::min(cfg.replay_capacity, 1 << 16)));
}

Eigen::VectorXd QLearner::q_values(const Eigen::VectorXd& obs) const { return forward(online_, obs); }

int QLearner::act(const Eigen::VectorXd& obs, const std::vector<char>& mask, double epsilon) {
  if (epsilon > 0.0 && uniform_unit(rng_) < epsilon) return sample_legal(mask, rng_);
  return masked_argmax(q_values(obs), mask);
}

void QLearner::record(const Eigen::VectorXd& obs, int action, double reward,
                      const Eigen::VectorXd& next_obs, const std::vector<char>& next_mask, bool done) {
  if (!std::isfinite(reward)) throw DivergenceError("non-finite reward");
  Entry e;
  e.obs = obs.cast<float>();
  if (!done) {
    e.next_obs = next_obs.cast<float>();
    e.next_mask = next_mask;
  }
  e.action = action;
  e.reward = reward;
  e.done = done;
  if (buffer_.size() < static_cast<std::size_t>(cfg_.replay_capacity)) {
    buffer_.push_back(std::move(e));
  } else {
    buffer_[head_] = std::move(e);
    head_ = (head_ + 1) % buffer_.size();
  }
  ++transitions_;
  if (transitions_ >= cfg_.warmup && transitions_ % cfg_.train_every == 0) learn();
}

void QLearner::learn() {
  const int n = cfg_.sgd.batch_size;
  const int in = online_.input_size();
  Batch<double> batch;
  batch.inputs.resize(in, n);
  batch.targets = MlpD::Matrix::Zero(n_actions_, n);
  batch.mask = MlpD::Matrix::Zero(n_actions_, n);
  MlpD::Matrix next(in, n);
  std::vector<const Entry*> picked(n);
  for (int k = 0; k < n; ++k) {
    picked[k] = &buffer_[uniform_index(rng_, buffer_.size())];
    batch.inputs.col(k) = picked[k]->obs.cast<double>();
    if (picked[k]->done) {
      next.col(k).setZero();
    } else {
      next.col(k) = picked[k]->next_obs.cast<double>();
    }
  }
  const MlpD::Matrix next_q = forward_batch(target_, next);
  const MlpD::Matrix chooser = cfg_.double_q ? forward_batch(online_, next) : next_q;
  for (int k = 0; k < n; ++k) {
    const Entry& e = *picked[k];
    double target = e.reward;
    if (!e.done) {
      const int best = masked_argmax(chooser.col(k), e.next_mask);
      if (best >= 0) target += cfg_.gamma * next_q(best, k);
    }
    batch.targets(e.action, k) = target;
    batch.mask(e.action, k) = 1.0;
  }
  last_loss_ = train_step(online_, sgd_state_, batch, cfg_.sgd);
  if (++gradient_steps_ % cfg_.target_sync == 0) target_ = online_;
}

Action dqn_act(const DqnModel& model, const GameState& s, int unit_id, bool greedy, Rng* rng,
               double epsilon) {
  if (model.mode == ObsMode::global_full &&
      (s.board.width() != model.board_width || s.board.height() != model.board_height)) {
    throw CompatibilityError("global_full model trained on " + std::to_string(model.board_width) +
                             "x" + std::to_string(model.board_height) + " cannot play a " +
                             std::to_string(s.board.width()) + "x" +
                             std::to_string(s.board.height()) + " board");
  }
  const SlotActions slots = action_slots(s, unit_id);
  const std::vector<char> mask = slot_mask(slots);
  if (!greedy && rng != nullptr && epsilon > 0.0 && uniform_unit(*rng) < epsilon) {
    return *slots[sample_legal(mask, *rng)];
  }
  const Eigen::VectorXd x = observe(s, unit_id, model.mode, model.decay);
  if (x.size() != model.net.input_size()) {
    throw CompatibilityError("observation of size " + std::to_string(x.size()) +
                             " does not fit network input " +
                             std::to_string(model.net.input_size()));
  }
  return *slots[masked_argmax(forward(model.net, x), mask)];
}

BehaviorModel dqn_behavior(std::shared_ptr<const DqnModel> model, std::string name) {
  return {std::move(name), BehaviorKind::learned, [model](const GameState& s, int unit_id) {
            return dqn_act(*model, s, unit_id, true);
          }};
}

Decision DqnAgent::decide(const GameState& s, int unit_id) {
  return {dqn_act(*model_, s, unit_id, epsilon_ <= 0.0, &rng_, epsilon_), {}};
}

namespace {

struct BudgetExhausted {};

// Blue side during training: stores the previous step's transition once the
// next observation is known and picks epsilon-greedy actions.
class TrainingBlue final : public Agent {
 public:
  TrainingBlue(QLearner& learner, const DqnConfig& cfg, long& steps,
               std::function<void(long)> on_step)
      : learner_(learner), cfg_(cfg), steps_(steps), on_step_(std::move(on_step)) {}

  std::string name() const override { return "dqn-training"; }
  std::unique_ptr<Agent> clone() const override {
    throw ConfigError("training agent cannot be cloned");
  }

  Decision decide(const GameState& s, int unit_id) override {
    if (steps_ >= cfg_.budget) throw BudgetExhausted{};
    const SlotActions slots = action_slots(s, unit_id);
    const std::vector<char> mask = slot_mask(slots);
    Eigen::VectorXd obs = observe(s, unit_id, cfg_.obs_mode, cfg_.decay);
    if (pending_) {
      learner_.record(pending_->obs, pending_->action, pending_->reward * cfg_.reward_scale, obs, mask,
                      false);
    }
    const int a = learner_.act(obs, mask, cfg_.epsilon.at(steps_));
    pending_ = Pending{std::move(obs), a, 0.0};
    ++steps_;
    if (on_step_) on_step_(steps_);
    return {*slots[a], {}};
  }

  void add_reward(double r) {
    if (pending_) pending_->reward += r;
  }

  void finish_episode() {
    if (pending_) {
      learner_.record(pending_->obs, pending_->action, pending_->reward * cfg_.reward_scale, {}, {},
                      true);
    }
    pending_.reset();
  }

  void abandon_episode() { pending_.reset(); }

 private:
  struct Pending {
    Eigen::VectorXd obs;
    int action;
    double reward;
  };

  QLearner& learner_;
  const DqnConfig& cfg_;
  long& steps_;
  std::function<void(long)> on_step_;
  std::optional<Pending> pending_;
};

GameState episode_start(const DqnEnvParams& env, std::uint64_t seed, long episode) {
  return generate_scenario(env.scenario,
                           env.fixed_scenario ? env.scenario_seed : mix_seed(seed, 1000 + episode));
}

LearningPoint evaluate_model(const DqnModel& model, const DqnEnvParams& env, const DqnConfig& cfg,
                             const Agent& red_opponent, long step) {
  auto shared = std::make_shared<const DqnModel>(model);
  DqnAgent blue(shared, "eval");
  std::vector<double> scores;
  for (int g = 0; g < cfg.eval_games; ++g) {
    auto red = red_opponent.clone();
    red->reset(mix_seed(cfg.seed ^ 0xE7A1ULL, g));
    const GameState start = generate_scenario(
        env.scenario, env.fixed_scenario ? env.scenario_seed : mix_seed(cfg.seed ^ 0xE7A1ULL, 500 + g));
    scores.push_back(run_match(start, blue, *red).score);
  }
  double mean = 0.0;
  for (double x : scores) mean += x;
  mean /= static_cast<double>(scores.size());
  double var = 0.0;
  for (double x : scores) var += (x - mean) * (x - mean);
  return {step, mean, std::sqrt(var / static_cast<double>(scores.size()))};
}

}  // namespace

DqnResult dqn_train(const DqnEnvParams& env, const DqnConfig& cfg, const Agent& red_opponent) {
  if (cfg.budget < 1) throw ConfigError("training budget must be >= 1 step");
  if (cfg.eval_interval > 0 && cfg.eval_games < 1) throw ConfigError("eval_games must be >= 1");
  QLearnerConfig lc = cfg.learner;
  lc.seed = mix_seed(cfg.seed, 7);
  const int in = observation_size(cfg.obs_mode, env.scenario.width, env.scenario.height);
  QLearner learner(in, kActionSlots, lc);

  DqnResult result;
  auto snapshot = [&]() {
    DqnModel m;
    m.net = learner.net();
    m.mode = cfg.obs_mode;
    m.decay = cfg.decay;
    m.board_width = env.scenario.width;
    m.board_height = env.scenario.height;
    return m;
  };

  long steps = 0;
  auto on_step = [&](long step) {
    if (cfg.eval_interval > 0 && step % cfg.eval_interval == 0) {
      result.curve.push_back(evaluate_model(snapshot(), env, cfg, red_opponent, step));
    }
  };
  TrainingBlue blue(learner, cfg, steps, on_step);
  for (long episode = 0; steps < cfg.budget; ++episode) {
    auto red = red_opponent.clone();
    red->reset(mix_seed(cfg.seed, 3 * episode + 11));
    const GameState start = episode_start(env, cfg.seed, episode);
    try {
      run_match(start, blue, *red, [&](const StepInfo& info) {
        blue.add_reward(sum_signed(info.events) + sum_signed(info.phase_events));
      });
      blue.finish_episode();
    } catch (const BudgetExhausted&) {
      // The cut-off transition has no successor; drop it.
      blue.abandon_episode();
    }
  }
  result.model = snapshot();
  return result;
}

void save_dqn(const DqnModel& m, const std::filesystem::path& path) {
  save_weights(m.net, path);
  nlohmann::json meta{{"v", 1},
                      {"obs_mode", to_string(m.mode)},
                      {"action_encoding_version", kActionEncodingVersion},
                      {"decay", {{"inner_radius", m.decay.inner_radius},
                                 {"zero_distance", m.decay.zero_distance
                                                       ? nlohmann::json(*m.decay.zero_distance)
                                                       : nlohmann::json(nullptr)}}},
                      {"board", {{"width", m.board_width}, {"height", m.board_height}}},
                      {"layer_sizes", m.net.layer_sizes()}};
  std::ofstream out(path.string() + ".json");
  if (!out) throw FormatError("cannot write model sidecar for " + path.string());
  out << meta.dump(2) << "\n";
}

DqnModel load_dqn(const std::filesystem::path& path) {
  DqnModel m;
  m.net = load_weights<double>(path);
  std::ifstream in(path.string() + ".json");
  if (!in) throw FormatError("missing model sidecar " + path.string() + ".json");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad model sidecar: ") + e.what());
  }
  if (meta.value("action_encoding_version", 0) != kActionEncodingVersion) {
    throw VersionError("model uses an unsupported action encoding version");
  }
  m.mode = obs_mode_from_string(meta.at("obs_mode").get<std::string>());
  m.decay.inner_radius = meta.at("decay").at("inner_radius").get<int>();
  if (!meta["decay"]["zero_distance"].is_null()) {
    m.decay.zero_distance = meta["decay"]["zero_distance"].get<int>();
  }
  m.board_width = meta.at("board").at("width").get<int>();
  m.board_height = meta.at("board").at("height").get<int>();
  if (m.net.output_size() != kActionSlots) {
    throw CompatibilityError("Q-network must have " + std::to_string(kActionSlots) + " outputs");
  }
  return m;
}

void write_learning_curve(const std::vector<LearningPoint>& curve, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "step,mean_eval_score,std\n";
  out.precision(17);
  for (const auto& p : curve) out << p.step << "," << p.mean << "," << p.std << "\n";
}

}  // namespace hexwar
