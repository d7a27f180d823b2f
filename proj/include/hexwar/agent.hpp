#ifndef HEXWAR_AGENT_HPP
#define HEXWAR_AGENT_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <nlohmann/json.hpp>
#include <string>

#include "hexwar/engine.hpp"
#include "hexwar/rng.hpp"

namespace hexwar {

/// An action plus an optional audit record for the replay log.
struct Decision {
  Action action;
  nlohmann::json audit;  ///< null when the agent has nothing to record
};

/// Anything that can play one side of a game. Instances may carry per-game
/// state, so runners clone one per game and call reset() before play.
class Agent {
 public:
  virtual ~Agent() = default;
  virtual std::string name() const = 0;
  virtual Decision decide(const GameState& s, int unit_id) = 0;
  /// Starts a new game; `policy_seed` drives any stochastic choices.
  virtual void reset(std::uint64_t policy_seed) { (void)policy_seed; }
  virtual std::unique_ptr<Agent> clone() const = 0;
};

enum class BehaviorKind { scripted, learned };

/// Stateless policy: (state, acting unit) -> action.
struct BehaviorModel {
  std::string name;
  BehaviorKind kind = BehaviorKind::scripted;
  std::function<Action(const GameState&, int)> act;
};

/// Adapts a BehaviorModel to the Agent interface.
class BehaviorAgent final : public Agent {
 public:
  explicit BehaviorAgent(BehaviorModel model) : model_(std::move(model)) {}
  std::string name() const override { return model_.name; }
  Decision decide(const GameState& s, int unit_id) override { return {model_.act(s, unit_id), {}}; }
  std::unique_ptr<Agent> clone() const override { return std::make_unique<BehaviorAgent>(model_); }
  const BehaviorModel& model() const { return model_; }

 private:
  BehaviorModel model_;
};

/// Uniform choice among legal actions, seeded per game.
class RandomAgent final : public Agent {
 public:
  std::string name() const override { return "random"; }
  Decision decide(const GameState& s, int unit_id) override;
  void reset(std::uint64_t policy_seed) override { rng_.seed(policy_seed); }
  std::unique_ptr<Agent> clone() const override { return std::make_unique<RandomAgent>(*this); }

 private:
  Rng rng_{0};
};

/// Plays a uniformly random legal action with probability `epsilon`,
/// otherwise defers to the wrapped agent. Seeded per game.
class EpsilonAgent final : public Agent {
 public:
  EpsilonAgent(std::unique_ptr<Agent> base, double epsilon)
      : base_(std::move(base)), epsilon_(epsilon) {}
  EpsilonAgent(const EpsilonAgent& o) : base_(o.base_->clone()), epsilon_(o.epsilon_), rng_(o.rng_) {}
  std::string name() const override;
  Decision decide(const GameState& s, int unit_id) override;
  void reset(std::uint64_t policy_seed) override;
  std::unique_ptr<Agent> clone() const override { return std::make_unique<EpsilonAgent>(*this); }

 private:
  std::unique_ptr<Agent> base_;
  double epsilon_;
  Rng rng_{0};
};

/// Throws LegalityError naming `who` unless `a` is legal for the unit.
void require_legal(const GameState& s, int unit_id, const Action& a, const std::string& who);

}  // namespace hexwar

#endif  // HEXWAR_AGENT_HPP
