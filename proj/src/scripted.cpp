#include "hexwar/scripted.hpp"

#include <algorithm>
#include <sstream>

#include "hexwar/error.hpp"

namespace hexwar {

void require_legal(const GameState& s, int unit_id, const Action& a, const std::string& who) {
  const auto legal = legal_actions(s, unit_id);
  if (std::find(legal.begin(), legal.end(), a) == legal.end()) {
    std::string what = "behavior '" + who + "' chose illegal " + std::string(to_string(a.kind));
    if (a.kind != ActionKind::pass) {
      what += " to (" + std::to_string(a.target.col) + "," + std::to_string(a.target.row) + ")";
    }
    throw LegalityError(what + " for unit " + std::to_string(unit_id));
  }
}

Decision RandomAgent::decide(const GameState& s, int unit_id) {
  const auto legal = legal_actions(s, unit_id);
  return {legal[uniform_index(rng_, legal.size())], {}};
}

std::string EpsilonAgent::name() const {
  std::ostringstream out;
  out << base_->name() << "+eps" << epsilon_;
  return out.str();
}

Decision EpsilonAgent::decide(const GameState& s, int unit_id) {
  // Draw both numbers every step so the stream does not depend on the branch.
  const double u = uniform_unit(rng_);
  const auto legal = legal_actions(s, unit_id);
  const std::size_t pick = uniform_index(rng_, legal.size());
  if (u < epsilon_) return {legal[pick], {}};
  return base_->decide(s, unit_id);
}

void EpsilonAgent::reset(std::uint64_t policy_seed) {
  rng_.seed(mix_seed(policy_seed, 0x5eed));
  base_->reset(policy_seed);
}

namespace tactics {

std::optional<Action> attack_weakest(const GameState& s, const Unit& u, int max_distance) {
  const Unit* best = nullptr;
  for (const Action& a : legal_actions(s, u.id)) {
    if (a.kind != ActionKind::attack || distance(u.pos, a.target) > max_distance) continue;
    const Unit* e = s.unit_at(a.target);
    if (best == nullptr || e->strength < best->strength) best = e;
  }
  if (best == nullptr) return std::nullopt;
  return Action::attack(best->pos);
}

const Unit* nearest_enemy(const GameState& s, const Unit& u) {
  const Unit* best = nullptr;
  int best_d = 0;
  for (const Unit& e : s.units) {
    if (e.faction == u.faction) continue;
    const int d = distance(u.pos, e.pos);
    if (best == nullptr || d < best_d) {
      best = &e;
      best_d = d;
    }
  }
  return best;
}

std::optional<Action> step_toward(const GameState& s, const Unit& u, HexCoord target) {
  std::optional<Action> best;
  int best_d = distance(u.pos, target);
  for (const Action& a : legal_actions(s, u.id)) {
    if (a.kind != ActionKind::move) continue;
    const int d = distance(a.target, target);
    if (d < best_d) {
      best = a;
      best_d = d;
    }
  }
  return best;
}

std::optional<HexCoord> nearest_open_city(const GameState& s, const Unit& u) {
  std::optional<HexCoord> best;
  int best_d = 0;
  for (int i = 0; i < s.board.size(); ++i) {
    const HexCoord h = s.board.coord(i);
    if (s.board.at(h) != Terrain::urban) continue;
    const Unit* holder = s.unit_at(h);
    if (holder != nullptr && holder->faction == u.faction) continue;
    const int d = distance(u.pos, h);
    if (!best || d < best_d) {
      best = h;
      best_d = d;
    }
  }
  return best;
}

}  // namespace tactics

namespace {

using namespace tactics;

Action greedy_attack(const GameState& s, const Unit& u) {
  if (auto a = attack_weakest(s, u, rules::attack_range(u.kind))) return *a;
  if (const Unit* e = nearest_enemy(s, u)) {
    if (auto m = step_toward(s, u, e->pos)) return *m;
  }
  return Action::pass();
}

Action hold_city(const GameState& s, const Unit& u) {
  if (auto a = attack_weakest(s, u, 1)) return *a;
  if (s.board.at(u.pos) == Terrain::urban) return Action::pass();
  if (auto city = nearest_open_city(s, u)) {
    if (auto m = step_toward(s, u, *city)) return *m;
  }
  return Action::pass();
}

Action withdraw(const GameState& s, const Unit& u) {
  const Unit* e = nearest_enemy(s, u);
  if (e == nullptr) return Action::pass();
  std::optional<Action> best;
  int best_d = distance(u.pos, e->pos);
  for (const Action& a : legal_actions(s, u.id)) {
    if (a.kind != ActionKind::move) continue;
    const int d = distance(a.target, e->pos);
    if (d > best_d) {
      best = a;
      best_d = d;
    }
  }
  return best.value_or(Action::pass());
}

Action baseline(const GameState& s, const Unit& u) {
  if (s.board.at(u.pos) == Terrain::urban || nearest_open_city(s, u)) return hold_city(s, u);
  return greedy_attack(s, u);
}

}  // namespace

std::vector<std::string> scripted_policy_names() {
  return {"greedy_attack", "hold_city", "withdraw", "pass_only", "baseline"};
}

Action scripted_act(std::string_view policy, const GameState& s, int unit_id) {
  const Unit* u = s.find(unit_id);
  if (u == nullptr) throw TurnOrderError("unit " + std::to_string(unit_id) + " is not alive");
  // legal_actions validates that the unit is on move.
  if (policy == "pass_only") {
    legal_actions(s, unit_id);
    return Action::pass();
  }
  if (policy == "greedy_attack") return greedy_attack(s, *u);
  if (policy == "hold_city") return hold_city(s, *u);
  if (policy == "withdraw") return withdraw(s, *u);
  if (policy == "baseline") return baseline(s, *u);
  throw LookupError("unknown scripted policy '" + std::string(policy) + "'");
}

BehaviorModel scripted_behavior(std::string_view policy) {
  const auto names = scripted_policy_names();
  if (std::find(names.begin(), names.end(), policy) == names.end()) {
    throw LookupError("unknown scripted policy '" + std::string(policy) + "'");
  }
  std::string name(policy);
  return {name, BehaviorKind::scripted,
          [name](const GameState& s, int unit_id) { return scripted_act(name, s, unit_id); }};
}

}  // namespace hexwar
