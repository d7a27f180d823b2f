#include "hexwar/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "hexwar/error.hpp"
#include "hexwar/scripted.hpp"

namespace hexwar {

using nlohmann::json;

std::string_view to_string(Posture p) { return p == Posture::offensive ? "offensive" : "defensive"; }

std::string_view to_string(Objective o) {
  switch (o) {
    case Objective::max_score: return "max_score";
    case Objective::destroy_red: return "destroy_red";
    case Objective::preserve_blue: return "preserve_blue";
    case Objective::hold_urban: return "hold_urban";
  }
  return "?";
}

std::string_view to_string(TaskKind t) {
  switch (t) {
    case TaskKind::seize: return "seize";
    case TaskKind::hold: return "hold";
    case TaskKind::screen: return "screen";
  }
  return "?";
}

std::string_view to_string(Level l) {
  switch (l) {
    case Level::commander: return "commander";
    case Level::manager: return "manager";
    case Level::op: return "operator";
  }
  return "?";
}

Posture posture_from_string(std::string_view s) {
  if (s == "offensive") return Posture::offensive;
  if (s == "defensive") return Posture::defensive;
  throw FormatError("unknown posture '" + std::string(s) + "'");
}

Objective objective_from_string(std::string_view s) {
  for (auto o : {Objective::max_score, Objective::destroy_red, Objective::preserve_blue, Objective::hold_urban}) {
    if (to_string(o) == s) return o;
  }
  throw FormatError("unknown objective '" + std::string(s) + "'");
}

TaskKind task_kind_from_string(std::string_view s) {
  for (auto t : {TaskKind::seize, TaskKind::hold, TaskKind::screen}) {
    if (to_string(t) == s) return t;
  }
  throw FormatError("unknown task '" + std::string(s) + "'");
}

Level level_from_string(std::string_view s) {
  for (auto l : {Level::commander, Level::manager, Level::op}) {
    if (to_string(l) == s) return l;
  }
  throw FormatError("unknown level '" + std::string(s) + "'");
}

void Subgoal::validate() const {
  if (target_cell < 0 || target_cell >= kCommanderGrid * kCommanderGrid) {
    throw ConfigError("subgoal target cell " + std::to_string(target_cell) + " outside the coarse grid");
  }
  if (termination.max_phases < 1) throw ConfigError("subgoal termination needs max_phases >= 1");
}

json to_json(const Subgoal& g) {
  return {{"posture", to_string(g.posture)},
          {"target_cell", g.target_cell},
          {"termination",
           {{"max_phases", g.termination.max_phases}, {"on_target_occupied", g.termination.on_target_occupied}}}};
}

json to_json(const UnitTask& t) {
  return {{"unit", t.unit_id}, {"objective", to_json(t.objective)}, {"task", to_string(t.task)}};
}

namespace {

void require_shape(const MlpD& net, int in, int out, std::string_view level) {
  if (net.layers() == 0 || net.input_size() != in || net.output_size() != out) {
    throw ConfigError(std::string(level) + " network must map " + std::to_string(in) + " inputs to " +
                      std::to_string(out) + " outputs");
  }
}

}  // namespace

void HierarchySpec::validate() const {
  if (commander && !manager) throw ConfigError("a commander needs a manager below it");
  int trainable = op.trainable ? 1 : 0;
  if (commander) {
    if (commander->period < 1) throw ConfigError("commander period must be >= 1");
    if (commander->kind == PolicyKind::learned) {
      require_shape(commander->net, kCommanderInputs, kCommanderActions, "commander");
    }
    trainable += commander->trainable;
  }
  if (manager) {
    if (manager->kind == PolicyKind::learned) require_shape(manager->net, kManagerInputs, kManagerActions, "manager");
    trainable += manager->trainable;
  }
  switch (op.kind) {
    case OperatorKind::learned: require_shape(op.net, kOperatorInputs, kActionSlots, "operator"); break;
    case OperatorKind::behavior:
      if (!op.behavior.act) throw ConfigError("behavior operator has no policy");
      break;
    case OperatorKind::multimodel:
      if (!op.multimodel) throw ConfigError("multimodel operator has no model");
      break;
    case OperatorKind::scripted: break;
  }
  if (trainable > 1) throw ConfigError("at most one level may be marked trainable");
}

// --- geometry helpers ---------------------------------------------------------

CellBlock cell_block(const Board& b, int grid, int cell) {
  if (cell < 0 || cell >= grid * grid) throw ConfigError("cell index out of range");
  return {block_range(b.height(), grid, cell / grid), block_range(b.width(), grid, cell % grid)};
}

namespace {

HexCoord block_center(const Board& b, const CellBlock& blk) {
  const int col = std::clamp((blk.cols.begin + blk.cols.end - 1) / 2, 0, b.width() - 1);
  const int row = std::clamp((blk.rows.begin + blk.rows.end - 1) / 2, 0, b.height() - 1);
  return {col, row};
}

// Nearest hex to `target` satisfying `ok`, ties to row-major order.
template <typename Pred>
std::optional<HexCoord> nearest_hex(const Board& b, HexCoord target, Pred ok) {
  std::optional<HexCoord> best;
  int best_d = std::numeric_limits<int>::max();
  for (int i = 0; i < b.size(); ++i) {
    const HexCoord h = b.coord(i);
    if (!ok(h)) continue;
    const int d = distance(h, target);
    if (d < best_d) {
      best_d = d;
      best = h;
    }
  }
  return best;
}

HexCoord nearest_passable(const Board& b, HexCoord target) {
  auto h = nearest_hex(b, target, [&](HexCoord x) { return b.passable(x); });
  if (!h) throw StateError("board has no passable hex");
  return *h;
}

// Passable hex of the block nearest `from`; falls back to the hex nearest the
// block center when the block is empty or all water.
HexCoord block_objective(const Board& b, const CellBlock& blk, HexCoord from) {
  auto h = nearest_hex(b, from, [&](HexCoord x) { return blk.contains(x) && b.passable(x); });
  return h ? *h : nearest_passable(b, block_center(b, blk));
}

HexCoord cube_round(double x, double z) {
  const double y = -x - z;
  double rx = std::round(x), ry = std::round(y), rz = std::round(z);
  const double dx = std::abs(rx - x), dy = std::abs(ry - y), dz = std::abs(rz - z);
  if (dx > dy && dx > dz) {
    rx = -ry - rz;
  } else if (dy <= dz) {
    rz = -rx - ry;
  }
  return from_cube({static_cast<int>(rx), static_cast<int>(-rx - rz), static_cast<int>(rz)});
}

int argmax_lowest(const Eigen::VectorXd& v) {
  int best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = static_cast<int>(i);
  }
  return best;
}

double channel_mass(const ObsTensor& t, int c, int cell) {
  return t(c, cell / t.width(), cell % t.width());
}

int max_mass_cell(const ObsTensor& t, std::initializer_list<int> channels) {
  int best = 0;
  double best_mass = -std::numeric_limits<double>::infinity();
  for (int cell = 0; cell < t.height() * t.width(); ++cell) {
    double m = 0.0;
    for (int c : channels) m += channel_mass(t, c, cell);
    if (m > best_mass) {
      best_mass = m;
      best = cell;
    }
  }
  return best;
}

const Unit& require_unit(const GameState& s, int unit_id) {
  const Unit* u = s.find(unit_id);
  if (u == nullptr) throw PreconditionError("unit " + std::to_string(unit_id) + " is not alive");
  return *u;
}

}  // namespace

// --- level inputs ---------------------------------------------------------------

ObsTensor commander_observation(const GameState& s) {
  int viewer = -1;
  for (const Unit& u : s.units) {
    if (u.faction == Faction::blue) {
      viewer = u.id;
      break;
    }
  }
  if (viewer < 0) throw PreconditionError("commander needs a living blue unit");
  ObsTensor t = coarse_abstract(encode_full(s, viewer), kCommanderGrid);
  t.channel(channel::kOnMove).setZero();
  return t;
}

ObsTensor manager_observation(const GameState& s, int unit_id) {
  const Board& b = s.board;
  if (b.width() < kManagerGrid || b.height() < kManagerGrid) {
    throw CompatibilityError("manager view needs a board of at least 7x7");
  }
  return coarse_abstract(encode_full(s, unit_id), kManagerGrid);
}

Eigen::VectorXd manager_input(const GameState& s, int unit_id, const Subgoal& g) {
  g.validate();
  const ObsTensor t = manager_observation(s, unit_id);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(kManagerInputs);
  x.head(t.values().size()) = t.values();
  const Eigen::Index base = t.values().size();
  x[base + static_cast<int>(g.posture)] = 1.0;
  x[base + 2 + g.target_cell] = 1.0;
  return x;
}

Eigen::VectorXd operator_input(const GameState& s, int unit_id, const UnitTask& t, const DecaySpec& decay) {
  const Unit& u = require_unit(s, unit_id);
  const ObsTensor local = local_egocentric(s, unit_id, decay);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(kOperatorInputs);
  x.head(local.values().size()) = local.values();
  const Eigen::Index base = local.values().size();
  x[base + static_cast<int>(t.task)] = 1.0;
  const int d = distance(u.pos, t.objective);
  if (d > 0) {
    const Eigen::Vector2d v = planar_offset(u.pos, t.objective);
    x[base + 3] = v.x() / v.norm();
    x[base + 4] = v.y() / v.norm();
  }
  x[base + 5] = static_cast<double>(d) / (s.board.width() + s.board.height());
  return x;
}

// --- commander --------------------------------------------------------------------

Subgoal decode_commander_action(int slot, const CommanderPolicy& p) {
  if (slot < 0 || slot >= kCommanderActions) throw ConfigError("commander slot out of range");
  const int cells = kCommanderGrid * kCommanderGrid;
  return {static_cast<Posture>(slot / cells), slot % cells, {p.period, p.stop_on_occupied}};
}

Subgoal commander_decide(const CommanderPolicy& p, const ObsTensor& coarse) {
  if (coarse.channels() != channel::kCount || coarse.height() != kCommanderGrid ||
      coarse.width() != kCommanderGrid) {
    throw CompatibilityError("commander expects a 17x5x5 observation");
  }
  if (p.kind == PolicyKind::learned) {
    require_shape(p.net, kCommanderInputs, kCommanderActions, "commander");
    return decode_commander_action(argmax_lowest(forward(p.net, coarse.values())), p);
  }
  const int urban = channel::kTerrain + static_cast<int>(Terrain::urban);
  Subgoal g;
  g.termination = {p.period, p.stop_on_occupied};
  switch (p.objective) {
    case Objective::max_score:
      g.posture = coarse.channel(channel::kBlueTotal).sum() >= coarse.channel(channel::kRedTotal).sum()
                      ? Posture::offensive
                      : Posture::defensive;
      g.target_cell = max_mass_cell(coarse, {urban});
      break;
    case Objective::destroy_red:
      g.posture = Posture::offensive;
      g.target_cell = max_mass_cell(coarse, {channel::kRedStrength, channel::kRedStrength + 1,
                                             channel::kRedStrength + 2});
      break;
    case Objective::preserve_blue:
      g.posture = Posture::defensive;
      g.target_cell = max_mass_cell(coarse, {channel::kBlueStrength, channel::kBlueStrength + 1,
                                             channel::kBlueStrength + 2});
      break;
    case Objective::hold_urban:
      g.posture = Posture::defensive;
      g.target_cell = max_mass_cell(coarse, {urban});
      break;
  }
  return g;
}

// --- manager ----------------------------------------------------------------------

UnitTask decode_manager_action(int slot, const GameState& s, int unit_id) {
  if (slot < 0 || slot >= kManagerActions) throw ConfigError("manager slot out of range");
  const Unit& u = require_unit(s, unit_id);
  const CellBlock blk = cell_block(s.board, kManagerGrid, slot / 3);
  return {unit_id, block_objective(s.board, blk, u.pos), static_cast<TaskKind>(slot % 3)};
}

namespace {

std::vector<UnitTask> scripted_manager(const GameState& s, const Subgoal& g,
                                       const std::vector<const Unit*>& blue) {
  const Board& b = s.board;
  const CellBlock blk = cell_block(b, kCommanderGrid, g.target_cell);
  std::vector<UnitTask> tasks;
  if (g.posture == Posture::offensive) {
    for (const Unit* u : blue) tasks.push_back({u->id, block_objective(b, blk, u->pos), TaskKind::seize});
    return tasks;
  }
  const HexCoord center = block_center(b, blk);
  auto city = nearest_hex(b, center, [&](HexCoord h) { return blk.contains(h) && b.at(h) == Terrain::urban; });
  if (!city) city = nearest_hex(b, center, [&](HexCoord h) { return b.at(h) == Terrain::urban; });
  const HexCoord hold_hex = city ? *city : nearest_passable(b, center);

  const Unit* holder = blue.front();
  for (const Unit* u : blue) {
    if (distance(u->pos, hold_hex) < distance(holder->pos, hold_hex)) holder = u;
  }
  // Screen line: halfway between the blue centroid and the red unit nearest it.
  double cx = 0.0, cz = 0.0;
  for (const Unit* u : blue) {
    const CubeCoord c = to_cube(u->pos);
    cx += c.x;
    cz += c.z;
  }
  cx /= blue.size();
  cz /= blue.size();
  const HexCoord centroid = cube_round(cx, cz);
  const Unit* enemy = nullptr;
  for (const Unit& r : s.units) {
    if (r.faction != Faction::red) continue;
    if (enemy == nullptr || distance(r.pos, centroid) < distance(enemy->pos, centroid)) enemy = &r;
  }
  HexCoord screen_hex = hold_hex;
  if (enemy != nullptr) {
    const CubeCoord e = to_cube(enemy->pos);
    screen_hex = nearest_passable(b, cube_round((cx + e.x) / 2.0, (cz + e.z) / 2.0));
  }
  for (const Unit* u : blue) {
    if (u == holder) {
      tasks.push_back({u->id, hold_hex, TaskKind::hold});
    } else {
      tasks.push_back({u->id, screen_hex, TaskKind::screen});
    }
  }
  return tasks;
}

}  // namespace

std::vector<UnitTask> manager_decide(const ManagerPolicy& p, const GameState& s, const Subgoal& g) {
  g.validate();
  std::vector<const Unit*> blue;
  for (const Unit& u : s.units) {
    if (u.faction == Faction::blue) blue.push_back(&u);
  }
  if (blue.empty()) throw PreconditionError("manager needs at least one blue unit");
  if (p.kind == PolicyKind::scripted) return scripted_manager(s, g, blue);
  require_shape(p.net, kManagerInputs, kManagerActions, "manager");
  std::vector<UnitTask> tasks;
  for (const Unit* u : blue) {
    tasks.push_back(decode_manager_action(argmax_lowest(forward(p.net, manager_input(s, u->id, g))), s, u->id));
  }
  return tasks;
}

// --- operator -----------------------------------------------------------------------

namespace {

int nearest_enemy_distance(const GameState& s, const Unit& u, HexCoord from) {
  int best = std::numeric_limits<int>::max();
  for (const Unit& e : s.units) {
    if (e.faction != u.faction) best = std::min(best, distance(from, e.pos));
  }
  return best;
}

Action approach(const GameState& s, const Unit& u, HexCoord objective) {
  if (auto m = tactics::step_toward(s, u, objective)) return *m;
  // Blocked: strike whatever sits on the objective, else anything in reach.
  const Unit* occupant = s.unit_at(objective);
  if (occupant != nullptr && occupant->faction != u.faction) {
    const Action hit = Action::attack(objective);
    const auto legal = legal_actions(s, u.id);
    if (std::find(legal.begin(), legal.end(), hit) != legal.end()) return hit;
  }
  if (auto a = tactics::attack_weakest(s, u, rules::attack_range(u.kind))) return *a;
  return Action::pass();
}

Action screen(const GameState& s, const Unit& u, HexCoord objective) {
  // Candidates: stay, then moves in neighbor order.
  std::vector<std::pair<Action, HexCoord>> options{{Action::pass(), u.pos}};
  for (const Action& a : legal_actions(s, u.id)) {
    if (a.kind == ActionKind::move) options.push_back({a, a.target});
  }
  auto violation = [&](HexCoord h) {
    return std::max(0, 2 - nearest_enemy_distance(s, u, h)) + std::max(0, distance(h, objective) - 3);
  };
  std::size_t best = 0;
  for (std::size_t i = 1; i < options.size(); ++i) {
    const HexCoord h = options[i].second;
    const HexCoord b = options[best].second;
    const int vi = violation(h), vb = violation(b);
    if (vi < vb || (vi == vb && distance(h, objective) < distance(b, objective))) best = i;
  }
  if (best == 0 && nearest_enemy_distance(s, u, u.pos) == 1) {
    if (auto a = tactics::attack_weakest(s, u, 1)) return *a;
  }
  return options[best].first;
}

}  // namespace

Action scripted_operator(const GameState& s, int unit_id, const UnitTask& t) {
  const Unit& u = require_unit(s, unit_id);
  switch (t.task) {
    case TaskKind::seize:
      if (u.pos == t.objective) {
        if (auto a = tactics::attack_weakest(s, u, rules::attack_range(u.kind))) return *a;
        return Action::pass();
      }
      return approach(s, u, t.objective);
    case TaskKind::hold:
      if (u.pos == t.objective) {
        if (auto a = tactics::attack_weakest(s, u, 1)) return *a;
        return Action::pass();
      }
      return approach(s, u, t.objective);
    case TaskKind::screen: return screen(s, u, t.objective);
  }
  return Action::pass();
}

OperatorChoice operator_act(const OperatorPolicy& p, const GameState& s, int unit_id, const UnitTask& t) {
  if (t.unit_id != unit_id) {
    throw PreconditionError("task for unit " + std::to_string(t.unit_id) + " given to unit " +
                            std::to_string(unit_id));
  }
  if (s.cursor != unit_id) throw PreconditionError("unit " + std::to_string(unit_id) + " is not on move");
  if (!s.board.passable(t.objective)) throw PreconditionError("task objective is not a passable hex");
  switch (p.kind) {
    case OperatorKind::scripted: return {scripted_operator(s, unit_id, t), {}};
    case OperatorKind::behavior: return {p.behavior.act(s, unit_id), {}};
    case OperatorKind::multimodel: {
      const MultiModelChoice c = multimodel_act(*p.multimodel, s, unit_id);
      return {c.action, c.audit(*p.multimodel)};
    }
    case OperatorKind::learned: {
      const SlotActions slots = action_slots(s, unit_id);
      const Eigen::VectorXd q = forward(p.net, operator_input(s, unit_id, t, p.decay));
      return {*slots[masked_argmax(q, slot_mask(slots))], {}};
    }
  }
  throw ConfigError("unknown operator kind");
}

// --- agent ------------------------------------------------------------------------------

HierarchyAgent::HierarchyAgent(HierarchySpec spec, std::string name)
    : spec_(std::move(spec)), name_(std::move(name)) {
  spec_.validate();
}

void HierarchyAgent::reset(std::uint64_t policy_seed) {
  (void)policy_seed;
  subgoal_.reset();
  subgoal_phase_ = 0;
  planned_phase_ = 0;
  tasks_.clear();
  plan_audit_ = nullptr;
}

void HierarchyAgent::set_chooser(Level level, LevelChooser chooser) {
  hooked_ = level;
  chooser_ = std::move(chooser);
}

bool HierarchyAgent::termination_fired(const GameState& s) const {
  if (s.phase - subgoal_phase_ >= subgoal_->termination.max_phases) return true;
  if (!subgoal_->termination.on_target_occupied) return false;
  const CellBlock blk = cell_block(s.board, kCommanderGrid, subgoal_->target_cell);
  return std::any_of(s.units.begin(), s.units.end(),
                     [&](const Unit& u) { return u.faction == Faction::blue && blk.contains(u.pos); });
}

void HierarchyAgent::plan(const GameState& s) {
  planned_phase_ = s.phase;
  plan_audit_ = json::object();
  plan_audit_["phase"] = s.phase;
  if (!spec_.manager) return;

  if (spec_.commander) {
    const CommanderPolicy& c = *spec_.commander;
    std::string reason;
    if (!subgoal_) {
      reason = "start";
    } else if (termination_fired(s)) {
      reason = "termination";
    } else if ((s.phase - 1) % c.period == 0) {
      reason = "period";
    }
    if (!reason.empty()) {
      const ObsTensor obs = commander_observation(s);
      if (c.kind == PolicyKind::learned && hooked_ == Level::commander) {
        subgoal_ = decode_commander_action(
            chooser_(Level::commander, -1, obs.values(), std::vector<char>(kCommanderActions, 1)), c);
      } else {
        subgoal_ = commander_decide(c, obs);
      }
      subgoal_phase_ = s.phase;
      json rec = to_json(*subgoal_);
      rec["reason"] = reason;
      plan_audit_["commander"] = rec;
    }
  } else if (!subgoal_) {
    // Manager-only hierarchies work toward the board center.
    subgoal_ = Subgoal{Posture::offensive, kCommanderGrid * kCommanderGrid / 2, {}};
    subgoal_phase_ = s.phase;
  }

  const ManagerPolicy& m = *spec_.manager;
  std::vector<UnitTask> tasks;
  if (m.kind == PolicyKind::learned && hooked_ == Level::manager) {
    for (const Unit& u : s.units) {
      if (u.faction != Faction::blue) continue;
      const int slot = chooser_(Level::manager, u.id, manager_input(s, u.id, *subgoal_),
                                std::vector<char>(kManagerActions, 1));
      tasks.push_back(decode_manager_action(slot, s, u.id));
    }
  } else {
    tasks = manager_decide(m, s, *subgoal_);
  }
  tasks_.clear();
  json rec = json::array();
  for (const UnitTask& t : tasks) {
    tasks_[t.unit_id] = t;
    rec.push_back(to_json(t));
  }
  plan_audit_["manager"] = rec;
}

Decision HierarchyAgent::decide(const GameState& s, int unit_id) {
  const bool fresh_phase = s.phase != planned_phase_;
  if (fresh_phase) plan(s);
  UnitTask task{unit_id, require_unit(s, unit_id).pos, spec_.default_task};
  if (auto it = tasks_.find(unit_id); spec_.manager && it != tasks_.end()) task = it->second;

  OperatorChoice c;
  if (spec_.op.kind == OperatorKind::learned && hooked_ == Level::op) {
    const SlotActions slots = action_slots(s, unit_id);
    const int a = chooser_(Level::op, unit_id, operator_input(s, unit_id, task, spec_.op.decay), slot_mask(slots));
    c.action = *slots.at(a);
  } else {
    c = operator_act(spec_.op, s, unit_id, task);
  }
  if (spec_.levels() == 1) return {c.action, c.audit};

  json audit = json::object();
  if (fresh_phase) audit = plan_audit_;
  audit["phase"] = s.phase;
  audit["task"] = to_json(task);
  if (!c.audit.is_null()) audit["operator"] = c.audit;
  return {c.action, audit};
}

// --- training ------------------------------------------------------------------------------

namespace {

struct BudgetExhausted {};

std::vector<int> with_io(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

}  // namespace

HierarchySpec train_level(const HierarchySpec& h, Level level, const DqnEnvParams& env, const Agent& red,
                          const LevelTraining& cfg) {
  h.validate();
  const bool others_trainable = (level != Level::commander && h.commander && h.commander->trainable) ||
                                (level != Level::manager && h.manager && h.manager->trainable) ||
                                (level != Level::op && h.op.trainable);
  if (others_trainable) throw ConfigError("another level is marked trainable; train one level at a time");
  if ((level == Level::commander && !h.commander) || (level == Level::manager && !h.manager)) {
    throw ConfigError("hierarchy has no " + std::string(to_string(level)) + " level");
  }
  if (cfg.budget < 0) throw ConfigError("training budget must be >= 0");
  if (cfg.budget == 0) return h;

  HierarchySpec out = h;
  QLearnerConfig lc = cfg.learner;
  lc.seed = mix_seed(cfg.seed, 7);
  auto start_net = [&](const MlpD& current, bool learned, int in, int actions) {
    return learned ? current : MlpD::xavier(with_io(in, cfg.learner.hidden, actions), mix_seed(cfg.seed, 1));
  };
  MlpD* target = nullptr;
  switch (level) {
    case Level::commander:
      out.commander->net = start_net(h.commander->net, h.commander->kind == PolicyKind::learned, kCommanderInputs,
                                     kCommanderActions);
      out.commander->kind = PolicyKind::learned;
      target = &out.commander->net;
      break;
    case Level::manager:
      out.manager->net = start_net(h.manager->net, h.manager->kind == PolicyKind::learned, kManagerInputs,
                                   kManagerActions);
      out.manager->kind = PolicyKind::learned;
      target = &out.manager->net;
      break;
    case Level::op:
      out.op.net = start_net(h.op.net, h.op.kind == OperatorKind::learned, kOperatorInputs, kActionSlots);
      out.op.kind = OperatorKind::learned;
      target = &out.op.net;
      break;
  }
  QLearner learner(*target, lc);

  // Manager transitions chain per unit; the other levels form one chain.
  struct Pending {
    Eigen::VectorXd obs;
    int action = 0;
    double reward = 0.0;
  };
  std::map<int, Pending> pending;
  long steps = 0;
  auto chooser = [&](Level, int unit_id, const Eigen::VectorXd& obs, const std::vector<char>& mask) {
    if (steps >= cfg.budget) throw BudgetExhausted{};
    const int key = level == Level::manager ? unit_id : 0;
    if (auto it = pending.find(key); it != pending.end()) {
      learner.record(it->second.obs, it->second.action, it->second.reward * cfg.reward_scale, obs, mask, false);
    }
    const int a = learner.act(obs, mask, cfg.epsilon.at(steps));
    pending[key] = {obs, a, 0.0};
    ++steps;
    return a;
  };

  HierarchyAgent blue(out, "hierarchy-training");
  blue.set_chooser(level, chooser);
  for (long episode = 0; steps < cfg.budget; ++episode) {
    blue.reset(0);
    auto r = red.clone();
    r->reset(mix_seed(cfg.seed, 3 * episode + 11));
    const GameState start = generate_scenario(
        env.scenario, env.fixed_scenario ? env.scenario_seed : mix_seed(cfg.seed, 1000 + episode));
    pending.clear();
    try {
      run_match(start, blue, *r, [&](const StepInfo& info) {
        double reward = sum_signed(info.events) + sum_signed(info.phase_events);
        if (cfg.shaper) reward = cfg.shaper(level, info, reward);
        for (auto& [key, p] : pending) p.reward += reward;
        if (level != Level::manager) return;
        for (auto it = pending.begin(); it != pending.end();) {
          if (info.after.find(it->first) == nullptr) {
            learner.record(it->second.obs, it->second.action, it->second.reward * cfg.reward_scale, {}, {}, true);
            it = pending.erase(it);
          } else {
            ++it;
          }
        }
      });
      for (auto& [key, p] : pending) learner.record(p.obs, p.action, p.reward * cfg.reward_scale, {}, {}, true);
    } catch (const BudgetExhausted&) {
      // Cut-off transitions have no successor; drop them.
    }
  }
  *target = learner.net();
  return out;
}

// --- bundle -------------------------------------------------------------------------------

namespace {

json policy_entry(PolicyKind kind, const MlpD& net, const std::filesystem::path& dir, const std::string& file) {
  if (kind == PolicyKind::scripted) return {{"kind", "scripted"}};
  save_weights(net, dir / file);
  return {{"kind", "learned"}, {"file", file}};
}

}  // namespace

void save_hierarchy(const HierarchySpec& h, const std::filesystem::path& dir) {
  h.validate();
  std::filesystem::create_directories(dir);
  json m{{"v", 1}, {"kind", "hierarchy"}, {"levels", h.levels()}, {"default_task", to_string(h.default_task)}};
  if (h.commander) {
    json c = policy_entry(h.commander->kind, h.commander->net, dir, "commander.bin");
    c["objective"] = to_string(h.commander->objective);
    c["period"] = h.commander->period;
    c["stop_on_occupied"] = h.commander->stop_on_occupied;
    m["commander"] = c;
  }
  if (h.manager) m["manager"] = policy_entry(h.manager->kind, h.manager->net, dir, "manager.bin");
  json op;
  switch (h.op.kind) {
    case OperatorKind::scripted: op = {{"kind", "scripted"}}; break;
    case OperatorKind::learned:
      save_weights(h.op.net, dir / "operator.bin");
      op = {{"kind", "learned"}, {"file", "operator.bin"}};
      break;
    case OperatorKind::behavior:
    case OperatorKind::multimodel:
      if (h.op.source.is_null()) throw ConfigError("operator has no source description to save");
      op = {{"kind", h.op.kind == OperatorKind::behavior ? "behavior" : "multimodel"}, {"source", h.op.source}};
      break;
  }
  op["decay"] = {{"inner_radius", h.op.decay.inner_radius},
                 {"zero_distance", h.op.decay.zero_distance ? json(*h.op.decay.zero_distance) : json(nullptr)}};
  m["operator"] = op;
  m["cadence"] = {{"commander_period", h.commander ? h.commander->period : 0}, {"manager_phases", 1}};
  std::ofstream out(dir / "manifest.json");
  if (!out) throw FormatError("cannot write " + (dir / "manifest.json").string());
  out << m.dump(2) << "\n";
}

HierarchySpec load_hierarchy(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw FormatError("missing " + (dir / "manifest.json").string());
  json m;
  try {
    m = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad hierarchy manifest: ") + e.what());
  }
  if (m.value("kind", "") != "hierarchy") throw FormatError("manifest is not a hierarchy bundle");
  if (m.value("v", 0) != 1) throw VersionError("unsupported hierarchy bundle version");
  try {
    HierarchySpec h;
    h.default_task = task_kind_from_string(m.value("default_task", "hold"));
    auto learned = [&](const json& e, MlpD& net) {
      if (e.at("kind") == "learned") {
        net = load_weights<double>(dir / e.at("file").get<std::string>());
        return PolicyKind::learned;
      }
      return PolicyKind::scripted;
    };
    if (m.contains("commander")) {
      const json& e = m["commander"];
      CommanderPolicy c;
      c.kind = learned(e, c.net);
      c.objective = objective_from_string(e.value("objective", "max_score"));
      c.period = e.value("period", 5);
      c.stop_on_occupied = e.value("stop_on_occupied", false);
      h.commander = c;
    }
    if (m.contains("manager")) {
      ManagerPolicy p;
      p.kind = learned(m["manager"], p.net);
      h.manager = p;
    }
    const json& op = m.at("operator");
    const std::string kind = op.at("kind").get<std::string>();
    if (kind == "scripted") {
      h.op.kind = OperatorKind::scripted;
    } else if (kind == "learned") {
      h.op.kind = OperatorKind::learned;
      h.op.net = load_weights<double>(dir / op.at("file").get<std::string>());
    } else if (kind == "behavior") {
      h.op.kind = OperatorKind::behavior;
      h.op.source = op.at("source");
      h.op.behavior = default_behavior_resolver(dir)(h.op.source);
    } else if (kind == "multimodel") {
      h.op.kind = OperatorKind::multimodel;
      h.op.source = op.at("source");
      std::filesystem::path mm = h.op.source.at("dir").get<std::string>();
      if (mm.is_relative()) mm = dir / mm;
      h.op.multimodel = std::make_shared<const MultiModel>(load_multimodel(mm));
    } else {
      throw FormatError("unknown operator kind '" + kind + "'");
    }
    if (op.contains("decay")) {
      h.op.decay.inner_radius = op["decay"].at("inner_radius").get<int>();
      if (!op["decay"]["zero_distance"].is_null()) h.op.decay.zero_distance = op["decay"]["zero_distance"].get<int>();
    }
    h.validate();
    return h;
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad hierarchy manifest: ") + e.what());
  }
}

}  // namespace hexwar
