#include "hexwar/engine.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "hexwar/error.hpp"
#include "hexwar/rng.hpp"

namespace hexwar {

namespace {

std::string describe(HexCoord h) {
  return "(" + std::to_string(h.col) + "," + std::to_string(h.row) + ")";
}

Unit* find_mut(GameState& s, int unit_id) {
  auto it = std::lower_bound(s.units.begin(), s.units.end(), unit_id,
                             [](const Unit& u, int id) { return u.id < id; });
  return it != s.units.end() && it->id == unit_id ? &*it : nullptr;
}

// Moves the cursor to the next unit due to act: blue by ascending id, then red.
void settle_cursor(GameState& s) {
  for (;;) {
    for (const Unit& u : s.units) {
      if (u.faction == s.on_move && !u.acted) {
        s.cursor = u.id;
        return;
      }
    }
    if (s.on_move == Faction::red) break;
    s.on_move = Faction::red;
  }
  s.cursor.reset();
}

void check_turn(const GameState& s, int unit_id) {
  if (is_terminal(s)) throw SequencingError("game is over");
  const Unit* u = s.find(unit_id);
  if (u == nullptr) throw TurnOrderError("unit " + std::to_string(unit_id) + " is not alive");
  if (u->faction != s.on_move) {
    throw TurnOrderError("unit " + std::to_string(unit_id) + " belongs to " +
                         std::string(to_string(u->faction)) + " but " +
                         std::string(to_string(s.on_move)) + " is on move");
  }
  if (u->acted) throw TurnOrderError("unit " + std::to_string(unit_id) + " already acted this phase");
  if (s.cursor != unit_id) {
    throw TurnOrderError("unit " + std::to_string(unit_id) + " is not next to act (next: " +
                         (s.cursor ? std::to_string(*s.cursor) : std::string("none")) + ")");
  }
}

}  // namespace

std::string_view to_string(Faction f) { return f == Faction::blue ? "blue" : "red"; }

std::string_view to_string(UnitKind k) {
  switch (k) {
    case UnitKind::infantry: return "infantry";
    case UnitKind::armor: return "armor";
    case UnitKind::artillery: return "artillery";
  }
  return "infantry";
}

Faction faction_from_string(std::string_view s) {
  if (s == "blue") return Faction::blue;
  if (s == "red") return Faction::red;
  throw FormatError("unknown faction '" + std::string(s) + "'");
}

UnitKind unit_kind_from_string(std::string_view s) {
  if (s == "infantry") return UnitKind::infantry;
  if (s == "armor") return UnitKind::armor;
  if (s == "artillery") return UnitKind::artillery;
  throw FormatError("unknown unit kind '" + std::string(s) + "'");
}

std::string_view to_string(ActionKind k) {
  switch (k) {
    case ActionKind::pass: return "pass";
    case ActionKind::move: return "move";
    case ActionKind::attack: return "attack";
  }
  return "pass";
}

ActionKind action_kind_from_string(std::string_view s) {
  if (s == "pass") return ActionKind::pass;
  if (s == "move") return ActionKind::move;
  if (s == "attack") return ActionKind::attack;
  throw FormatError("unknown action kind '" + std::string(s) + "'");
}

std::string_view to_string(ScoreKind k) {
  switch (k) {
    case ScoreKind::kill: return "kill";
    case ScoreKind::loss: return "loss";
    case ScoreKind::urban_hold: return "urban_hold";
  }
  return "kill";
}

ScoreKind score_kind_from_string(std::string_view s) {
  if (s == "kill") return ScoreKind::kill;
  if (s == "loss") return ScoreKind::loss;
  if (s == "urban_hold") return ScoreKind::urban_hold;
  throw FormatError("unknown score event kind '" + std::string(s) + "'");
}

double sum_signed(const std::vector<ScoreEvent>& events) {
  double total = 0.0;
  for (const ScoreEvent& e : events) total += e.signed_amount();
  return total;
}

namespace rules {

double type_multiplier(UnitKind attacker, UnitKind defender) {
  if (attacker == UnitKind::artillery) return 1.25;
  if (attacker == UnitKind::armor && defender == UnitKind::infantry) return 1.5;
  if (attacker == UnitKind::infantry && defender == UnitKind::armor) return 0.75;
  return 1.0;
}

double terrain_defense(Terrain t) {
  switch (t) {
    case Terrain::clear: return 1.0;
    case Terrain::rough: return 0.75;
    case Terrain::urban: return 0.5;
    case Terrain::water: break;
  }
  throw RuleError("no unit can be attacked on water");
}

int attack_range(UnitKind k) { return k == UnitKind::artillery ? 2 : 1; }

}  // namespace rules

const Unit* GameState::find(int unit_id) const {
  return find_mut(const_cast<GameState&>(*this), unit_id);
}

const Unit* GameState::unit_at(HexCoord h) const {
  for (const Unit& u : units) {
    if (u.pos == h) return &u;
  }
  return nullptr;
}

double GameState::total_strength(Faction f) const {
  double total = 0.0;
  for (const Unit& u : units) {
    if (u.faction == f) total += u.strength;
  }
  return total;
}

int GameState::count(Faction f) const {
  return static_cast<int>(
      std::count_if(units.begin(), units.end(), [f](const Unit& u) { return u.faction == f; }));
}

GameState generate_scenario(const ScenarioParams& p, std::uint64_t seed) {
  if (p.width < 2 || p.height < 2) throw GenerationError("board must be at least 2x2");
  if (p.blue_min < 0 || p.red_min < 0 || p.blue_min > p.blue_max || p.red_min > p.red_max) {
    throw GenerationError("unit count ranges must satisfy 0 <= min <= max");
  }
  if (p.cities < 0) throw GenerationError("city count must be >= 0");
  if (p.max_phases < 1) throw GenerationError("max_phases must be >= 1");
  if (p.width * p.height < p.blue_max + p.red_max + p.cities) {
    throw GenerationError("board has fewer hexes than units plus cities");
  }
  const double mix_total = p.mix.clear + p.mix.rough + p.mix.water;
  if (!(mix_total > 0.0) || p.mix.clear < 0 || p.mix.rough < 0 || p.mix.water < 0) {
    throw GenerationError("terrain mix weights must be non-negative with a positive sum");
  }

  Rng rng(seed);
  const int n_blue = uniform_int(rng, p.blue_min, p.blue_max);
  const int n_red = uniform_int(rng, p.red_min, p.red_max);
  const int zone = std::max(1, p.width / 3);

  constexpr int kAttempts = 64;
  std::string failure;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    GameState s;
    s.board = Board(p.width, p.height);
    for (int i = 0; i < s.board.size(); ++i) {
      const double u = uniform_unit(rng) * mix_total;
      Terrain t = Terrain::water;
      if (u < p.mix.clear) {
        t = Terrain::clear;
      } else if (u < p.mix.clear + p.mix.rough) {
        t = Terrain::rough;
      }
      s.board.set(s.board.coord(i), t);
    }
    std::vector<int> order(s.board.size());
    std::iota(order.begin(), order.end(), 0);
    for (int i = 0; i < p.cities; ++i) {
      const int j = i + static_cast<int>(uniform_index(rng, order.size() - i));
      std::swap(order[i], order[j]);
      s.board.set(s.board.coord(order[i]), Terrain::urban);
    }

    auto zone_hexes = [&](int col_lo, int col_hi) {
      std::vector<HexCoord> out;
      for (int row = 0; row < p.height; ++row) {
        for (int col = col_lo; col < col_hi; ++col) {
          if (s.board.passable({col, row})) out.push_back({col, row});
        }
      }
      return out;
    };
    auto blue_zone = zone_hexes(0, zone);
    auto red_zone = zone_hexes(p.width - zone, p.width);
    if (static_cast<int>(blue_zone.size()) < n_blue) {
      failure = "blue deployment zone has too few passable hexes";
      continue;
    }
    if (static_cast<int>(red_zone.size()) < n_red) {
      failure = "red deployment zone has too few passable hexes";
      continue;
    }

    int next_id = 0;
    auto place = [&](std::vector<HexCoord>& pool, int n, Faction f) {
      for (int i = 0; i < n; ++i) {
        const int j = i + static_cast<int>(uniform_index(rng, pool.size() - i));
        std::swap(pool[i], pool[j]);
        Unit u;
        u.id = next_id++;
        u.faction = f;
        u.kind = static_cast<UnitKind>(uniform_index(rng, 3));
        u.pos = pool[i];
        s.units.push_back(u);
      }
    };
    place(blue_zone, n_blue, Faction::blue);
    // Zones overlap on very narrow boards.
    std::erase_if(red_zone, [&](HexCoord h) { return s.unit_at(h) != nullptr; });
    if (static_cast<int>(red_zone.size()) < n_red) {
      failure = "red deployment zone has too few free passable hexes";
      continue;
    }
    place(red_zone, n_red, Faction::red);

    s.phase = 1;
    s.max_phases = p.max_phases;
    s.on_move = Faction::blue;
    s.score = 0.0;
    s.seed = seed;
    s.initial_blue = n_blue;
    s.initial_red = n_red;
    settle_cursor(s);
    return s;
  }
  throw GenerationError("scenario generation failed after " + std::to_string(kAttempts) +
                        " attempts: " + failure);
}

std::vector<Action> legal_actions(const GameState& s, int unit_id) {
  check_turn(s, unit_id);
  const Unit& u = *s.find(unit_id);
  std::vector<Action> out{Action::pass()};
  for (const HexCoord n : neighbors(u.pos, s.board)) {
    if (s.board.passable(n) && s.unit_at(n) == nullptr) out.push_back(Action::move(n));
  }
  const int range = rules::attack_range(u.kind);
  for (const Unit& e : s.units) {
    if (e.faction != u.faction && distance(u.pos, e.pos) <= range) {
      out.push_back(Action::attack(e.pos));
    }
  }
  return out;
}

double resolve_combat(const Unit& attacker, const Unit& defender, Terrain defender_terrain) {
  const int range = rules::attack_range(attacker.kind);
  const int d = distance(attacker.pos, defender.pos);
  if (d > range || d == 0) {
    throw RuleError("target at distance " + std::to_string(d) + " is outside range " +
                    std::to_string(range));
  }
  return attacker.strength * rules::kBaseRate *
         rules::type_multiplier(attacker.kind, defender.kind) *
         rules::terrain_defense(defender_terrain);
}

Transition apply_action(const GameState& s, int unit_id, const Action& a) {
  check_turn(s, unit_id);
  Transition t{s, {}};
  GameState& next = t.state;
  Unit& u = *find_mut(next, unit_id);

  switch (a.kind) {
    case ActionKind::pass:
      break;
    case ActionKind::move: {
      if (!next.board.contains(a.target)) {
        throw RuleError("move target " + describe(a.target) + " is off the board");
      }
      if (distance(u.pos, a.target) != 1) {
        throw RuleError("move target " + describe(a.target) + " is not adjacent");
      }
      if (!next.board.passable(a.target)) {
        throw RuleError("move target " + describe(a.target) + " is impassable");
      }
      if (next.unit_at(a.target) != nullptr) {
        throw RuleError("move target " + describe(a.target) + " is occupied");
      }
      u.pos = a.target;
      break;
    }
    case ActionKind::attack: {
      const Unit* target = next.unit_at(a.target);
      if (target == nullptr) throw RuleError("attack target " + describe(a.target) + " is empty");
      if (target->faction == u.faction) {
        throw RuleError("attack target " + describe(a.target) + " is friendly");
      }
      const double damage = resolve_combat(u, *target, next.board.at(a.target));
      Unit& defender = *find_mut(next, target->id);
      const double destroyed = std::min(damage, defender.strength);
      defender.strength -= destroyed;
      if (destroyed > 0.0) {
        t.events.push_back({next.phase,
                            u.faction == Faction::blue ? ScoreKind::kill : ScoreKind::loss,
                            destroyed});
      }
      if (defender.strength <= 0.0) {
        const int dead = defender.id;
        std::erase_if(next.units, [dead](const Unit& x) { return x.id == dead; });
      }
      break;
    }
  }

  Unit& mover = *find_mut(next, unit_id);
  mover.acted = true;
  next.score += sum_signed(t.events);
  settle_cursor(next);
  return t;
}

Transition advance_phase(const GameState& s) {
  if (s.cursor) {
    throw SequencingError("phase " + std::to_string(s.phase) + " still has unit " +
                          std::to_string(*s.cursor) + " to act");
  }
  if (is_terminal(s)) throw SequencingError("game is over");
  Transition t{s, {}};
  GameState& next = t.state;
  for (int i = 0; i < next.board.size(); ++i) {
    const HexCoord h = next.board.coord(i);
    if (next.board.at(h) != Terrain::urban) continue;
    const Unit* holder = next.unit_at(h);
    if (holder != nullptr && holder->faction == Faction::blue) {
      t.events.push_back({next.phase, ScoreKind::urban_hold, rules::kCityPoints});
    }
  }
  for (Unit& u : next.units) u.acted = false;
  next.score += sum_signed(t.events);
  next.phase += 1;
  next.on_move = Faction::blue;
  if (next.phase <= next.max_phases) {
    settle_cursor(next);
  } else {
    next.cursor.reset();
  }
  return t;
}

bool is_terminal(const GameState& s) {
  if (s.phase > s.max_phases) return true;
  const int blue = s.count(Faction::blue);
  const int red = s.count(Faction::red);
  if (blue == 0 && red == 0) return true;
  // A side that started empty (e.g. an objective-only drill) cannot be eliminated.
  return (s.initial_blue > 0 && blue == 0) || (s.initial_red > 0 && red == 0);
}

// --- JSON -----------------------------------------------------------------

using nlohmann::json;

json to_json(HexCoord h) { return json{{"col", h.col}, {"row", h.row}}; }

HexCoord hex_from_json(const json& j) {
  return {j.at("col").get<int>(), j.at("row").get<int>()};
}

json to_json(const Action& a) {
  json j{{"kind", to_string(a.kind)}};
  if (a.kind != ActionKind::pass) j["target"] = to_json(a.target);
  return j;
}

Action action_from_json(const json& j) {
  Action a;
  a.kind = action_kind_from_string(j.at("kind").get<std::string>());
  if (a.kind != ActionKind::pass) a.target = hex_from_json(j.at("target"));
  return a;
}

json to_json(const ScoreEvent& e) {
  return json{{"phase", e.phase}, {"kind", to_string(e.kind)}, {"amount", e.amount}};
}

ScoreEvent score_event_from_json(const json& j) {
  return {j.at("phase").get<int>(), score_kind_from_string(j.at("kind").get<std::string>()),
          j.at("amount").get<double>()};
}

json to_json(const std::vector<ScoreEvent>& events) {
  json arr = json::array();
  for (const auto& e : events) arr.push_back(to_json(e));
  return arr;
}

std::vector<ScoreEvent> score_events_from_json(const json& j) {
  std::vector<ScoreEvent> out;
  for (const auto& e : j) out.push_back(score_event_from_json(e));
  return out;
}

namespace {

json units_to_json(const std::vector<Unit>& units, bool with_flags) {
  json arr = json::array();
  for (const Unit& u : units) {
    json ju{{"id", u.id},
            {"faction", to_string(u.faction)},
            {"kind", to_string(u.kind)},
            {"strength", u.strength},
            {"pos", to_json(u.pos)}};
    if (with_flags) ju["acted"] = u.acted;
    arr.push_back(std::move(ju));
  }
  return arr;
}

std::vector<Unit> units_from_json(const json& arr, const Board& board) {
  std::vector<Unit> units;
  for (const auto& ju : arr) {
    Unit u;
    u.id = ju.at("id").get<int>();
    u.faction = faction_from_string(ju.at("faction").get<std::string>());
    u.kind = unit_kind_from_string(ju.at("kind").get<std::string>());
    u.strength = ju.at("strength").get<double>();
    u.pos = hex_from_json(ju.at("pos"));
    u.acted = ju.value("acted", false);
    if (!(u.strength > 0.0 && u.strength <= rules::kMaxStrength)) {
      throw FormatError("unit " + std::to_string(u.id) + " has invalid strength");
    }
    if (!board.passable(u.pos)) {
      throw FormatError("unit " + std::to_string(u.id) + " placed on impassable or off-board hex");
    }
    units.push_back(u);
  }
  std::sort(units.begin(), units.end(), [](const Unit& a, const Unit& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < units.size(); ++i) {
    for (std::size_t k = i + 1; k < units.size(); ++k) {
      if (units[i].id == units[k].id) throw FormatError("duplicate unit id");
      if (units[i].pos == units[k].pos) throw FormatError("two units share a hex");
    }
  }
  return units;
}

json terrain_rle(const Board& b) {
  json runs = json::array();
  const auto& t = b.terrain();
  std::size_t i = 0;
  while (i < t.size()) {
    std::size_t k = i;
    while (k < t.size() && t[k] == t[i]) ++k;
    runs.push_back(json::array({to_string(t[i]), k - i}));
    i = k;
  }
  return runs;
}

Board board_from_json(const json& j) {
  Board b(j.at("width").get<int>(), j.at("height").get<int>());
  int i = 0;
  for (const auto& run : j.at("terrain")) {
    const Terrain t = terrain_from_string(run.at(0).get<std::string>());
    const int n = run.at(1).get<int>();
    for (int k = 0; k < n; ++k, ++i) {
      if (i >= b.size()) throw FormatError("terrain runs exceed board size");
      b.set(b.coord(i), t);
    }
  }
  if (i != b.size()) throw FormatError("terrain runs do not cover the board");
  return b;
}

}  // namespace

json scenario_to_json(const GameState& s) {
  return json{{"width", s.board.width()},
              {"height", s.board.height()},
              {"terrain", terrain_rle(s.board)},
              {"units", units_to_json(s.units, false)},
              {"max_phases", s.max_phases},
              {"seed", s.seed}};
}

GameState scenario_from_json(const json& j) {
  GameState s;
  s.board = board_from_json(j);
  s.units = units_from_json(j.at("units"), s.board);
  for (Unit& u : s.units) u.acted = false;
  s.max_phases = j.at("max_phases").get<int>();
  if (s.max_phases < 1) throw FormatError("max_phases must be >= 1");
  s.seed = j.value("seed", std::uint64_t{0});
  s.initial_blue = s.count(Faction::blue);
  s.initial_red = s.count(Faction::red);
  settle_cursor(s);
  return s;
}

json to_json(const GameState& s) {
  json j = scenario_to_json(s);
  j["units"] = units_to_json(s.units, true);
  j["phase"] = s.phase;
  j["on_move"] = to_string(s.on_move);
  j["cursor"] = s.cursor ? json(*s.cursor) : json(nullptr);
  j["score"] = s.score;
  j["initial_blue"] = s.initial_blue;
  j["initial_red"] = s.initial_red;
  return j;
}

GameState state_from_json(const json& j) {
  GameState s;
  s.board = board_from_json(j);
  s.units = units_from_json(j.at("units"), s.board);
  s.max_phases = j.at("max_phases").get<int>();
  s.seed = j.value("seed", std::uint64_t{0});
  s.phase = j.at("phase").get<int>();
  s.on_move = faction_from_string(j.at("on_move").get<std::string>());
  if (!j.at("cursor").is_null()) s.cursor = j.at("cursor").get<int>();
  s.score = j.at("score").get<double>();
  s.initial_blue = j.at("initial_blue").get<int>();
  s.initial_red = j.at("initial_red").get<int>();
  return s;
}

json to_json(const ScenarioParams& p) {
  return json{{"width", p.width},
              {"height", p.height},
              {"blue_min", p.blue_min},
              {"blue_max", p.blue_max},
              {"red_min", p.red_min},
              {"red_max", p.red_max},
              {"cities", p.cities},
              {"max_phases", p.max_phases},
              {"mix", {{"clear", p.mix.clear}, {"rough", p.mix.rough}, {"water", p.mix.water}}}};
}

ScenarioParams scenario_params_from_json(const json& j, ScenarioParams p) {
  p.width = j.value("width", p.width);
  p.height = j.value("height", p.height);
  if (j.contains("n_blue")) p.blue_min = p.blue_max = j["n_blue"].get<int>();
  if (j.contains("n_red")) p.red_min = p.red_max = j["n_red"].get<int>();
  p.blue_min = j.value("blue_min", p.blue_min);
  p.blue_max = j.value("blue_max", p.blue_max);
  p.red_min = j.value("red_min", p.red_min);
  p.red_max = j.value("red_max", p.red_max);
  p.cities = j.value("cities", j.value("n_cities", p.cities));
  p.max_phases = j.value("max_phases", p.max_phases);
  if (j.contains("mix")) {
    const auto& m = j["mix"];
    p.mix.clear = m.value("clear", p.mix.clear);
    p.mix.rough = m.value("rough", p.mix.rough);
    p.mix.water = m.value("water", p.mix.water);
  }
  return p;
}

}  // namespace hexwar
