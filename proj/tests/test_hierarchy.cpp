#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>

#include "hexwar/error.hpp"
#include "hexwar/hierarchy.hpp"
#include "hexwar/scripted.hpp"
#include "test_util.hpp"

namespace hexwar {
namespace {

using testing::fuzzed_state;
using testing::make_state;
using testing::unit;

namespace fs = std::filesystem;

constexpr int kUrban = channel::kTerrain + static_cast<int>(Terrain::urban);

HierarchySpec scripted_three_level() {
  HierarchySpec h;
  h.commander = CommanderPolicy{};
  h.manager = ManagerPolicy{};
  return h;
}

HierarchySpec learned_three_level(std::uint64_t seed) {
  HierarchySpec h;
  h.commander = CommanderPolicy{PolicyKind::learned, MlpD::xavier({kCommanderInputs, 8, kCommanderActions}, seed)};
  h.manager = ManagerPolicy{PolicyKind::learned, MlpD::xavier({kManagerInputs, 8, kManagerActions}, seed + 1)};
  h.op.kind = OperatorKind::learned;
  h.op.net = MlpD::xavier({kOperatorInputs, 8, kActionSlots}, seed + 2);
  return h;
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// --- commander ------------------------------------------------------------------

TEST(Commander, NoUrbanMassTiesToCellZero) {
  const ObsTensor t(channel::kCount, 5, 5);
  const Subgoal g = commander_decide(CommanderPolicy{}, t);
  EXPECT_EQ(g.target_cell, 0);
  EXPECT_EQ(g.posture, Posture::offensive);
  EXPECT_EQ(g.termination.max_phases, 5);
}

TEST(Commander, ScriptedRuleFollowsUrbanMassAndStrength) {
  ObsTensor t(channel::kCount, 5, 5);
  t(kUrban, 2, 2) = 1.0;
  t.channel(channel::kBlueTotal).setConstant(0.5);
  t.channel(channel::kRedTotal).setConstant(0.5);
  Subgoal g = commander_decide(CommanderPolicy{}, t);
  EXPECT_EQ(g.posture, Posture::offensive);
  EXPECT_EQ(g.target_cell, 12);
  t.channel(channel::kRedTotal).setConstant(0.6);
  g = commander_decide(CommanderPolicy{}, t);
  EXPECT_EQ(g.posture, Posture::defensive);
  EXPECT_EQ(g.target_cell, 12);
}

TEST(Commander, LearnedDecodesSlot) {
  CommanderPolicy p{PolicyKind::learned, MlpD({kCommanderInputs, kCommanderActions})};
  p.net.bias(0)[37] = 1.0;
  const Subgoal g = commander_decide(p, ObsTensor(channel::kCount, 5, 5));
  EXPECT_EQ(g.posture, Posture::defensive);
  EXPECT_EQ(g.target_cell, 12);
  // All-equal logits pick slot 0.
  p.net.bias(0).setZero();
  EXPECT_EQ(commander_decide(p, ObsTensor(channel::kCount, 5, 5)), decode_commander_action(0, p));
}

TEST(Commander, WrongShapeIsCompatibilityError) {
  EXPECT_THROW(commander_decide(CommanderPolicy{}, ObsTensor(channel::kCount, 7, 7)), CompatibilityError);
  EXPECT_THROW(commander_decide(CommanderPolicy{}, ObsTensor(3, 5, 5)), CompatibilityError);
}

TEST(Commander, ObservationOfScenarioTargetsTheCity) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto s = generate_scenario({}, seed);
    const ObsTensor t = commander_observation(s);
    EXPECT_EQ(t.channel(channel::kOnMove).sum(), 0.0);
    const Subgoal g = commander_decide(CommanderPolicy{}, t);
    HexCoord city;
    for (int i = 0; i < s.board.size(); ++i) {
      if (s.board.at(s.board.coord(i)) == Terrain::urban) city = s.board.coord(i);
    }
    EXPECT_TRUE(cell_block(s.board, 5, g.target_cell).contains(city)) << "seed " << seed;
  }
}

// --- manager ------------------------------------------------------------------------

TEST(Manager, OffensiveSingleUnitSeizesInsideTheBlock) {
  const auto s = make_state(10, 10, {unit(0, Faction::blue, UnitKind::infantry, {0, 0})});
  for (int cell = 0; cell < 25; ++cell) {
    const auto tasks = manager_decide(ManagerPolicy{}, s, {Posture::offensive, cell, {}});
    ASSERT_EQ(tasks.size(), 1u);
    EXPECT_EQ(tasks[0].unit_id, 0);
    EXPECT_EQ(tasks[0].task, TaskKind::seize);
    EXPECT_TRUE(cell_block(s.board, 5, cell).contains(tasks[0].objective));
  }
}

TEST(Manager, DefensiveHoldsTheCity) {
  auto s = make_state(10, 10, {unit(0, Faction::blue, UnitKind::infantry, {1, 1}),
                               unit(1, Faction::blue, UnitKind::armor, {6, 6}),
                               unit(2, Faction::red, UnitKind::armor, {9, 9})});
  s.board.set({7, 7}, Terrain::urban);
  const auto tasks = manager_decide(ManagerPolicy{}, s, {Posture::defensive, 18, {}});
  ASSERT_EQ(tasks.size(), 2u);
  int holds = 0;
  for (const auto& t : tasks) {
    if (t.task == TaskKind::hold) {
      ++holds;
      EXPECT_EQ(t.objective, (HexCoord{7, 7}));
      EXPECT_EQ(t.unit_id, 1);  // nearest to the city
    } else {
      EXPECT_EQ(t.task, TaskKind::screen);
    }
  }
  EXPECT_EQ(holds, 1);
}

TEST(Manager, TasksAreBijectiveOnLivingBlueUnits) {
  const ManagerPolicy learned{PolicyKind::learned, MlpD::xavier({kManagerInputs, 8, kManagerActions}, 4)};
  const ManagerPolicy scripted;
  Rng rng(5);
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const auto s = fuzzed_state({}, seed);
    if (s.count(Faction::blue) == 0) continue;
    const Subgoal g{static_cast<Posture>(uniform_int(rng, 0, 1)), uniform_int(rng, 0, 24), {}};
    for (const ManagerPolicy* p : {&learned, &scripted}) {
      const auto tasks = manager_decide(*p, s, g);
      std::set<int> ids;
      for (const auto& t : tasks) {
        const Unit* u = s.find(t.unit_id);
        ASSERT_NE(u, nullptr);
        EXPECT_EQ(u->faction, Faction::blue);
        EXPECT_TRUE(s.board.passable(t.objective));
        ids.insert(t.unit_id);
      }
      EXPECT_EQ(ids.size(), tasks.size());
      EXPECT_EQ(static_cast<int>(tasks.size()), s.count(Faction::blue));
    }
  }
}

TEST(Manager, NoBlueUnitsIsPreconditionError) {
  const auto s = make_state(10, 10, {unit(0, Faction::red, UnitKind::infantry, {3, 3})});
  EXPECT_THROW(manager_decide(ManagerPolicy{}, s, Subgoal{}), PreconditionError);
}

TEST(Manager, LearnedViewNeedsSevenBySeven) {
  const auto s = make_state(5, 5, {unit(0, Faction::blue, UnitKind::infantry, {0, 0})});
  const ManagerPolicy learned{PolicyKind::learned, MlpD::xavier({kManagerInputs, 8, kManagerActions}, 4)};
  EXPECT_THROW(manager_decide(learned, s, Subgoal{}), CompatibilityError);
  EXPECT_NO_THROW(manager_decide(ManagerPolicy{}, s, Subgoal{}));
}

// --- operator ------------------------------------------------------------------------

TEST(Operator, HoldOnObjectiveWithoutEnemiesPasses) {
  const auto s = make_state(8, 8, {unit(0, Faction::blue, UnitKind::infantry, {3, 3}),
                                   unit(1, Faction::red, UnitKind::infantry, {6, 6})});
  EXPECT_EQ(operator_act(OperatorPolicy{}, s, 0, {0, {3, 3}, TaskKind::hold}).action, Action::pass());
}

TEST(Operator, HoldAttacksAdjacentEnemy) {
  const auto s = make_state(8, 8, {unit(0, Faction::blue, UnitKind::infantry, {3, 3}),
                                   unit(1, Faction::red, UnitKind::infantry, {3, 4})});
  EXPECT_EQ(operator_act(OperatorPolicy{}, s, 0, {0, {3, 3}, TaskKind::hold}).action, Action::attack({3, 4}));
}

TEST(Operator, SeizeApproachesMonotonically) {
  for (HexCoord goal : {HexCoord{9, 9}, HexCoord{0, 9}, HexCoord{9, 0}, HexCoord{5, 0}}) {
    GameState s = make_state(10, 10, {unit(0, Faction::blue, UnitKind::armor, {2, 4})}, 30);
    const UnitTask task{0, goal, TaskKind::seize};
    int d = distance(s.find(0)->pos, goal);
    while (d > 0) {
      const Action a = operator_act(OperatorPolicy{}, s, 0, task).action;
      s = apply_action(s, 0, a).state;
      s = advance_phase(s).state;
      const int next = distance(s.find(0)->pos, goal);
      ASSERT_LT(next, d);
      d = next;
    }
  }
}

TEST(Operator, ScreenKeepsDistanceNearObjective) {
  const auto s = make_state(10, 10, {unit(0, Faction::blue, UnitKind::infantry, {4, 4}),
                                     unit(1, Faction::red, UnitKind::infantry, {5, 4})});
  const Action a = operator_act(OperatorPolicy{}, s, 0, {0, {3, 4}, TaskKind::screen}).action;
  ASSERT_EQ(a.kind, ActionKind::move);
  EXPECT_GE(distance(a.target, {5, 4}), 2);
  EXPECT_LE(distance(a.target, {3, 4}), 3);
}

TEST(Operator, MismatchedTaskIsPreconditionError) {
  const auto s = make_state(8, 8, {unit(0, Faction::blue, UnitKind::infantry, {3, 3}),
                                   unit(1, Faction::blue, UnitKind::infantry, {4, 4})});
  EXPECT_THROW(operator_act(OperatorPolicy{}, s, 0, {1, {3, 3}, TaskKind::hold}), PreconditionError);
  EXPECT_THROW(operator_act(OperatorPolicy{}, s, 1, {1, {3, 3}, TaskKind::hold}), PreconditionError);
}

TEST(Operator, LegalOnFuzzedStateTaskPairs) {
  OperatorPolicy learned;
  learned.kind = OperatorKind::learned;
  learned.net = MlpD::xavier({kOperatorInputs, 8, kActionSlots}, 6);
  const OperatorPolicy& learned_ref = learned;
  const OperatorPolicy scripted;
  Rng rng(7);
  int checked = 0;
  for (std::uint64_t seed = 0; checked < 10000; ++seed) {
    const auto s = fuzzed_state({}, seed);
    const int id = *s.cursor;
    for (int k = 0; k < 5; ++k) {
      HexCoord obj;
      do {
        obj = {uniform_int(rng, 0, s.board.width() - 1), uniform_int(rng, 0, s.board.height() - 1)};
      } while (!s.board.passable(obj));
      const UnitTask t{id, obj, static_cast<TaskKind>(uniform_int(rng, 0, 2))};
      const auto legal = legal_actions(s, id);
      for (const OperatorPolicy* p : {&learned_ref, &scripted}) {
        const Action a = operator_act(*p, s, id, t).action;
        ASSERT_NE(std::find(legal.begin(), legal.end(), a), legal.end()) << "seed " << seed;
      }
      ++checked;
    }
  }
}

TEST(Operator, InputEncodesTask) {
  const auto s = make_state(10, 10, {unit(0, Faction::blue, UnitKind::infantry, {2, 2})});
  const auto x = operator_input(s, 0, {0, {2, 6}, TaskKind::screen}, {});
  ASSERT_EQ(x.size(), kOperatorInputs);
  const Eigen::Index base = kOperatorInputs - 6;
  EXPECT_EQ(x.segment(base, 3), Eigen::Vector3d(0, 0, 1));
  EXPECT_NEAR(x[base + 3], 0.0, 1e-12);  // due south
  EXPECT_NEAR(x[base + 4], 1.0, 1e-12);
  EXPECT_NEAR(x[base + 5], 4.0 / 20.0, 1e-12);
}

// --- agent -----------------------------------------------------------------------------

struct Audited {
  GameState state;
  nlohmann::json audit;
};

std::vector<Audited> play_audited(HierarchyAgent& blue, const GameState& start, std::uint64_t seed) {
  auto red = BehaviorAgent(scripted_behavior("baseline"));
  blue.reset(seed);
  std::vector<Audited> log;
  run_match(start, blue, red, [&](const StepInfo& i) {
    if (i.faction == Faction::blue) log.push_back({i.before, i.decision.audit});
  });
  return log;
}

TEST(Hierarchy, SpecValidation) {
  HierarchySpec h;
  h.commander = CommanderPolicy{};
  EXPECT_THROW(h.validate(), ConfigError);
  h = scripted_three_level();
  h.commander->trainable = true;
  h.op.trainable = true;
  EXPECT_THROW(HierarchyAgent{h}, ConfigError);
  h.op.trainable = false;
  EXPECT_NO_THROW(HierarchyAgent{h});
  h.commander->period = 0;
  EXPECT_THROW(HierarchyAgent{h}, ConfigError);
  h = scripted_three_level();
  h.op.kind = OperatorKind::learned;
  h.op.net = MlpD({10, 13});
  EXPECT_THROW(HierarchyAgent{h}, ConfigError);
  EXPECT_EQ(scripted_three_level().levels(), 3);
  EXPECT_EQ(HierarchySpec{}.levels(), 1);
}

TEST(Hierarchy, CadenceFromAudits) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    HierarchyAgent blue(seed % 2 ? scripted_three_level() : learned_three_level(seed));
    const auto log = play_audited(blue, generate_scenario({}, seed), seed);
    std::map<int, int> manager_per_phase, steps_per_phase;
    int last_issue = 0;
    for (std::size_t i = 0; i < log.size(); ++i) {
      const auto& a = log[i].audit;
      const int phase = a.at("phase").get<int>();
      ASSERT_EQ(phase, log[i].state.phase);
      const bool first_of_phase = i == 0 || log[i - 1].state.phase != phase;
      ++steps_per_phase[phase];
      ASSERT_TRUE(a.contains("task"));
      if (a.contains("manager")) {
        EXPECT_TRUE(first_of_phase);
        ++manager_per_phase[phase];
        EXPECT_EQ(a["manager"].size(), static_cast<std::size_t>(log[i].state.count(Faction::blue)));
      }
      if (a.contains("commander")) {
        EXPECT_TRUE(first_of_phase);
        const std::string reason = a["commander"]["reason"];
        if (reason == "start") {
          EXPECT_EQ(phase, 1);
        } else {
          EXPECT_TRUE(reason == "termination" || reason == "period");
          EXPECT_TRUE((phase - 1) % 5 == 0 || phase - last_issue >= 5) << "phase " << phase;
        }
        last_issue = phase;
      } else if (first_of_phase) {
        EXPECT_LT(phase - last_issue, 5);
        EXPECT_NE((phase - 1) % 5, 0);
      }
    }
    for (const auto& [phase, n] : steps_per_phase) EXPECT_EQ(manager_per_phase[phase], 1) << "phase " << phase;
  }
}

TEST(Hierarchy, OccupancyTerminationFiresFirst) {
  // Blue stands in the city cell from the start, so the subgoal expires at once.
  HierarchySpec h = scripted_three_level();
  h.commander->stop_on_occupied = true;
  auto s = make_state(10, 10, {unit(0, Faction::blue, UnitKind::infantry, {5, 5}),
                               unit(1, Faction::red, UnitKind::infantry, {9, 0})});
  s.board.set({5, 5}, Terrain::urban);
  HierarchyAgent blue(h);
  const auto log = play_audited(blue, s, 1);
  int terminations = 0;
  for (const auto& e : log) {
    if (!e.audit.contains("commander")) continue;
    if (e.audit["commander"]["reason"] == "termination") ++terminations;
    EXPECT_NE(e.audit["commander"]["reason"], "period");
  }
  EXPECT_GE(terminations, 1);
}

TEST(Hierarchy, EveryActionIsLegal) {
  // run_match rejects illegal decisions with LegalityError.
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    HierarchyAgent blue(seed % 2 ? scripted_three_level() : learned_three_level(seed));
    ScenarioParams p;
    p.width = 10 + static_cast<int>(seed % 3) * 5;
    p.height = 10 + static_cast<int>(seed % 2) * 7;
    EXPECT_NO_THROW(play_audited(blue, generate_scenario(p, seed), seed));
  }
}

TEST(Hierarchy, OneLevelCollapsesToTheOperator) {
  HierarchySpec h;
  h.op.kind = OperatorKind::behavior;
  h.op.behavior = scripted_behavior("greedy_attack");
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    HierarchyAgent hier(h);
    BehaviorAgent bare(scripted_behavior("greedy_attack"));
    BehaviorAgent red(scripted_behavior("baseline"));
    std::vector<std::pair<Action, nlohmann::json>> a, b;
    const auto start = generate_scenario({}, seed);
    const GameState ea = run_match(start, hier, red, [&](const StepInfo& i) {
      a.emplace_back(i.decision.action, i.decision.audit);
    });
    const GameState eb = run_match(start, bare, red, [&](const StepInfo& i) {
      b.emplace_back(i.decision.action, i.decision.audit);
    });
    EXPECT_EQ(ea, eb);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].first, b[i].first);
      EXPECT_EQ(a[i].second, b[i].second);
    }
  }
}

// --- training ---------------------------------------------------------------------------

LevelTraining quick_training(long budget) {
  LevelTraining cfg;
  cfg.budget = budget;
  cfg.learner.hidden = {8};
  cfg.learner.warmup = 10;
  cfg.learner.sgd.batch_size = 4;
  return cfg;
}

TEST(TrainLevel, ZeroBudgetLeavesTheAgentUnchanged) {
  const HierarchySpec h = learned_three_level(3);
  BehaviorAgent red(scripted_behavior("baseline"));
  for (Level l : {Level::commander, Level::manager, Level::op}) {
    const HierarchySpec out = train_level(h, l, {}, red, quick_training(0));
    EXPECT_EQ(out.commander->net, h.commander->net);
    EXPECT_EQ(out.manager->net, h.manager->net);
    EXPECT_EQ(out.op.net, h.op.net);
  }
  const HierarchySpec s = train_level(scripted_three_level(), Level::op, {}, red, quick_training(0));
  EXPECT_EQ(s.op.kind, OperatorKind::scripted);
}

TEST(TrainLevel, AnotherTrainableLevelIsConfigError) {
  HierarchySpec h = learned_three_level(3);
  h.manager->trainable = true;
  BehaviorAgent red(scripted_behavior("baseline"));
  EXPECT_THROW(train_level(h, Level::op, {}, red, quick_training(10)), ConfigError);
  EXPECT_THROW(train_level(h, Level::commander, {}, red, quick_training(0)), ConfigError);
  EXPECT_NO_THROW(train_level(h, Level::manager, {}, red, quick_training(10)));
  EXPECT_THROW(train_level(HierarchySpec{}, Level::manager, {}, red, quick_training(10)), ConfigError);
}

TEST(TrainLevel, FreezeContractOnWeightFiles) {
  const HierarchySpec h = learned_three_level(8);
  BehaviorAgent red(scripted_behavior("baseline"));
  const fs::path base = fs::temp_directory_path() / "hexwar_freeze";
  fs::remove_all(base);
  save_hierarchy(h, base / "before");
  const std::map<Level, std::string> files{
      {Level::commander, "commander.bin"}, {Level::manager, "manager.bin"}, {Level::op, "operator.bin"}};
  for (Level l : {Level::commander, Level::manager, Level::op}) {
    const long budget = l == Level::commander ? 30 : 200;
    const HierarchySpec out = train_level(h, l, {}, red, quick_training(budget));
    const fs::path dir = base / std::string(to_string(l));
    save_hierarchy(out, dir);
    for (const auto& [level, file] : files) {
      const bool same = file_bytes(base / "before" / file) == file_bytes(dir / file);
      EXPECT_EQ(same, level != l) << to_string(l) << " training, " << file;
    }
  }
  fs::remove_all(base);
}

TEST(TrainLevel, ShaperIsTheRewardHook) {
  int calls = 0;
  LevelTraining cfg = quick_training(100);
  cfg.shaper = [&](Level l, const StepInfo&, double r) {
    EXPECT_EQ(l, Level::op);
    ++calls;
    return r;
  };
  BehaviorAgent red(scripted_behavior("baseline"));
  train_level(scripted_three_level(), Level::op, {}, red, cfg);
  EXPECT_GT(calls, 0);
}

TEST(TrainLevel, OperatorBeatsRandomOnReachTheCity) {
  DqnEnvParams env;
  env.scenario.width = env.scenario.height = 5;
  env.scenario.blue_min = env.scenario.blue_max = 1;
  env.scenario.red_min = env.scenario.red_max = 0;
  env.scenario.max_phases = 10;
  LevelTraining cfg;
  cfg.budget = 8000;
  cfg.epsilon.decay_steps = 4000;
  cfg.learner.hidden = {32};
  cfg.learner.warmup = 200;
  cfg.learner.target_sync = 200;
  BehaviorAgent red(scripted_behavior("pass_only"));
  const HierarchySpec trained = train_level(scripted_three_level(), Level::op, env, red, cfg);
  ASSERT_EQ(trained.op.kind, OperatorKind::learned);

  HierarchyAgent learned(trained);
  RandomAgent random;
  double learned_mean = 0.0, random_mean = 0.0;
  const int games = 100;
  for (int g = 0; g < games; ++g) {
    const auto start = generate_scenario(env.scenario, 90000 + g);
    learned.reset(g);
    random.reset(g);
    learned_mean += run_match(start, learned, red).score / games;
    random_mean += run_match(start, random, red).score / games;
  }
  EXPECT_GT(learned_mean, random_mean);
}

// --- bundle -----------------------------------------------------------------------------

TEST(HierarchyBundle, RoundTrip) {
  const fs::path dir = fs::temp_directory_path() / "hexwar_hier_bundle";
  fs::remove_all(dir);
  HierarchySpec h = learned_three_level(21);
  h.commander->period = 3;
  h.commander->objective = Objective::hold_urban;
  save_hierarchy(h, dir);
  const HierarchySpec back = load_hierarchy(dir);
  EXPECT_EQ(back.commander->net, h.commander->net);
  EXPECT_EQ(back.commander->period, 3);
  EXPECT_EQ(back.commander->objective, Objective::hold_urban);
  EXPECT_EQ(back.manager->net, h.manager->net);
  EXPECT_EQ(back.op.net, h.op.net);

  HierarchySpec b;
  b.op.kind = OperatorKind::behavior;
  b.op.behavior = scripted_behavior("withdraw");
  b.op.source = {{"kind", "scripted"}, {"name", "withdraw"}};
  save_hierarchy(b, dir / "behavior");
  const HierarchySpec bb = load_hierarchy(dir / "behavior");
  EXPECT_EQ(bb.op.behavior.name, "withdraw");
  EXPECT_EQ(bb.levels(), 1);

  std::ofstream(dir / "manifest.json") << R"({"v": 9, "kind": "hierarchy"})";
  EXPECT_THROW(load_hierarchy(dir), VersionError);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace hexwar
