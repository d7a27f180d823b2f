// hexwar: scenario generation, matches, training, evaluation, replays and the
// game service from the command line.
//
// Options can also come from a JSON file given with --config. Top-level keys
// set global options, and an object keyed by a subcommand name (with dashes,
// e.g. "train-dqn") sets that subcommand's options. Flags on the command line
// win over the file.

#include <CLI11.hpp>
#include <csignal>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <pthread.h>

#include "hexwar/dqn.hpp"
#include "hexwar/error.hpp"
#include "hexwar/hierarchy.hpp"
#include "hexwar/multimodel.hpp"
#include "hexwar/runner.hpp"
#include "hexwar/scripted.hpp"
#include "hexwar/service.hpp"

namespace fs = std::filesystem;
using namespace hexwar;
using nlohmann::json;

namespace {

class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override {
    throw CLI::ConfigError("writing JSON config files is not supported");
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw CLI::ConfigError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConfigError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    collect(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void collect(const json& obj, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& items) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (it->is_object()) {
        auto sub = parents;
        sub.push_back(it.key());
        collect(*it, sub, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = it.key();
      if (it->is_array()) {
        for (const auto& v : *it) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(*it));
      }
      items.push_back(std::move(item));
    }
  }
};

struct Globals {
  std::string data_dir = ".";

  /// Relative paths live under the data directory.
  fs::path path(const std::string& p) const {
    const fs::path f(p);
    return f.is_absolute() ? f : fs::path(data_dir) / f;
  }
};

Globals globals;

// Agent descriptions: a scripted policy name, "random", "dqn:<file>",
// "multimodel:<dir>" or "hierarchy:<dir>", optionally followed by "@<eps>" for
// that share of uniformly random legal moves.
std::unique_ptr<Agent> make_agent(const std::string& desc) {
  const auto at = desc.rfind('@');
  if (at != std::string::npos) {
    double eps = 0.0;
    try {
      eps = std::stod(desc.substr(at + 1));
    } catch (const std::exception&) {
      throw ConfigError("bad epsilon in agent '" + desc + "'");
    }
    return std::make_unique<EpsilonAgent>(make_agent(desc.substr(0, at)), eps);
  }
  const auto colon = desc.find(':');
  const std::string kind = desc.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : desc.substr(colon + 1);
  if (colon == std::string::npos) {
    if (desc == "random") return std::make_unique<RandomAgent>();
    return std::make_unique<BehaviorAgent>(scripted_behavior(desc));
  }
  if (kind == "dqn") {
    return std::make_unique<DqnAgent>(std::make_shared<const DqnModel>(load_dqn(globals.path(arg))),
                                      fs::path(arg).stem().string());
  }
  if (kind == "multimodel") {
    const fs::path dir = globals.path(arg);
    return std::make_unique<MultiModelAgent>(std::make_shared<const MultiModel>(load_multimodel(dir)));
  }
  if (kind == "hierarchy") return std::make_unique<HierarchyAgent>(load_hierarchy(globals.path(arg)));
  throw LookupError("unknown agent kind '" + kind + "'");
}

/// Behavior model plus the manifest entry that rebuilds it.
std::pair<BehaviorModel, json> make_behavior(const std::string& desc) {
  if (desc.rfind("dqn:", 0) == 0) {
    const fs::path path = fs::absolute(globals.path(desc.substr(4)));
    const std::string name = path.stem().string();
    return {dqn_behavior(std::make_shared<const DqnModel>(load_dqn(path)), name),
            {{"kind", "dqn"}, {"name", name}, {"path", path.string()}}};
  }
  return {scripted_behavior(desc), {{"kind", "scripted"}, {"name", desc}}};
}

void add_scenario_options(CLI::App* app, ScenarioParams& p) {
  app->add_option("--width", p.width, "board columns")->capture_default_str();
  app->add_option("--height", p.height, "board rows")->capture_default_str();
  app->add_option("--blue-min", p.blue_min)->capture_default_str();
  app->add_option("--blue-max", p.blue_max)->capture_default_str();
  app->add_option("--red-min", p.red_min)->capture_default_str();
  app->add_option("--red-max", p.red_max)->capture_default_str();
  app->add_option("--cities", p.cities)->capture_default_str();
  app->add_option("--phases", p.max_phases, "phases per game")->capture_default_str();
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  const fs::path out = globals.path(path);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream f(out);
  if (!f) throw FormatError("cannot write " + out.string());
  f << text;
}

GameState load_scenario_file(const std::string& path) {
  std::ifstream in(globals.path(path));
  if (!in) throw FormatError("cannot read " + path);
  return scenario_from_json(json::parse(in));
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

// --- subcommands ------------------------------------------------------------------

struct GenScenario {
  ScenarioParams params;
  std::uint64_t seed = 0;
  std::string out;

  void run() const { write_text(out, scenario_to_json(generate_scenario(params, seed)).dump(2) + "\n"); }
};

struct Play {
  ScenarioParams params;
  std::string blue = "baseline", red = "baseline", scenario, out;
  std::uint64_t seed = 0;

  void run() const {
    const GameState start = scenario.empty() ? generate_scenario(params, seed) : load_scenario_file(scenario);
    auto b = make_agent(blue);
    auto r = make_agent(red);
    const Replay replay = play_game(*b, *r, start, {seed, mix_seed(seed, 1), mix_seed(seed, 2)});
    if (!out.empty()) export_replay(replay, globals.path(out));
    std::cout << "score " << replay.final_score << " after " << replay.steps.size() << " steps";
    if (replay.aborted) std::cout << " (aborted: " << replay.abort_reason << ")";
    std::cout << "\n";
  }
};

struct TrainDqn {
  DqnEnvParams env;
  DqnConfig cfg;
  std::string obs_mode = "local7", red = "baseline", out = "models/dqn.bin", curve;
  double lr = 0.0;

  void run() {
    cfg.obs_mode = obs_mode_from_string(obs_mode);
    if (lr > 0.0) cfg.learner.sgd.learning_rate = lr;
    auto r = make_agent(red);
    const DqnResult result = dqn_train(env, cfg, *r);
    const fs::path path = globals.path(out);
    ensure_parent(path);
    save_dqn(result.model, path);
    if (!curve.empty()) write_learning_curve(result.curve, globals.path(curve));
    for (const auto& p : result.curve) std::cout << p.step << " " << p.mean << " " << p.std << "\n";
    std::cout << "saved " << path.string() << "\n";
  }
};

/// Appends a predictor to the multi-model bundle in `dir`, creating it.
void add_to_bundle(const fs::path& dir, BehaviorModel behavior, const json& spec, ScorePredictor predictor) {
  std::vector<MultiModelMember> members;
  std::vector<json> specs;
  if (fs::exists(dir / "manifest.json")) {
    const MultiModel old = load_multimodel(dir);
    std::ifstream in(dir / "manifest.json");
    const json manifest = json::parse(in);
    for (std::size_t i = 0; i < old.size(); ++i) {
      members.push_back(old.members()[i]);
      specs.push_back(manifest.at("members").at(i).at("behavior"));
    }
  }
  members.push_back({std::move(behavior), std::move(predictor)});
  specs.push_back(spec);
  save_multimodel(MultiModel(std::move(members)), specs, dir);
}

struct TrainPredictor {
  ScenarioParams params;
  DatasetSpec data{200, 0, 1};
  PredictorTraining training;
  std::string behavior = "greedy_attack", red = "baseline", out, dataset, bundle;

  void run() const {
    auto [model, spec] = make_behavior(behavior);
    auto r = make_agent(red);
    const ScoreDataset d = generate_score_dataset(BehaviorAgent(model), *r, params, data);
    if (!dataset.empty()) save_dataset(d, globals.path(dataset));
    std::vector<double> history;
    ScorePredictor p = train_predictor(d, model.name, training, &history);
    p.meta.red_opponent = red;
    std::cout << d.size() << " samples, final loss " << (history.empty() ? 0.0 : history.back()) << "\n";
    finish(std::move(model), spec, std::move(p), out, bundle);
  }

  static void finish(BehaviorModel model, const json& spec, ScorePredictor p, const std::string& out,
                     const std::string& bundle) {
    if (!out.empty()) {
      const fs::path path = globals.path(out);
      ensure_parent(path);
      save_predictor(p, path);
      std::cout << "saved " << path.string() << "\n";
    }
    if (!bundle.empty()) {
      add_to_bundle(globals.path(bundle), std::move(model), spec, std::move(p));
      std::cout << "added to " << globals.path(bundle).string() << "\n";
    }
  }
};

struct TrainTdPredictor {
  ScenarioParams params;
  TdTraining cfg;
  std::string behavior = "greedy_attack", red = "baseline", out, bundle;

  void run() const {
    auto [model, spec] = make_behavior(behavior);
    auto r = make_agent(red);
    ScorePredictor p = train_predictor_td(BehaviorAgent(model), *r, random_scenarios(params), cfg, model.name);
    p.meta.red_opponent = red;
    TrainPredictor::finish(std::move(model), spec, std::move(p), out, bundle);
  }
};

struct TrainLevel {
  DqnEnvParams env;
  LevelTraining cfg;
  std::string hierarchy, level = "operator", red = "baseline", out = "hierarchy";
  double lr = 0.0;

  void run() {
    HierarchySpec h;
    if (hierarchy.empty()) {
      h.commander = CommanderPolicy{};
      h.manager = ManagerPolicy{};
    } else {
      h = load_hierarchy(globals.path(hierarchy));
    }
    if (lr > 0.0) cfg.learner.sgd.learning_rate = lr;
    auto r = make_agent(red);
    const HierarchySpec trained = train_level(h, level_from_string(level), env, *r, cfg);
    save_hierarchy(trained, globals.path(out));
    std::cout << "saved " << globals.path(out).string() << "\n";
  }
};

struct Evaluate {
  EvalSpec spec;
  std::string blue = "baseline", red = "baseline", out;

  void run() const {
    auto b = make_agent(blue);
    auto r = make_agent(red);
    write_text(out, evaluate(*b, *r, spec).to_json().dump(2) + "\n");
  }
};

struct ReplayExport {
  std::string in, out, multimodel;
  long step = -1;

  void run() const {
    AuditVerifier verify;
    if (!multimodel.empty()) {
      verify = multimodel_audit_verifier(std::make_shared<const MultiModel>(load_multimodel(globals.path(multimodel))));
    }
    const Replay r = import_replay(globals.path(in), verify);
    if (step >= 0) {
      write_text(out, to_json(state_at_step(r, static_cast<std::size_t>(step))).dump(2) + "\n");
    } else if (out.empty() || out == "-") {
      std::cout << canonical_dump(r);
    } else {
      export_replay(r, globals.path(out));
    }
  }
};

struct Serve {
  ServiceConfig cfg;
  std::string static_dir, replay_dir = "replays";
  std::vector<std::string> opponents;

  void run() {
    if (!static_dir.empty()) cfg.static_dir = globals.path(static_dir);
    if (!replay_dir.empty()) cfg.replay_dir = globals.path(replay_dir);
    for (const std::string& o : opponents) {
      const auto eq = o.find('=');
      if (eq == std::string::npos) throw ConfigError("opponent must be NAME=AGENT, got '" + o + "'");
      cfg.opponents[o.substr(0, eq)] = make_agent(o.substr(eq + 1));
    }
    // Block the stop signals before any worker thread exists, then wait for one.
    sigset_t stop_signals;
    sigemptyset(&stop_signals);
    sigaddset(&stop_signals, SIGINT);
    sigaddset(&stop_signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);
    Service service(cfg);
    const unsigned short port = service.start();
    std::cout << "listening on http://" << cfg.host << ":" << port << std::endl;
    int sig = 0;
    sigwait(&stop_signals, &sig);
    service.stop();
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hexwar: hex wargame engine, agents and experiments"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file with option values");
  app.add_option("--data-dir", globals.data_dir, "base for relative paths")
      ->envname("HEXWAR_DATA_DIR")
      ->capture_default_str();
  app.require_subcommand(1);

  GenScenario gen;
  auto* gen_cmd = app.add_subcommand("gen-scenario", "write a generated scenario as JSON");
  add_scenario_options(gen_cmd, gen.params);
  gen_cmd->add_option("--seed", gen.seed);
  gen_cmd->add_option("--out", gen.out, "file, or - for stdout");
  gen_cmd->callback([&] { gen.run(); });

  Play play;
  auto* play_cmd = app.add_subcommand("play", "play one game and optionally export its replay");
  add_scenario_options(play_cmd, play.params);
  play_cmd->add_option("--blue", play.blue, "blue agent")->capture_default_str();
  play_cmd->add_option("--red", play.red, "red agent")->capture_default_str();
  play_cmd->add_option("--seed", play.seed, "scenario and policy seed");
  play_cmd->add_option("--scenario", play.scenario, "scenario JSON instead of a generated one");
  play_cmd->add_option("--out", play.out, "replay file");
  play_cmd->callback([&] { play.run(); });

  TrainDqn dqn;
  auto* dqn_cmd = app.add_subcommand("train-dqn", "train a DQN blue agent");
  add_scenario_options(dqn_cmd, dqn.env.scenario);
  dqn_cmd->add_flag("--fixed-scenario", dqn.env.fixed_scenario, "train on one scenario");
  dqn_cmd->add_option("--scenario-seed", dqn.env.scenario_seed);
  dqn_cmd->add_option("--obs-mode", dqn.obs_mode, "global_full, coarse5 or local7")->capture_default_str();
  dqn_cmd->add_option("--budget", dqn.cfg.budget, "blue action-selection steps")->capture_default_str();
  dqn_cmd->add_option("--seed", dqn.cfg.seed);
  dqn_cmd->add_option("--lr", dqn.lr, "learning rate");
  dqn_cmd->add_option("--hidden", dqn.cfg.learner.hidden, "hidden layer sizes");
  dqn_cmd->add_option("--gamma", dqn.cfg.learner.gamma)->capture_default_str();
  dqn_cmd->add_option("--epsilon-decay", dqn.cfg.epsilon.decay_steps, "steps to reach the final epsilon")
      ->capture_default_str();
  dqn_cmd->add_option("--eval-interval", dqn.cfg.eval_interval, "steps between curve points");
  dqn_cmd->add_option("--eval-games", dqn.cfg.eval_games)->capture_default_str();
  dqn_cmd->add_option("--red", dqn.red, "red agent")->capture_default_str();
  dqn_cmd->add_option("--out", dqn.out, "model file")->capture_default_str();
  dqn_cmd->add_option("--curve", dqn.curve, "learning curve CSV");
  dqn_cmd->callback([&] { dqn.run(); });

  TrainPredictor pred;
  auto* pred_cmd = app.add_subcommand("train-predictor", "fit a score predictor on self-play games");
  add_scenario_options(pred_cmd, pred.params);
  pred_cmd->add_option("--behavior", pred.behavior, "scripted name or dqn:<file>")->capture_default_str();
  pred_cmd->add_option("--red", pred.red)->capture_default_str();
  pred_cmd->add_option("--games", pred.data.games)->capture_default_str();
  pred_cmd->add_option("--seed", pred.data.seed);
  pred_cmd->add_option("--threads", pred.data.threads, "0 = all cores")->capture_default_str();
  pred_cmd->add_option("--epochs", pred.training.epochs)->capture_default_str();
  pred_cmd->add_option("--hidden", pred.training.hidden);
  pred_cmd->add_option("--dataset", pred.dataset, "also save the dataset here");
  pred_cmd->add_option("--out", pred.out, "predictor file");
  pred_cmd->add_option("--bundle", pred.bundle, "append to this multi-model directory");
  pred_cmd->callback([&] { pred.run(); });

  TrainTdPredictor td;
  auto* td_cmd = app.add_subcommand("train-td-predictor", "learn a score predictor by TD(0)");
  add_scenario_options(td_cmd, td.params);
  td_cmd->add_option("--behavior", td.behavior)->capture_default_str();
  td_cmd->add_option("--red", td.red)->capture_default_str();
  td_cmd->add_option("--steps", td.cfg.steps)->capture_default_str();
  td_cmd->add_option("--seed", td.cfg.seed);
  td_cmd->add_option("--hidden", td.cfg.hidden);
  td_cmd->add_option("--out", td.out, "predictor file");
  td_cmd->add_option("--bundle", td.bundle, "append to this multi-model directory");
  td_cmd->callback([&] { td.run(); });

  TrainLevel lvl;
  auto* lvl_cmd = app.add_subcommand("train-level", "train one hierarchy level, the others frozen");
  add_scenario_options(lvl_cmd, lvl.env.scenario);
  lvl_cmd->add_option("--hierarchy", lvl.hierarchy, "bundle to start from (default: scripted 3 levels)");
  lvl_cmd->add_option("--level", lvl.level, "commander, manager or operator")->capture_default_str();
  lvl_cmd->add_option("--budget", lvl.cfg.budget, "decisions at the trained level")->capture_default_str();
  lvl_cmd->add_option("--seed", lvl.cfg.seed);
  lvl_cmd->add_option("--lr", lvl.lr);
  lvl_cmd->add_option("--hidden", lvl.cfg.learner.hidden);
  lvl_cmd->add_option("--red", lvl.red)->capture_default_str();
  lvl_cmd->add_option("--out", lvl.out, "bundle directory")->capture_default_str();
  lvl_cmd->callback([&] { lvl.run(); });

  Evaluate ev;
  auto* ev_cmd = app.add_subcommand("evaluate", "mean and std of blue's score over many games");
  add_scenario_options(ev_cmd, ev.spec.scenario);
  ev_cmd->add_option("--blue", ev.blue)->capture_default_str();
  ev_cmd->add_option("--red", ev.red)->capture_default_str();
  ev_cmd->add_option("--games", ev.spec.n_games)->capture_default_str();
  ev_cmd->add_option("--seed", ev.spec.base_seed, "game i uses seed + i");
  ev_cmd->add_flag("--fixed-scenario", ev.spec.fixed_scenario, "play one scenario every game");
  ev_cmd->add_option("--scenario-seed", ev.spec.scenario_seed);
  ev_cmd->add_option("--threads", ev.spec.threads, "0 = all cores")->capture_default_str();
  ev_cmd->add_option("--out", ev.out, "report file, or - for stdout");
  ev_cmd->callback([&] { ev.run(); });

  ReplayExport rep;
  auto* rep_cmd = app.add_subcommand("replay-export", "verify a replay and write it in canonical form");
  rep_cmd->add_option("--in", rep.in, "replay file")->required();
  rep_cmd->add_option("--out", rep.out, "file, or - for stdout");
  rep_cmd->add_option("--step", rep.step, "write the state after this many steps instead");
  rep_cmd->add_option("--multimodel", rep.multimodel, "bundle used to re-derive audit records");
  rep_cmd->callback([&] { rep.run(); });

  Serve srv;
  auto* srv_cmd = app.add_subcommand("serve", "HTTP and WebSocket service for human-vs-AI games");
  srv_cmd->add_option("--host", srv.cfg.host)->capture_default_str();
  srv_cmd->add_option("--port", srv.cfg.port, "0 picks a free port")->capture_default_str();
  srv_cmd->add_option("--static-dir", srv.static_dir, "web client files");
  srv_cmd->add_option("--replay-dir", srv.replay_dir, "finished games")->capture_default_str();
  srv_cmd->add_option("--opponent", srv.opponents, "extra opponent NAME=AGENT");
  srv_cmd->add_option("--default-opponent", srv.cfg.default_opponent)->capture_default_str();
  srv_cmd->callback([&] { srv.run(); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "hexwar: " << e.kind() << " error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "hexwar: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
