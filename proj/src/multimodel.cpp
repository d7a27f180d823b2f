#include "hexwar/multimodel.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "hexwar/dqn.hpp"
#include "hexwar/error.hpp"
#include "hexwar/parallel.hpp"
#include "hexwar/scripted.hpp"

namespace hexwar {

using nlohmann::json;

Eigen::VectorXd predictor_input(const GameState& s, int unit_id) {
  return coarse_abstract(encode_full(s, unit_id), 5).values();
}

std::string_view to_string(PredictorMode m) { return m == PredictorMode::td ? "td" : "supervised"; }

PredictorMode predictor_mode_from_string(std::string_view s) {
  if (s == "supervised") return PredictorMode::supervised;
  if (s == "td") return PredictorMode::td;
  throw FormatError("unknown predictor mode '" + std::string(s) + "'");
}

double ScorePredictor::predict_input(const Eigen::VectorXd& input) const {
  return forward(net, input)[0] * label_std + label_mean;
}

double ScorePredictor::predict(const GameState& s, const Eigen::VectorXd& input) const {
  const double v = predict_input(input);
  return meta.mode == PredictorMode::td ? s.score + v : v;
}

double ScorePredictor::predict(const GameState& s, int unit_id) const {
  return predict(s, predictor_input(s, unit_id));
}

// --- datasets ---------------------------------------------------------------

ScoreDataset generate_score_dataset(const Agent& behavior, const Agent& red,
                                    const ScenarioSource& scenarios, const DatasetSpec& spec) {
  if (spec.games < 1) throw ConfigError("dataset needs at least one game");
  std::vector<ScoreDataset> per_game(spec.games);
  parallel_for(spec.games, spec.threads, [&](int g) {
    const GameSeeds seeds = game_seeds(spec.seed, g);
    auto blue = behavior.clone();
    auto r = red.clone();
    blue->reset(seeds.blue_policy);
    r->reset(seeds.red_policy);
    ScoreDataset& out = per_game[g];
    const GameState end = run_match(scenarios(seeds.scenario), *blue, *r, [&](const StepInfo& info) {
      if (info.faction != Faction::blue) return;
      out.inputs.push_back(predictor_input(info.before, info.unit_id).cast<float>());
    });
    out.labels.assign(out.inputs.size(), end.score);
  });
  ScoreDataset all;
  for (auto& d : per_game) {
    all.inputs.insert(all.inputs.end(), std::make_move_iterator(d.inputs.begin()),
                      std::make_move_iterator(d.inputs.end()));
    all.labels.insert(all.labels.end(), d.labels.begin(), d.labels.end());
  }
  return all;
}

ScoreDataset generate_score_dataset(const Agent& behavior, const Agent& red,
                                    const ScenarioParams& params, const DatasetSpec& spec) {
  return generate_score_dataset(behavior, red, random_scenarios(params), spec);
}

void save_dataset(const ScoreDataset& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write("HXDS", 4);
  detail::put_u32(out, kDatasetVersion);
  const auto n = static_cast<std::uint64_t>(d.size());
  detail::put_u32(out, static_cast<std::uint32_t>(n & 0xffffffffu));
  detail::put_u32(out, static_cast<std::uint32_t>(n >> 32));
  for (std::size_t i = 0; i < d.size(); ++i) {
    ObsTensor t(channel::kCount, 5, 5);
    t.values() = d.inputs[i].cast<double>();
    write_tensor(out, t);
    detail::put_f64(out, d.labels[i]);
  }
  if (!out) throw FormatError("failed writing " + path.string());
}

ScoreDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::string(magic, 4) != "HXDS") {
    throw FormatError("not a dataset file (bad magic)");
  }
  const std::uint32_t version = detail::get_u32(in);
  if (version != kDatasetVersion) {
    throw VersionError("dataset version " + std::to_string(version) + " is not supported");
  }
  const std::uint64_t lo = detail::get_u32(in);
  const std::uint64_t hi = detail::get_u32(in);
  const std::uint64_t n = lo | (hi << 32);
  ScoreDataset d;
  for (std::uint64_t i = 0; i < n; ++i) {
    const ObsTensor t = read_tensor(in);
    if (t.channels() != channel::kCount || t.height() != 5 || t.width() != 5) {
      throw FormatError("dataset record is not a 17x5x5 view");
    }
    d.inputs.push_back(t.values().cast<float>());
    d.labels.push_back(detail::get_f64(in));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes in dataset");
  return d;
}

// --- supervised -------------------------------------------------------------

namespace {

std::vector<int> layer_sizes(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

}  // namespace

ScorePredictor train_predictor(const ScoreDataset& data, const std::string& behavior_name,
                               const PredictorTraining& cfg, std::vector<double>* history) {
  if (data.size() == 0) throw ConfigError("cannot train a predictor on an empty dataset");
  const auto n = static_cast<Eigen::Index>(data.size());
  double mean = 0.0;
  for (double y : data.labels) mean += y;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double y : data.labels) var += (y - mean) * (y - mean);
  double stdev = std::sqrt(var / static_cast<double>(n));
  if (!(stdev > 1e-12)) stdev = 1.0;

  MlpD::Matrix x(kPredictorInputs, n);
  MlpD::Matrix y(1, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (data.inputs[i].size() != kPredictorInputs) throw ShapeError("dataset input is not 425 values");
    x.col(i) = data.inputs[i].cast<double>();
    y(0, i) = (data.labels[i] - mean) / stdev;
  }
  ScorePredictor p;
  p.behavior_name = behavior_name;
  p.net = MlpD::xavier(layer_sizes(kPredictorInputs, cfg.hidden, 1), cfg.init_seed);
  p.label_mean = mean;
  p.label_std = stdev;
  p.meta.mode = PredictorMode::supervised;
  p.meta.seed = cfg.init_seed;
  const auto losses = fit(p.net, x, y, cfg.sgd, cfg.epochs);
  if (history) *history = losses;
  return p;
}

// --- TD(0) ------------------------------------------------------------------

double td_step(MlpD& net, SgdState<double>& state, const MlpD& target_net,
               const std::vector<TdSample>& batch, double gamma, const SgdConfig& cfg) {
  if (batch.empty()) throw ShapeError("empty TD batch");
  const auto n = static_cast<Eigen::Index>(batch.size());
  Batch<double> b;
  b.inputs.resize(net.input_size(), n);
  b.targets.resize(1, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const TdSample& t = batch[k];
    b.inputs.col(k) = t.input;
    double target = t.reward;
    if (!t.terminal) target += gamma * forward(target_net, t.next_input)[0];
    b.targets(0, k) = target;
  }
  return train_step(net, state, b, cfg);
}

ScorePredictor train_predictor_td(const Agent& behavior, const Agent& red,
                                  const ScenarioSource& scenarios, const TdTraining& cfg,
                                  const std::string& behavior_name) {
  if (cfg.steps < 1) throw ConfigError("TD budget must be >= 1 step");
  if (cfg.replay_capacity < 1 || cfg.target_sync < 1 || cfg.sgd.batch_size < 1) {
    throw ConfigError("invalid TD configuration");
  }
  ScorePredictor p;
  p.behavior_name = behavior_name;
  p.net = MlpD::xavier(layer_sizes(kPredictorInputs, cfg.hidden, 1), mix_seed(cfg.seed, 1));
  // Untrained value is exactly zero: remaining score is only learned from rewards.
  p.net.weight(p.net.layers() - 1).setZero();
  p.label_mean = 0.0;
  p.label_std = 1.0 / cfg.reward_scale;
  p.meta.mode = PredictorMode::td;
  p.meta.red_opponent = red.name();
  p.meta.seed = cfg.seed;

  MlpD target = p.net;
  SgdState<double> opt(p.net);
  Rng rng(mix_seed(cfg.seed, 2));
  std::vector<TdSample> replay;
  std::size_t head = 0;
  long seen = 0;
  long grad_steps = 0;

  auto add = [&](TdSample t) {
    if (replay.size() < static_cast<std::size_t>(cfg.replay_capacity)) {
      replay.push_back(std::move(t));
    } else {
      replay[head] = std::move(t);
      head = (head + 1) % replay.size();
    }
    if (++seen < cfg.warmup) return;
    std::vector<TdSample> batch;
    for (int k = 0; k < cfg.sgd.batch_size; ++k) batch.push_back(replay[uniform_index(rng, replay.size())]);
    td_step(p.net, opt, target, batch, 1.0, cfg.sgd);
    if (++grad_steps % cfg.target_sync == 0) target = p.net;
  };

  for (int game = 0; seen < cfg.steps; ++game) {
    const GameSeeds seeds = game_seeds(cfg.seed, game);
    auto blue = behavior.clone();
    auto r = red.clone();
    blue->reset(seeds.blue_policy);
    r->reset(seeds.red_policy);
    // Rewards between consecutive blue steps accrue to the earlier one.
    std::optional<TdSample> pending;
    run_match(scenarios(seeds.scenario), *blue, *r, [&](const StepInfo& info) {
      if (info.faction == Faction::blue) {
        Eigen::VectorXd input = predictor_input(info.before, info.unit_id);
        if (pending && seen < cfg.steps) {
          pending->next_input = input;
          add(std::move(*pending));
        }
        pending = TdSample{std::move(input), 0.0, {}, false};
      }
      if (pending) {
        pending->reward += (sum_signed(info.events) + sum_signed(info.phase_events)) * cfg.reward_scale;
      }
    });
    if (pending && seen < cfg.steps) {
      pending->terminal = true;
      add(std::move(*pending));
    }
    ++p.meta.games;
  }
  return p;
}

// --- selection --------------------------------------------------------------

int select_model(const std::vector<double>& predictions) {
  if (predictions.empty()) throw EvaluationError("no predictions to select from");
  int best = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (std::isnan(predictions[i])) {
      throw EvaluationError("prediction " + std::to_string(i) + " is NaN");
    }
    if (predictions[i] > predictions[best]) best = static_cast<int>(i);
  }
  return best;
}

MultiModel::MultiModel(std::vector<MultiModelMember> members) : members_(std::move(members)) {
  if (members_.empty()) throw ConfigError("a multi-model needs at least one member");
  std::set<std::string> names;
  for (const auto& m : members_) {
    if (m.behavior.name != m.predictor.behavior_name) {
      throw ConfigError("predictor for '" + m.predictor.behavior_name + "' paired with behavior '" +
                        m.behavior.name + "'");
    }
    if (!names.insert(m.behavior.name).second) {
      throw ConfigError("behavior '" + m.behavior.name + "' appears twice");
    }
    if (m.predictor.net.input_size() != kPredictorInputs || m.predictor.net.output_size() != 1) {
      throw ConfigError("predictor for '" + m.behavior.name + "' is not a 425 -> 1 network");
    }
  }
}

json MultiModelChoice::audit(const MultiModel& mm) const {
  return json{{"chosen", chosen},
              {"model", mm.members()[chosen].behavior.name},
              {"predictions", predictions}};
}

MultiModelChoice multimodel_act(const MultiModel& mm, const GameState& s, int unit_id) {
  const Eigen::VectorXd input = predictor_input(s, unit_id);
  MultiModelChoice c;
  for (const auto& m : mm.members()) c.predictions.push_back(m.predictor.predict(s, input));
  c.chosen = select_model(c.predictions);
  const BehaviorModel& chosen = mm.members()[c.chosen].behavior;
  c.action = chosen.act(s, unit_id);
  require_legal(s, unit_id, c.action, chosen.name);
  return c;
}

Decision MultiModelAgent::decide(const GameState& s, int unit_id) {
  const MultiModelChoice c = multimodel_act(*mm_, s, unit_id);
  return {c.action, c.audit(*mm_)};
}

void verify_multimodel_audit(const MultiModel& mm, const GameState& s, int unit_id,
                             const json& audit) {
  const MultiModelChoice c = multimodel_act(mm, s, unit_id);
  const auto recorded = audit.at("predictions").get<std::vector<double>>();
  if (recorded != c.predictions) {
    throw IntegrityError("multi-model predictions differ from the audit record at phase " +
                         std::to_string(s.phase) + ", unit " + std::to_string(unit_id));
  }
  if (audit.at("chosen").get<int>() != c.chosen) {
    throw IntegrityError("multi-model choice differs from the audit record at phase " +
                         std::to_string(s.phase) + ", unit " + std::to_string(unit_id));
  }
}

// --- files ------------------------------------------------------------------

void save_predictor(const ScorePredictor& p, const std::filesystem::path& path) {
  save_weights(p.net, path);
  const json meta{{"v", 1},
                  {"behavior_name", p.behavior_name},
                  {"label_mean", p.label_mean},
                  {"label_std", p.label_std},
                  {"mode", to_string(p.meta.mode)},
                  {"games", p.meta.games},
                  {"red_opponent", p.meta.red_opponent},
                  {"seed", p.meta.seed}};
  std::ofstream out(path.string() + ".json");
  if (!out) throw FormatError("cannot write predictor meta for " + path.string());
  out << meta.dump(2) << "\n";
}

namespace {

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError("bad JSON in " + path.string() + ": " + e.what());
  }
}

}  // namespace

ScorePredictor load_predictor(const std::filesystem::path& path) {
  ScorePredictor p;
  p.net = load_weights<double>(path);
  const json meta = read_json(path.string() + ".json");
  if (meta.value("v", 0) != 1) throw VersionError("unsupported predictor meta version");
  try {
    p.behavior_name = meta.at("behavior_name").get<std::string>();
    p.label_mean = meta.at("label_mean").get<double>();
    p.label_std = meta.at("label_std").get<double>();
    p.meta.mode = predictor_mode_from_string(meta.at("mode").get<std::string>());
    p.meta.games = meta.value("games", 0L);
    p.meta.red_opponent = meta.value("red_opponent", std::string());
    p.meta.seed = meta.value("seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad predictor meta: ") + e.what());
  }
  return p;
}

BehaviorResolver default_behavior_resolver(const std::filesystem::path& base_dir) {
  return [base_dir](const json& spec) -> BehaviorModel {
    const std::string kind = spec.value("kind", std::string("scripted"));
    const std::string name = spec.at("name").get<std::string>();
    if (kind == "scripted") return scripted_behavior(name);
    if (kind == "dqn") {
      std::filesystem::path path = spec.at("path").get<std::string>();
      if (path.is_relative()) path = base_dir / path;
      return dqn_behavior(std::make_shared<const DqnModel>(load_dqn(path)), name);
    }
    throw LookupError("unknown behavior kind '" + kind + "'");
  };
}

void save_multimodel(const MultiModel& mm, const std::vector<json>& behavior_specs,
                     const std::filesystem::path& dir) {
  if (behavior_specs.size() != mm.size()) {
    throw ConfigError("need one behavior description per multi-model member");
  }
  std::filesystem::create_directories(dir);
  json members = json::array();
  for (std::size_t i = 0; i < mm.size(); ++i) {
    const std::string file = "predictor_" + std::to_string(i) + ".bin";
    save_predictor(mm.members()[i].predictor, dir / file);
    members.push_back({{"behavior", behavior_specs[i]}, {"predictor", file}});
  }
  std::ofstream out(dir / "manifest.json");
  if (!out) throw FormatError("cannot write " + (dir / "manifest.json").string());
  out << json{{"v", 1}, {"kind", "multimodel"}, {"members", members}}.dump(2) << "\n";
}

MultiModel load_multimodel(const std::filesystem::path& dir, const BehaviorResolver& resolve) {
  const json manifest = read_json(dir / "manifest.json");
  if (manifest.value("v", 0) != 1) throw VersionError("unsupported multi-model manifest version");
  const BehaviorResolver r = resolve ? resolve : default_behavior_resolver(dir);
  std::vector<MultiModelMember> members;
  for (const auto& m : manifest.at("members")) {
    members.push_back({r(m.at("behavior")), load_predictor(dir / m.at("predictor").get<std::string>())});
  }
  return MultiModel(std::move(members));
}

}  // namespace hexwar
