#include "hexwar/runner.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "hexwar/error.hpp"
#include "hexwar/parallel.hpp"
#include "hexwar/rng.hpp"

namespace hexwar {

using nlohmann::json;

namespace {

std::uint64_t seed_from_json(const json& j) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  const std::string s = j.get<std::string>();
  std::size_t used = 0;
  const std::uint64_t v = std::stoull(s, &used);
  if (used != s.size()) throw FormatError("bad seed '" + s + "'");
  return v;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

json to_json(const Replay& r) {
  json steps = json::array();
  for (const ReplayStep& s : r.steps) {
    json j{{"phase", s.phase},
           {"unit", s.unit_id},
           {"faction", to_string(s.faction)},
           {"action", to_json(s.action)},
           {"events", to_json(s.events)},
           {"phase_events", to_json(s.phase_events)}};
    if (!s.audit.is_null()) j["audit"] = s.audit;
    steps.push_back(std::move(j));
  }
  return {{"v", kReplayFormatVersion},
          {"format_version", kReplayFormatVersion},
          {"kind", "replay"},
          {"scenario", to_json(r.start)},
          {"steps", std::move(steps)},
          {"final_score", r.final_score},
          {"seeds",
           {{"scenario", std::to_string(r.seeds.scenario)},
            {"blue_policy", std::to_string(r.seeds.blue_policy)},
            {"red_policy", std::to_string(r.seeds.red_policy)}}},
          {"agents", {{"blue", r.blue_agent}, {"red", r.red_agent}}},
          {"aborted", r.aborted},
          {"abort_reason", r.abort_reason}};
}

Replay replay_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("replay must be a JSON object");
  const int v = j.value("format_version", j.value("v", 0));
  if (v != kReplayFormatVersion) {
    throw VersionError("replay format version " + std::to_string(v) + " is not supported (expected " +
                       std::to_string(kReplayFormatVersion) + ")");
  }
  try {
    Replay r;
    r.start = state_from_json(j.at("scenario"));
    for (const json& s : j.at("steps")) {
      ReplayStep step;
      step.phase = s.at("phase").get<int>();
      step.unit_id = s.at("unit").get<int>();
      step.faction = faction_from_string(s.at("faction").get<std::string>());
      step.action = action_from_json(s.at("action"));
      step.events = score_events_from_json(s.at("events"));
      step.phase_events = score_events_from_json(s.at("phase_events"));
      if (s.contains("audit")) step.audit = s["audit"];
      r.steps.push_back(std::move(step));
    }
    r.final_score = j.at("final_score").get<double>();
    const json& seeds = j.at("seeds");
    r.seeds = {seed_from_json(seeds.at("scenario")), seed_from_json(seeds.at("blue_policy")),
               seed_from_json(seeds.at("red_policy"))};
    r.blue_agent = j.at("agents").at("blue").get<std::string>();
    r.red_agent = j.at("agents").at("red").get<std::string>();
    r.aborted = j.at("aborted").get<bool>();
    r.abort_reason = j.value("abort_reason", "");
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed replay: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw FormatError("malformed replay seed");
  } catch (const std::out_of_range&) {
    throw FormatError("replay seed out of range");
  }
}

std::string canonical_dump(const Replay& r) { return to_json(r).dump() + "\n"; }

Replay play_game(Agent& blue, Agent& red, const GameState& start, const GameSeeds& seeds) {
  Replay r;
  r.start = start;
  if (!is_terminal(r.start) && phase_complete(r.start)) r.start = advance_phase(r.start).state;
  r.seeds = seeds;
  r.blue_agent = blue.name();
  r.red_agent = red.name();
  blue.reset(seeds.blue_policy);
  red.reset(seeds.red_policy);
  double score = r.start.score;
  try {
    run_match(r.start, blue, red, [&](const StepInfo& i) {
      r.steps.push_back({i.before.phase, i.unit_id, i.faction, i.decision.action, i.events, i.phase_events,
                         i.decision.audit});
      score = i.after.score;
    });
  } catch (const Error& e) {
    r.aborted = true;
    r.abort_reason = std::string(e.kind()) + ": " + e.what();
  }
  r.final_score = score;
  return r;
}

AuditVerifier multimodel_audit_verifier(std::shared_ptr<const MultiModel> mm) {
  return [mm](const GameState& before, int unit_id, const json& audit) {
    if (audit.contains("predictions")) {
      verify_multimodel_audit(*mm, before, unit_id, audit);
    } else if (audit.contains("operator") && audit["operator"].contains("predictions")) {
      verify_multimodel_audit(*mm, before, unit_id, audit["operator"]);
    }
  };
}

namespace {

// Re-simulates the first `limit` steps; checks everything when `full`.
GameState replay_prefix(const Replay& r, std::size_t limit, const AuditVerifier& verify, bool full) {
  GameState s = r.start;
  if (!is_terminal(s) && phase_complete(s)) throw IntegrityError("replay starts on a phase boundary");
  for (std::size_t k = 0; k < std::min(limit, r.steps.size()); ++k) {
    const ReplayStep& step = r.steps[k];
    const std::string where = "step " + std::to_string(k) + ": ";
    if (is_terminal(s)) throw IntegrityError(where + "game already over");
    if (s.cursor != step.unit_id || s.on_move != step.faction || s.phase != step.phase) {
      throw IntegrityError(where + "recorded unit " + std::to_string(step.unit_id) +
                           " is not the unit on move");
    }
    if (verify && !step.audit.is_null()) verify(s, step.unit_id, step.audit);
    Transition t;
    try {
      t = apply_action(s, step.unit_id, step.action);
    } catch (const Error& e) {
      throw IntegrityError(where + "recorded action is illegal: " + e.what());
    }
    if (t.events != step.events) throw IntegrityError(where + "score events differ on re-simulation");
    std::vector<ScoreEvent> closing;
    if (!is_terminal(t.state) && phase_complete(t.state)) {
      Transition p = advance_phase(t.state);
      closing = std::move(p.events);
      t.state = std::move(p.state);
    }
    if (closing != step.phase_events) throw IntegrityError(where + "phase events differ on re-simulation");
    s = std::move(t.state);
  }
  if (full) {
    if (!r.aborted && !is_terminal(s)) throw IntegrityError("replay ends before the game is over");
    if (s.score != r.final_score) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "final score " << r.final_score << " does not match re-simulated " << s.score;
      throw IntegrityError(msg.str());
    }
  }
  return s;
}

}  // namespace

GameState resimulate(const Replay& r, const AuditVerifier& verify) {
  return replay_prefix(r, r.steps.size(), verify, true);
}

GameState state_at_step(const Replay& r, std::size_t step) {
  if (step > r.steps.size()) throw ConfigError("replay has only " + std::to_string(r.steps.size()) + " steps");
  return replay_prefix(r, step, {}, false);
}

void export_replay(const Replay& r, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << canonical_dump(r);
}

Replay import_replay(const std::filesystem::path& path, const AuditVerifier& verify) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw IntegrityError(std::string("corrupt replay file: ") + e.what());
  }
  Replay r;
  try {
    r = replay_from_json(j);
  } catch (const FormatError& e) {
    throw IntegrityError(std::string("corrupt replay file: ") + e.what());
  }
  resimulate(r, verify);
  return r;
}

GameSeeds evaluation_seeds(const EvalSpec& spec, int game) {
  const std::uint64_t g = spec.base_seed + static_cast<std::uint64_t>(game);
  return {spec.fixed_scenario ? spec.scenario_seed : g, mix_seed(g, 1), mix_seed(g, 2)};
}

json EvalReport::to_json() const {
  return {{"v", 1},
          {"n_games", n_games},
          {"completed", completed},
          {"mean_score", mean_score},
          {"std_dev", std_dev},
          {"scores", scores},
          {"aborted", aborted},
          {"fingerprint", fingerprint}};
}

EvalReport evaluate(const Agent& blue, const Agent& red, const EvalSpec& spec) {
  if (spec.n_games < 1) throw ConfigError("evaluation needs n_games >= 1");
  std::vector<Replay> games(spec.n_games);
  parallel_for(spec.n_games, spec.threads, [&](int g) {
    const GameSeeds seeds = evaluation_seeds(spec, g);
    auto b = blue.clone();
    auto r = red.clone();
    games[g] = play_game(*b, *r, generate_scenario(spec.scenario, seeds.scenario), seeds);
    games[g].steps.clear();  // only the outcome is kept
  });

  EvalReport rep;
  rep.n_games = spec.n_games;
  std::vector<double> done;
  for (int g = 0; g < spec.n_games; ++g) {
    rep.scores.push_back(games[g].final_score);
    if (games[g].aborted) {
      rep.aborted.push_back(g);
    } else {
      done.push_back(games[g].final_score);
    }
  }
  rep.completed = static_cast<int>(done.size());
  if (!done.empty()) {
    // Shifted by the first score, so identical scores have exactly zero spread.
    const double k = done.front();
    double d = 0.0;
    for (double x : done) d += x - k;
    d /= done.size();
    double var = 0.0;
    for (double x : done) var += (x - k - d) * (x - k - d);
    rep.mean_score = k + d;
    rep.std_dev = std::sqrt(var / done.size());
  }
  const json config{{"blue", blue.name()},
                    {"red", red.name()},
                    {"scenario", to_json(spec.scenario)},
                    {"n_games", spec.n_games},
                    {"base_seed", std::to_string(spec.base_seed)},
                    {"fixed_scenario", spec.fixed_scenario},
                    {"scenario_seed", std::to_string(spec.scenario_seed)}};
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a(config.dump())));
  rep.fingerprint = hex;
  return rep;
}

}  // namespace hexwar
