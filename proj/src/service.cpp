#include "hexwar/service.hpp"

#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <condition_variable>
#include <fstream>
#include <iterator>
#include <regex>
#include <set>

#include "hexwar/error.hpp"
#include "hexwar/scripted.hpp"

namespace hexwar {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using nlohmann::json;

struct Service::Net {
  asio::io_context io;
  tcp::acceptor acceptor{io};
};

struct Service::Conn {
  explicit Conn(asio::io_context& io) : socket(io) {}
  tcp::socket socket;
  std::atomic<bool> done{false};
};

struct Service::Game {
  std::string id;
  std::string opponent;
  std::mutex write_mu;  // single writer per game
  std::mutex mu;        // guards everything below
  std::condition_variable cv;
  GameState state;
  std::unique_ptr<Agent> red;
  Replay record;
  std::vector<json> events;  // event seq = index + 1
  std::string status = "active";  // active | finished | aborted
  std::string error;
};

namespace {

/// Error carrying an HTTP status and the violated predicate.
struct ApiError {
  int status;
  std::string kind;
  std::string message;
};

ApiResponse json_response(int status, const json& body) { return {status, "application/json", body.dump()}; }

ApiResponse error_response(const ApiError& e) {
  return json_response(e.status, {{"v", kApiVersion}, {"error", {{"kind", e.kind}, {"message", e.message}}}});
}

int status_for(const std::string& kind) {
  if (kind == "lookup") return 404;
  if (kind == "turn_order" || kind == "sequencing") return 409;
  if (kind == "rule" || kind == "legality" || kind == "coordinate" || kind == "domain") return 422;
  return 400;
}

std::vector<std::string> split_path(const std::string& target) {
  const std::string path = target.substr(0, target.find('?'));
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i < path.size()) {
    const std::size_t j = path.find('/', i);
    const std::string seg = path.substr(i, j == std::string::npos ? std::string::npos : j - i);
    if (!seg.empty()) parts.push_back(seg);
    if (j == std::string::npos) break;
    i = j + 1;
  }
  return parts;
}

bool valid_id(const std::string& id) {
  static const std::regex re("[A-Za-z0-9_-]{1,64}");
  return std::regex_match(id, re);
}

json parse_body(const std::string& body) {
  if (body.empty()) return json::object();
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw ApiError{400, "format", std::string("request body is not JSON: ") + e.what()};
  }
  if (!j.is_object()) throw ApiError{400, "format", "request body must be a JSON object"};
  if (j.contains("v") && j["v"] != kApiVersion) {
    throw ApiError{400, "version", "request schema v" + j["v"].dump() + " is not supported (server speaks v" +
                                       std::to_string(kApiVersion) + ")"};
  }
  return j;
}

std::uint64_t seed_field(const json& j) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    std::size_t used = 0;
    try {
      const std::uint64_t v = std::stoull(s, &used);
      if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
  }
  throw ApiError{400, "format", "seed must be a non-negative integer or a decimal string"};
}

json legal_block(const GameState& s) {
  if (is_terminal(s) || !s.cursor || s.on_move != Faction::blue) return nullptr;
  json actions = json::array();
  for (const Action& a : legal_actions(s, *s.cursor)) actions.push_back(to_json(a));
  return {{"unit_id", *s.cursor}, {"actions", std::move(actions)}};
}

json state_body(const Service::Game& g) {
  return {{"v", kApiVersion},
          {"game_id", g.id},
          {"seq", g.events.size()},
          {"human", "blue"},
          {"opponent", g.opponent},
          {"status", g.status},
          {"terminal", is_terminal(g.state)},
          {"state", to_json(g.state)},
          {"legal", legal_block(g.state)},
          {"replay_id", g.status == "active" ? json(nullptr) : json(g.id)},
          {"error", g.error.empty() ? json(nullptr) : json(g.error)}};
}

json step_json(const ReplayStep& st) {
  return {{"phase", st.phase},
          {"unit_id", st.unit_id},
          {"faction", to_string(st.faction)},
          {"action", to_json(st.action)},
          {"events", to_json(st.events)},
          {"phase_events", to_json(st.phase_events)},
          {"audit", st.audit}};
}

/// Units that changed or disappeared between two states.
std::pair<json, json> unit_delta(const GameState& before, const GameState& after) {
  const json a = to_json(before)["units"];
  const json b = to_json(after)["units"];
  std::map<int, json> old;
  for (const json& u : a) old[u["id"].get<int>()] = u;
  json changed = json::array();
  for (const json& u : b) {
    auto it = old.find(u["id"].get<int>());
    if (it == old.end() || it->second != u) changed.push_back(u);
    if (it != old.end()) old.erase(it);
  }
  json removed = json::array();
  for (const auto& [id, u] : old) removed.push_back(id);
  return {changed, removed};
}

/// Applies one action of the unit on move, closing the phase when it
/// completes. Engine errors propagate and leave the game untouched.
ReplayStep commit(Service::Game& g, int unit_id, const Action& a, const json& audit, const std::string& actor) {
  GameState before;
  {
    std::lock_guard lk(g.mu);
    before = g.state;
  }
  Transition t = apply_action(before, unit_id, a);
  std::vector<ScoreEvent> closing;
  if (!is_terminal(t.state) && phase_complete(t.state)) {
    Transition p = advance_phase(t.state);
    closing = std::move(p.events);
    t.state = std::move(p.state);
  }
  ReplayStep st{before.phase, unit_id, before.on_move, a, t.events, closing, audit};
  auto [changed, removed] = unit_delta(before, t.state);
  std::lock_guard lk(g.mu);
  g.state = std::move(t.state);
  g.record.steps.push_back(st);
  g.events.push_back({{"v", kApiVersion},
                      {"type", "step"},
                      {"seq", g.events.size() + 1},
                      {"game_id", g.id},
                      {"actor", actor},
                      {"step", step_json(st)},
                      {"changed_units", std::move(changed)},
                      {"removed_units", std::move(removed)},
                      {"phase", g.state.phase},
                      {"on_move", to_string(g.state.on_move)},
                      {"cursor", g.state.cursor ? json(*g.state.cursor) : json(nullptr)},
                      {"score", g.state.score},
                      {"terminal", is_terminal(g.state)},
                      {"legal", legal_block(g.state)}});
  g.cv.notify_all();
  return st;
}

/// Plays red until blue is on move or the game ends; an agent error aborts
/// the game. Caller holds the game's write lock.
json play_ai_turns(Service::Game& g) {
  json steps = json::array();
  for (;;) {
    GameState s;
    {
      std::lock_guard lk(g.mu);
      if (g.status != "active" || is_terminal(g.state) || g.state.on_move != Faction::red) break;
      s = g.state;
    }
    const int unit = *s.cursor;
    try {
      Decision d = g.red->decide(s, unit);
      require_legal(s, unit, d.action, g.red->name());
      steps.push_back(step_json(commit(g, unit, d.action, d.audit, "ai")));
    } catch (const Error& e) {
      std::lock_guard lk(g.mu);
      g.status = "aborted";
      g.error = e.kind() + ": " + e.what();
    }
  }
  return steps;
}

std::string content_type_for(const std::filesystem::path& p) {
  static const std::map<std::string, std::string> types{
      {".html", "text/html; charset=utf-8"}, {".js", "text/javascript"}, {".mjs", "text/javascript"},
      {".css", "text/css"},   {".json", "application/json"}, {".svg", "image/svg+xml"},
      {".png", "image/png"},  {".ico", "image/x-icon"},       {".map", "application/json"},
      {".txt", "text/plain"}, {".wasm", "application/wasm"}};
  auto it = types.find(p.extension().string());
  return it == types.end() ? "application/octet-stream" : it->second;
}

}  // namespace

Service::Service(ServiceConfig cfg) : cfg_(std::move(cfg)), net_(std::make_unique<Net>()) {
  if (!cfg_.replay_dir.empty()) std::filesystem::create_directories(cfg_.replay_dir);
}

Service::~Service() { stop(); }

std::vector<std::string> Service::opponent_names() const {
  std::vector<std::string> names = scripted_policy_names();
  names.push_back("random");
  for (const auto& [name, agent] : cfg_.opponents) names.push_back(name);
  return names;
}

std::unique_ptr<Agent> Service::make_opponent(const std::string& name) const {
  if (auto it = cfg_.opponents.find(name); it != cfg_.opponents.end()) return it->second->clone();
  if (name == "random") return std::make_unique<RandomAgent>();
  for (const std::string& s : scripted_policy_names()) {
    if (s == name) return std::make_unique<BehaviorAgent>(scripted_behavior(name));
  }
  throw ApiError{400, "lookup", "unknown opponent '" + name + "'"};
}

std::shared_ptr<Service::Game> Service::find_game(const std::string& id) {
  std::lock_guard lk(games_mu_);
  auto it = games_.find(id);
  if (it == games_.end()) throw ApiError{404, "lookup", "no game '" + id + "'"};
  return it->second;
}

ApiResponse Service::handle(const std::string& method, const std::string& target, const std::string& body) {
  try {
    const std::vector<std::string> p = split_path(target);
    if (method == "OPTIONS") return {204, "text/plain", ""};
    const bool api = !p.empty() && (p[0] == "games" || p[0] == "replays" || p[0] == "agents");
    if (!api) {
      if (method != "GET" && method != "HEAD") throw ApiError{405, "method", method + " " + target};
      return static_file(target.substr(0, target.find('?')));
    }
    if (p[0] == "games") {
      if (p.size() == 1 && method == "POST") return create_game(parse_body(body));
      if (p.size() == 1 && method == "GET") return list_games();
      if (p.size() == 3 && p[2] == "state" && method == "GET") return game_state(p[1]);
      if (p.size() == 3 && p[2] == "actions" && method == "POST") return submit_action(p[1], parse_body(body));
    } else if (p[0] == "replays" && method == "GET") {
      if (p.size() == 1) return list_replays();
      if (p.size() == 2) return get_replay(p[1]);
      if (p.size() == 4 && p[2] == "steps") return replay_step(p[1], p[3]);
    } else if (p[0] == "agents" && p.size() == 1 && method == "GET") {
      return json_response(200, {{"v", kApiVersion}, {"opponents", opponent_names()},
                                 {"default", cfg_.default_opponent}});
    }
    throw ApiError{404, "lookup", "no endpoint " + method + " " + target};
  } catch (const ApiError& e) {
    return error_response(e);
  } catch (const Error& e) {
    return error_response({status_for(e.kind()), e.kind(), e.what()});
  } catch (const json::exception& e) {
    return error_response({400, "format", e.what()});
  }
}

ApiResponse Service::create_game(const json& body) {
  const std::string opponent = body.value("ai_opponent", cfg_.default_opponent);
  auto g = std::make_shared<Game>();
  g->red = make_opponent(opponent);
  g->opponent = opponent;

  std::uint64_t seed;
  {
    std::lock_guard lk(games_mu_);
    seed = next_game_;
  }
  if (body.contains("seed")) seed = seed_field(body["seed"]);
  GameState start;
  if (body.contains("scenario")) {
    start = scenario_from_json(body["scenario"]);
  } else {
    ScenarioParams params;
    if (body.contains("scenario_params")) params = scenario_params_from_json(body["scenario_params"]);
    start = generate_scenario(params, seed);
  }
  if (!is_terminal(start) && phase_complete(start)) start = advance_phase(start).state;

  const GameSeeds seeds{start.seed, mix_seed(seed, 1), mix_seed(seed, 2)};
  g->red->reset(seeds.red_policy);
  g->state = start;
  g->record.start = start;
  g->record.seeds = seeds;
  g->record.blue_agent = "human";
  g->record.red_agent = g->red->name();
  {
    std::lock_guard lk(games_mu_);
    do {
      g->id = "g" + std::to_string(next_game_++);
    } while (games_.count(g->id) ||
             (!cfg_.replay_dir.empty() && std::filesystem::exists(cfg_.replay_dir / (g->id + ".json"))));
    games_[g->id] = g;
  }

  std::lock_guard w(g->write_mu);
  // Red never moves first in generated scenarios, but a loaded one may.
  json ai_steps = play_ai_turns(*g);
  if (g->status != "active" || is_terminal(g->state)) finish(*g);
  std::lock_guard lk(g->mu);
  json out = state_body(*g);
  out["ai_steps"] = std::move(ai_steps);
  return json_response(201, out);
}

ApiResponse Service::list_games() {
  std::vector<std::shared_ptr<Game>> all;
  {
    std::lock_guard lk(games_mu_);
    for (const auto& [id, g] : games_) all.push_back(g);
  }
  json games = json::array();
  for (const auto& g : all) {
    std::lock_guard lk(g->mu);
    games.push_back({{"game_id", g->id},
                     {"opponent", g->opponent},
                     {"status", g->status},
                     {"phase", g->state.phase},
                     {"score", g->state.score}});
  }
  return json_response(200, {{"v", kApiVersion}, {"games", std::move(games)}});
}

ApiResponse Service::game_state(const std::string& id) {
  auto g = find_game(id);
  std::lock_guard lk(g->mu);
  return json_response(200, state_body(*g));
}

ApiResponse Service::submit_action(const std::string& id, const json& body) {
  auto g = find_game(id);
  if (!body.contains("unit_id") || !body.contains("action")) {
    throw ApiError{400, "format", "action request needs unit_id and action"};
  }
  const int unit_id = body["unit_id"].get<int>();
  const Action action = action_from_json(body["action"]);

  std::lock_guard w(g->write_mu);
  GameState s;
  {
    std::lock_guard lk(g->mu);
    if (g->status != "active" || is_terminal(g->state)) throw ApiError{409, "sequencing", "game is over"};
    s = g->state;
  }
  if (s.on_move != Faction::blue) {
    throw ApiError{409, "turn_order", "the human plays blue and red is on move"};
  }
  const Unit* u = s.find(unit_id);
  if (u != nullptr && u->faction != Faction::blue) {
    throw ApiError{409, "turn_order", "unit " + std::to_string(unit_id) + " belongs to red"};
  }
  apply_action(s, unit_id, action);  // throws naming the violated rule
  require_legal(s, unit_id, action, "human");
  const json applied = step_json(commit(*g, unit_id, action, nullptr, "human"));
  const json ai_steps = play_ai_turns(*g);
  {
    std::lock_guard lk(g->mu);
    if (g->status == "active" && !is_terminal(g->state)) {
      json out = state_body(*g);
      return json_response(200, {{"v", kApiVersion}, {"applied", applied}, {"ai_steps", ai_steps}, {"game", out}});
    }
  }
  finish(*g);
  std::lock_guard lk(g->mu);
  return json_response(200,
                       {{"v", kApiVersion}, {"applied", applied}, {"ai_steps", ai_steps}, {"game", state_body(*g)}});
}

void Service::finish(Game& g) {
  Replay r;
  {
    std::lock_guard lk(g.mu);
    if (g.status == "active") g.status = "finished";
    g.record.final_score = g.state.score;
    g.record.aborted = g.status == "aborted";
    g.record.abort_reason = g.error;
    r = g.record;
  }
  if (!cfg_.replay_dir.empty()) export_replay(r, cfg_.replay_dir / (g.id + ".json"));
  {
    std::lock_guard lk(replays_mu_);
    replays_[g.id] = r;
  }
  std::lock_guard lk(g.mu);
  g.events.push_back({{"v", kApiVersion},
                      {"type", "game_over"},
                      {"seq", g.events.size() + 1},
                      {"game_id", g.id},
                      {"status", g.status},
                      {"final_score", r.final_score},
                      {"replay_id", g.id},
                      {"error", g.error.empty() ? json(nullptr) : json(g.error)}});
  g.cv.notify_all();
}

Replay Service::load_replay(const std::string& id) {
  {
    std::lock_guard lk(replays_mu_);
    if (auto it = replays_.find(id); it != replays_.end()) return it->second;
  }
  if (!valid_id(id) || cfg_.replay_dir.empty() || !std::filesystem::exists(cfg_.replay_dir / (id + ".json"))) {
    throw ApiError{404, "lookup", "no replay '" + id + "'"};
  }
  Replay r = import_replay(cfg_.replay_dir / (id + ".json"));
  std::lock_guard lk(replays_mu_);
  replays_[id] = r;
  return r;
}

ApiResponse Service::list_replays() {
  std::set<std::string> ids;
  {
    std::lock_guard lk(replays_mu_);
    for (const auto& [id, r] : replays_) ids.insert(id);
  }
  if (!cfg_.replay_dir.empty()) {
    for (const auto& e : std::filesystem::directory_iterator(cfg_.replay_dir)) {
      const std::string stem = e.path().stem().string();
      if (e.path().extension() == ".json" && valid_id(stem)) ids.insert(stem);
    }
  }
  json list = json::array();
  for (const std::string& id : ids) {
    try {
      const Replay r = load_replay(id);
      list.push_back({{"id", id},
                      {"blue", r.blue_agent},
                      {"red", r.red_agent},
                      {"final_score", r.final_score},
                      {"steps", r.steps.size()},
                      {"aborted", r.aborted}});
    } catch (const Error&) {
      list.push_back({{"id", id}, {"error", "unreadable"}});
    }
  }
  return json_response(200, {{"v", kApiVersion}, {"replays", std::move(list)}});
}

ApiResponse Service::get_replay(const std::string& id) {
  return {200, "application/json", canonical_dump(load_replay(id))};
}

ApiResponse Service::replay_step(const std::string& id, const std::string& step) {
  const Replay r = load_replay(id);
  std::size_t k = 0;
  try {
    std::size_t used = 0;
    k = std::stoul(step, &used);
    if (used != step.size()) throw std::invalid_argument(step);
  } catch (const std::exception&) {
    throw ApiError{400, "format", "step must be a non-negative integer"};
  }
  if (k > r.steps.size()) throw ApiError{404, "lookup", "replay has " + std::to_string(r.steps.size()) + " steps"};
  return json_response(200, {{"v", kApiVersion}, {"replay_id", id}, {"step", k}, {"state", to_json(state_at_step(r, k))}});
}

ApiResponse Service::static_file(const std::string& path) {
  if (cfg_.static_dir.empty()) throw ApiError{404, "lookup", "no static files are served"};
  std::string rel = path;
  while (!rel.empty() && rel.front() == '/') rel.erase(rel.begin());
  for (const std::string& seg : split_path(rel)) {
    if (seg == ".." || seg.find('\\') != std::string::npos) throw ApiError{404, "lookup", "bad path"};
  }
  std::filesystem::path file = cfg_.static_dir / rel;
  if (rel.empty() || std::filesystem::is_directory(file)) file /= "index.html";
  if (!std::filesystem::is_regular_file(file)) throw ApiError{404, "lookup", "no file " + path};
  std::ifstream in(file, std::ios::binary);
  return {200, content_type_for(file), {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()}};
}

// --- transport -------------------------------------------------------------------

unsigned short Service::start() {
  if (acceptor_thread_.joinable()) return bound_port_;
  stopping_ = false;
  const tcp::endpoint ep(asio::ip::make_address(cfg_.host), cfg_.port);
  auto& acc = net_->acceptor;
  acc.open(ep.protocol());
  acc.set_option(asio::socket_base::reuse_address(true));
  acc.bind(ep);
  acc.listen();
  bound_port_ = acc.local_endpoint().port();
  acceptor_thread_ = std::thread([this] { accept_loop(); });
  return bound_port_;
}

void Service::run() {
  start();
  acceptor_thread_.join();
}

void Service::stop() {
  if (stopping_.exchange(true)) return;
  if (acceptor_thread_.joinable()) {
    // Wake the blocking accept with a throwaway connection.
    boost::system::error_code ec;
    tcp::socket poke(net_->io);
    const auto addr = cfg_.host == "0.0.0.0" ? asio::ip::make_address("127.0.0.1") : asio::ip::make_address(cfg_.host);
    poke.connect({addr, bound_port_}, ec);
    acceptor_thread_.join();
  }
  boost::system::error_code ec;
  net_->acceptor.close(ec);
  {
    std::lock_guard lk(games_mu_);
    for (auto& [id, g] : games_) {
      std::lock_guard glk(g->mu);
      g->cv.notify_all();
    }
  }
  std::vector<std::pair<std::shared_ptr<Conn>, std::thread>> conns;
  {
    std::lock_guard lk(conns_mu_);
    conns.swap(conns_);
  }
  for (auto& [c, t] : conns) c->socket.shutdown(tcp::socket::shutdown_both, ec);
  for (auto& [c, t] : conns) t.join();
}

void Service::accept_loop() {
  while (!stopping_) {
    auto conn = std::make_shared<Conn>(net_->io);
    boost::system::error_code ec;
    net_->acceptor.accept(conn->socket, ec);
    if (stopping_) break;
    if (ec) continue;
    std::lock_guard lk(conns_mu_);
    for (auto it = conns_.begin(); it != conns_.end();) {
      if (it->first->done) {
        it->second.join();
        it = conns_.erase(it);
      } else {
        ++it;
      }
    }
    conns_.emplace_back(conn, std::thread([this, conn] {
                          serve_connection(conn);
                          conn->done = true;
                        }));
  }
}

namespace {

void stream_events(tcp::socket& socket, Service::Game& g, const http::request<http::string_body>& req,
                   const std::atomic<bool>& stopping) {
  websocket::stream<tcp::socket&> ws(socket);
  boost::system::error_code ec;
  ws.accept(req, ec);
  if (ec) return;
  ws.text(true);
  std::size_t sent = 0;
  std::string snapshot;
  {
    std::lock_guard lk(g.mu);
    sent = g.events.size();
    snapshot = json{{"v", kApiVersion}, {"type", "snapshot"}, {"seq", sent}, {"game", state_body(g)}}.dump();
  }
  ws.write(asio::buffer(snapshot), ec);
  while (!ec && !stopping) {
    std::vector<std::string> out;
    {
      std::unique_lock lk(g.mu);
      g.cv.wait_for(lk, std::chrono::seconds(2), [&] { return stopping || g.events.size() > sent; });
      while (sent < g.events.size()) out.push_back(g.events[sent++].dump());
    }
    if (out.empty()) {
      // Idle: a ping finds out whether the client is still there.
      if (!stopping) ws.ping({}, ec);
      continue;
    }
    for (const std::string& msg : out) {
      ws.write(asio::buffer(msg), ec);
      if (ec) break;
    }
  }
  if (!ec) ws.close(websocket::close_code::going_away, ec);
}

}  // namespace

void Service::serve_connection(std::shared_ptr<Conn> conn) {
  beast::flat_buffer buffer;
  boost::system::error_code ec;
  while (!stopping_) {
    http::request_parser<http::string_body> parser;
    parser.body_limit(4u << 20);
    http::read(conn->socket, buffer, parser, ec);
    if (ec) break;
    http::request<http::string_body> req = parser.release();
    const std::string target(req.target());

    if (websocket::is_upgrade(req)) {
      const auto p = split_path(target);
      std::shared_ptr<Game> g;
      if (p.size() == 3 && p[0] == "games" && p[2] == "stream") {
        std::lock_guard lk(games_mu_);
        if (auto it = games_.find(p[1]); it != games_.end()) g = it->second;
      }
      if (g) {
        stream_events(conn->socket, *g, req, stopping_);
        return;
      }
      const ApiResponse r = error_response({404, "lookup", "no stream " + target});
      http::response<http::string_body> res{http::status::not_found, req.version()};
      res.set(http::field::content_type, r.content_type);
      res.body() = r.body;
      res.prepare_payload();
      http::write(conn->socket, res, ec);
      break;
    }

    const ApiResponse r = handle(std::string(req.method_string()), target, req.body());
    http::response<http::string_body> res{static_cast<http::status>(r.status), req.version()};
    res.set(http::field::server, "hexwar");
    res.set(http::field::content_type, r.content_type);
    res.set(http::field::access_control_allow_origin, "*");
    res.set(http::field::access_control_allow_methods, "GET, POST, OPTIONS");
    res.set(http::field::access_control_allow_headers, "Content-Type");
    res.keep_alive(req.keep_alive());
    if (req.method() != http::verb::head) res.body() = r.body;
    res.prepare_payload();
    http::write(conn->socket, res, ec);
    if (ec || !res.keep_alive()) break;
  }
  conn->socket.shutdown(tcp::socket::shutdown_send, ec);
}

}  // namespace hexwar
