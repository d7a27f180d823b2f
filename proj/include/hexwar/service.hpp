#ifndef HEXWAR_SERVICE_HPP
#define HEXWAR_SERVICE_HPP

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <string>
#include <thread>
#include <vector>

#include "hexwar/agent.hpp"
#include "hexwar/runner.hpp"

namespace hexwar {

inline constexpr int kApiVersion = 1;

struct ServiceConfig {
  std::string host = "127.0.0.1";
  unsigned short port = 8080;  ///< 0 picks a free port
  std::filesystem::path static_dir;  ///< empty: no static files
  std::filesystem::path replay_dir;  ///< empty: finished games stay in memory only
  /// Opponents besides the scripted policies and "random".
  std::map<std::string, std::shared_ptr<const Agent>> opponents;
  std::string default_opponent = "baseline";
};

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// Human (blue) versus AI (red) games over HTTP, with a WebSocket stream of
/// state changes per game.
///
///   POST /games                    {scenario_params?, scenario?, ai_opponent?, seed?}
///   GET  /games                    summaries
///   GET  /games/{id}/state         state + legal actions of the human unit on move
///   POST /games/{id}/actions       {unit_id, action}
///   WS   /games/{id}/stream        snapshot, then one event per step
///   GET  /replays                  summaries of finished games
///   GET  /replays/{id}             canonical replay
///   GET  /replays/{id}/steps/{k}   state after k recorded steps
///   GET  /agents                   available opponents
///
/// Anything else under GET is served from static_dir.
class Service {
 public:
  explicit Service(ServiceConfig cfg);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds and starts accepting in the background; returns the bound port.
  unsigned short start();
  /// Stops accepting, closes every connection and joins the workers.
  void stop();
  /// start() and block until stop() is called from elsewhere.
  void run();

  /// Transport-free entry point for the JSON endpoints and static files.
  ApiResponse handle(const std::string& method, const std::string& target, const std::string& body);

  std::vector<std::string> opponent_names() const;

  struct Game;  // per-game session
  struct Conn;  // one client connection

 private:
  struct Net;

  void accept_loop();
  void serve_connection(std::shared_ptr<Conn> conn);

  ApiResponse create_game(const nlohmann::json& body);
  ApiResponse list_games();
  ApiResponse game_state(const std::string& id);
  ApiResponse submit_action(const std::string& id, const nlohmann::json& body);
  ApiResponse list_replays();
  ApiResponse get_replay(const std::string& id);
  ApiResponse replay_step(const std::string& id, const std::string& step);
  ApiResponse static_file(const std::string& path);

  std::shared_ptr<Game> find_game(const std::string& id);
  std::unique_ptr<Agent> make_opponent(const std::string& name) const;
  void finish(Game& g);
  Replay load_replay(const std::string& id);

  ServiceConfig cfg_;
  std::unique_ptr<Net> net_;

  std::mutex games_mu_;
  std::map<std::string, std::shared_ptr<Game>> games_;
  std::uint64_t next_game_ = 1;

  std::mutex replays_mu_;
  std::map<std::string, Replay> replays_;

  std::atomic<bool> stopping_{false};
  std::thread acceptor_thread_;
  std::mutex conns_mu_;
  std::vector<std::pair<std::shared_ptr<Conn>, std::thread>> conns_;
  unsigned short bound_port_ = 0;
};

}  // namespace hexwar

#endif  // HEXWAR_SERVICE_HPP
