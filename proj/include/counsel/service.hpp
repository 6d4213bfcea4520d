#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "counsel/config.hpp"
#include "counsel/simulation.hpp"
#include "counsel/store.hpp"

namespace httplib {
class Server;
}

namespace counsel {

struct ApiResponse {
  int status = 200;
  Json body;
};

struct ServiceOptions {
  // When a turn is already running on a session, wait for it instead of
  // answering 429.
  bool wait_when_busy = false;
  EngineConfig engine;
  double effective_threshold = kDefaultEffectiveThreshold;
  int run_concurrency = 2;
};

// Transport-free implementation of the HTTP API:
//   POST /cases                               register a case file
//   POST /arcs {case_id, K}                   start a live arc
//   POST /arcs/{id}/sessions                  open the next session
//   POST /arcs/{id}/sessions/current/messages {text}
//   GET  /arcs/{id}                           live or stored arc
//   POST /runs {corpus, stratify, K, seed}    background simulation batch
//   GET  /runs/{id}
//   GET  /analytics?run=...
// Errors come back as {"error": code, "message": text}.
class ApiService {
 public:
  ApiService(Runtime& runtime, FileArcStore& store, ServiceOptions options = {});
  ~ApiService();

  ApiResponse handle(std::string_view method, std::string_view path, std::string_view body,
                     const std::map<std::string, std::string>& query = {});

  // Blocks until every background run has finished.
  void wait_for_runs();

 private:
  struct LiveArc;
  struct RunState;

  ApiResponse post_case(const Json& body);
  ApiResponse create_arc(const Json& body);
  ApiResponse open_next_session(const std::string& arc_id);
  ApiResponse post_message(const std::string& arc_id, const Json& body);
  ApiResponse get_arc(const std::string& arc_id);
  ApiResponse start_run(const Json& body);
  ApiResponse get_run(const std::string& run_id);
  ApiResponse analytics(const std::map<std::string, std::string>& query);

  std::shared_ptr<LiveArc> find_live(const std::string& arc_id);
  std::unique_lock<std::mutex> acquire(LiveArc& live);

  Runtime& runtime_;
  FileArcStore& store_;
  ServiceOptions options_;

  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<LiveArc>> live_;
  std::map<std::string, std::shared_ptr<RunState>> runs_;
  std::vector<std::thread> workers_;
  unsigned next_id_ = 1;
};

// Serves an ApiService over HTTP on a background thread.
class HttpServer {
 public:
  explicit HttpServer(ApiService& service);
  ~HttpServer();

  // Binds `host` on `port` (0 picks a free port) and returns the bound port.
  int start(const std::string& host, int port);
  // Serves in the calling thread until stop().
  bool listen(const std::string& host, int port);
  void stop();

 private:
  ApiService& service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace counsel
