#include "counsel/service.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "counsel/errors.hpp"
#include "counsel/evaluation.hpp"
#include "counsel/json_io.hpp"
#include "counsel/text.hpp"
#include "httplib.h"

namespace counsel {

struct ApiService::LiveArc {
  std::string id;
  CaseFile case_file;
  ArcRecord arc;
  std::optional<TherapyPlan> next_plan;
  std::string snapshot_id;
  std::mutex busy;
};

struct ApiService::RunState {
  std::string id;
  std::mutex mutex;
  std::string status = "running";
  std::size_t cases = 0;
  std::vector<CorpusIssue> issues;
  std::vector<ArcOutcome> outcomes;
  std::string error;
};

namespace {

ApiResponse error(int status, std::string code, std::string message) {
  return {status, Json{{"error", std::move(code)}, {"message", std::move(message)}}};
}

std::vector<std::string> segments(std::string_view path) {
  std::vector<std::string> out;
  for (auto& part : text::split(path, "/")) {
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

Json annotations_view(const Turn& counselor, const TherapyPlan& therapy) {
  Json j;
  const auto& a = *counselor.annotations;
  j["emotion"] = to_string(a.state.emotion);
  j["intensity"] = a.state.intensity.value();
  j["attitude"] = a.state.attitude ? Json(to_string(*a.state.attitude)) : Json(nullptr);
  j["strategy"] = a.strategy ? Json(std::string(a.strategy->name)) : Json(nullptr);
  j["guidance"] = a.guidance;
  j["memory"] = a.memory.has_value() ? Json(a.memory.text) : Json(nullptr);
  j["phase"] = a.phase ? Json{{"tag", to_string(a.phase->tag)}, {"text", a.phase->text}} : Json(nullptr);
  j["therapy"] = therapy.render();
  return j;
}

}  // namespace

ApiService::ApiService(Runtime& runtime, FileArcStore& store, ServiceOptions options)
    : runtime_(runtime), store_(store), options_(std::move(options)) {}

ApiService::~ApiService() { wait_for_runs(); }

void ApiService::wait_for_runs() {
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(mutex_);
    workers.swap(workers_);
  }
  for (auto& w : workers) w.join();
}

ApiResponse ApiService::handle(std::string_view method, std::string_view path, std::string_view body,
                               const std::map<std::string, std::string>& query) {
  const auto parts = segments(path);
  auto parse_body = [&]() {
    if (text::trim(body).empty()) return Json::object();
    Json j = Json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ValidationError("request body must be a JSON object");
    return j;
  };
  auto is = [&](std::string_view m) { return method == m; };

  try {
    if (parts.size() == 1 && parts[0] == "cases") {
      if (!is("POST")) return error(405, "method_not_allowed", "use POST");
      return post_case(parse_body());
    }
    if (!parts.empty() && parts[0] == "arcs") {
      if (parts.size() == 1) {
        if (!is("POST")) return error(405, "method_not_allowed", "use POST");
        return create_arc(parse_body());
      }
      if (parts.size() == 2) {
        if (!is("GET")) return error(405, "method_not_allowed", "use GET");
        return get_arc(parts[1]);
      }
      if (parts.size() == 3 && parts[2] == "sessions") {
        if (!is("POST")) return error(405, "method_not_allowed", "use POST");
        return open_next_session(parts[1]);
      }
      if (parts.size() == 5 && parts[2] == "sessions" && parts[3] == "current" && parts[4] == "messages") {
        if (!is("POST")) return error(405, "method_not_allowed", "use POST");
        return post_message(parts[1], parse_body());
      }
    }
    if (!parts.empty() && parts[0] == "runs") {
      if (parts.size() == 1) {
        if (!is("POST")) return error(405, "method_not_allowed", "use POST");
        return start_run(parse_body());
      }
      if (parts.size() == 2) {
        if (!is("GET")) return error(405, "method_not_allowed", "use GET");
        return get_run(parts[1]);
      }
    }
    if (parts.size() == 1 && parts[0] == "analytics") {
      if (!is("GET")) return error(405, "method_not_allowed", "use GET");
      return analytics(query);
    }
    return error(404, "not_found", fmt::format("no route for {} {}", method, path));
  } catch (const NotFound& e) {
    return error(404, "not_found", e.what());
  } catch (const SchemaError& e) {
    auto r = error(400, "schema", e.what());
    r.body["field"] = e.field();
    return r;
  } catch (const ValidationError& e) {
    return error(400, "invalid_request", e.what());
  } catch (const PreconditionError& e) {
    return error(409, "conflict", e.what());
  } catch (const CorpusError& e) {
    return error(400, "corpus", e.what());
  } catch (const ConfigError& e) {
    return error(400, "config", e.what());
  } catch (const Error& e) {
    return error(502, "engine_error", e.what());
  } catch (const std::exception& e) {
    spdlog::error("unhandled error on {} {}: {}", method, path, e.what());
    return error(500, "internal", e.what());
  }
}

ApiResponse ApiService::post_case(const Json& body) {
  auto c = validate_case(body);
  store_.save_case(c);
  return {201, Json{{"case_id", c.id}}};
}

std::shared_ptr<ApiService::LiveArc> ApiService::find_live(const std::string& arc_id) {
  std::lock_guard lock(mutex_);
  auto it = live_.find(arc_id);
  return it == live_.end() ? nullptr : it->second;
}

std::unique_lock<std::mutex> ApiService::acquire(LiveArc& live) {
  if (options_.wait_when_busy) return std::unique_lock(live.busy);
  return std::unique_lock(live.busy, std::try_to_lock);
}

ApiResponse ApiService::create_arc(const Json& body) {
  auto it = body.find("case_id");
  if (it == body.end() || !it->is_string()) throw ValidationError("'case_id' is required");
  int sessions = kDefaultSessionCount;
  if (auto k = body.find("K"); k != body.end()) {
    if (!k->is_number_integer() || k->get<int>() < 1) throw ValidationError("'K' must be a positive integer");
    sessions = k->get<int>();
  }
  auto live = std::make_shared<LiveArc>();
  live->case_file = store_.load_case(it->get<std::string>());
  auto ctx = runtime_.engine_ctx();
  auto plan = select_initial_therapy(ctx, live->case_file);

  live->arc.case_id = live->case_file.id;
  live->arc.planned_sessions = sessions;
  live->arc.decisions.push_back(initial_decision(plan));
  live->arc.manifest.backend_id = runtime_.engine->backend_id();
  live->arc.manifest.judge_backend_id = runtime_.judge->backend_id();
  for (auto role : {RolePreset::Generation, RolePreset::Judgment}) {
    live->arc.manifest.sampling[std::string(to_string(role))] = runtime_.engine->sampling(role);
  }
  live->arc.manifest.sampling["judge"] = runtime_.judge->sampling(RolePreset::Judge);
  live->arc.manifest.started_at = text::utc_timestamp();
  live->next_plan = plan;

  {
    std::lock_guard lock(mutex_);
    live->id = fmt::format("live-{}", text::sha256_hex(fmt::format("{}/{}/{}", live->arc.case_id, next_id_++,
                                                                    live->arc.manifest.started_at))
                                          .substr(0, 12));
    live_[live->id] = live;
  }
  return {201, Json{{"arc_id", live->id}, {"K", sessions}, {"therapy", plan.render()}}};
}

ApiResponse ApiService::open_next_session(const std::string& arc_id) {
  auto live = find_live(arc_id);
  if (!live) throw NotFound(fmt::format("no live arc '{}'", arc_id));
  auto lock = acquire(*live);
  if (!lock.owns_lock()) return error(429, "session_busy", "a turn is in progress");

  auto& arc = live->arc;
  if (!arc.sessions.empty() && !arc.sessions.back().closed()) {
    return error(409, "session_open", fmt::format("session {} is still open", arc.sessions.back().index));
  }
  if (static_cast<int>(arc.sessions.size()) >= arc.planned_sessions) {
    return error(409, "arc_complete", "all planned sessions have been held");
  }
  if (!arc.sessions.empty()) {
    auto engine = runtime_.engine_ctx();
    auto judge = runtime_.judge_ctx();
    live->next_plan = advance_arc(engine, judge, arc, options_.effective_threshold);
  }
  auto& session = open_session(arc, *live->next_plan, options_.engine);
  Json out{{"arc_id", arc_id},
           {"session", session.index},
           {"therapy", session.therapy.render()},
           {"opening", session.opening}};
  out["decision"] = to_json(arc.decisions.back());
  return {201, std::move(out)};
}

ApiResponse ApiService::post_message(const std::string& arc_id, const Json& body) {
  auto it = body.find("text");
  if (it == body.end() || !it->is_string() || text::trim(it->get<std::string>()).empty()) {
    return error(400, "empty_message", "'text' must be a non-empty string");
  }
  auto live = find_live(arc_id);
  if (!live) throw NotFound(fmt::format("no live arc '{}'", arc_id));
  auto lock = acquire(*live);
  if (!lock.owns_lock()) return error(429, "session_busy", "a turn is already in progress on this session");

  auto& arc = live->arc;
  if (arc.sessions.empty() || arc.sessions.back().closed()) {
    return error(409, "session_closed", "there is no open session; open one first");
  }
  auto ctx = runtime_.engine_ctx();
  TurnOutcome outcome;
  try {
    outcome = run_turn(ctx, options_.engine, arc, it->get<std::string>());
  } catch (const PreconditionError&) {
    throw;
  } catch (const Error& e) {
    return error(502, "turn_failed", e.what());
  }
  const auto& session = arc.sessions.back();
  Json out{{"arc_id", arc_id},
           {"session", session.index},
           {"counselor_text", outcome.counselor.text},
           {"closed", session.closed()},
           {"termination", session.termination ? Json(to_string(*session.termination)) : Json(nullptr)}};
  out["annotations"] = annotations_view(outcome.counselor, session.therapy);
  if (session.closed()) {
    if (arc.complete()) arc.manifest.finished_at = text::utc_timestamp();
    live->snapshot_id = store_.persist(arc);
    out["snapshot_id"] = live->snapshot_id;
  }
  return {200, std::move(out)};
}

ApiResponse ApiService::get_arc(const std::string& arc_id) {
  if (auto live = find_live(arc_id)) {
    std::lock_guard lock(live->busy);
    Json out{{"arc_id", arc_id}, {"live", true}, {"complete", live->arc.complete()}};
    out["snapshot_id"] = live->snapshot_id.empty() ? Json(nullptr) : Json(live->snapshot_id);
    out["arc"] = to_json(live->arc);
    return {200, std::move(out)};
  }
  auto arc = store_.load(arc_id);
  Json out{{"arc_id", arc_id}, {"live", false}, {"complete", arc.complete()}};
  out["arc"] = to_json(arc);
  return {200, std::move(out)};
}

ApiResponse ApiService::start_run(const Json& body) {
  auto corpus = body.find("corpus");
  if (corpus == body.end() || !corpus->is_string()) throw ValidationError("'corpus' is required");
  std::optional<int> stratify;
  if (auto s = body.find("stratify"); s != body.end() && !s->is_null()) {
    if (!s->is_number_integer()) throw ValidationError("'stratify' must be an integer");
    stratify = s->get<int>();
  }
  ArcRunOptions options;
  options.engine = options_.engine;
  options.effective_threshold = options_.effective_threshold;
  if (auto k = body.find("K"); k != body.end()) {
    if (!k->is_number_integer() || k->get<int>() < 1) throw ValidationError("'K' must be a positive integer");
    options.sessions = k->get<int>();
  }
  if (auto s = body.find("seed"); s != body.end()) {
    if (!s->is_number_unsigned() && !s->is_number_integer()) throw ValidationError("'seed' must be an integer");
    options.seed = s->get<std::uint64_t>();
  }
  auto load = load_corpus(corpus->get<std::string>(), stratify, options.seed);

  auto run = std::make_shared<RunState>();
  run->cases = load.cases.size();
  run->issues = load.issues;
  {
    std::lock_guard lock(mutex_);
    run->id = fmt::format("run-{}", next_id_++);
    runs_[run->id] = run;
    workers_.emplace_back([this, run, cases = std::move(load.cases), options] {
      auto engine = runtime_.engine_ctx();
      auto judge = runtime_.judge_ctx();
      try {
        auto outcomes = run_batch(engine, judge, cases, options, &store_, options_.run_concurrency);
        std::lock_guard guard(run->mutex);
        run->outcomes = std::move(outcomes);
        run->status = "done";
      } catch (const std::exception& e) {
        std::lock_guard guard(run->mutex);
        run->status = "failed";
        run->error = e.what();
      }
    });
  }
  return {202, Json{{"run_id", run->id}, {"cases", run->cases}, {"issues", run->issues.size()}}};
}

ApiResponse ApiService::get_run(const std::string& run_id) {
  std::shared_ptr<RunState> run;
  {
    std::lock_guard lock(mutex_);
    auto it = runs_.find(run_id);
    if (it == runs_.end()) throw NotFound(fmt::format("no run '{}'", run_id));
    run = it->second;
  }
  std::lock_guard lock(run->mutex);
  Json out{{"run_id", run_id}, {"status", run->status}, {"cases", run->cases}};
  Json arcs = Json::array();
  std::size_t failed = 0;
  for (const auto& o : run->outcomes) {
    if (o.error) ++failed;
    arcs.push_back({{"case_id", o.case_id},
                    {"arc_id", o.arc_id},
                    {"complete", o.arc.complete()},
                    {"error", o.error ? Json(*o.error) : Json(nullptr)}});
  }
  out["completed"] = run->outcomes.size() - failed;
  out["failed"] = failed;
  out["arcs"] = std::move(arcs);
  Json issues = Json::array();
  for (const auto& i : run->issues) issues.push_back({{"file", i.file}, {"field", i.field}, {"message", i.message}});
  out["issues"] = std::move(issues);
  if (!run->error.empty()) out["error"] = run->error;
  return {200, std::move(out)};
}

ApiResponse ApiService::analytics(const std::map<std::string, std::string>& query) {
  std::vector<ArcRecord> arcs;
  if (auto it = query.find("run"); it != query.end()) {
    std::shared_ptr<RunState> run;
    {
      std::lock_guard lock(mutex_);
      auto found = runs_.find(it->second);
      if (found == runs_.end()) throw NotFound(fmt::format("no run '{}'", it->second));
      run = found->second;
    }
    std::lock_guard lock(run->mutex);
    for (const auto& o : run->outcomes) arcs.push_back(o.arc);
  } else {
    for (const auto& id : store_.list()) arcs.push_back(store_.load(id));
  }
  return {200, to_json(analytics_extract(arcs))};
}

// ---------------------------------------------------------------------------

HttpServer::HttpServer(ApiService& service) : service_(service), server_(std::make_unique<httplib::Server>()) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> query;
    for (const auto& [key, value] : req.params) query.emplace(key, value);
    auto result = service_.handle(req.method, req.path, req.body, query);
    res.status = result.status;
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_content(result.body.dump(), "application/json");
  };
  server_->Get(".*", handler);
  server_->Post(".*", handler);
  server_->Options(".*", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
  int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw ConfigError(fmt::format("cannot bind {}:{}", host, port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

bool HttpServer::listen(const std::string& host, int port) { return server_->listen(host, port); }

void HttpServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace counsel
