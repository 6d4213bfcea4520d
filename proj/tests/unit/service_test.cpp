#include <gtest/gtest.h>

#include <condition_variable>
#include <future>

#include "../support/harness.hpp"
#include "../support/scripts.hpp"
#include "counsel/errors.hpp"
#include "counsel/service.hpp"
#include "httplib.h"

using namespace counsel;
using namespace counsel::testing;
namespace fs = std::filesystem;

namespace {

const std::string kCaseInit = "preparing a realistic simulated patient";
const std::string kPatient = "You are a patient participating";

std::string engine_script() {
  ScriptBuilder b;
  b.add("judgment", {kCaseInit},
        Json{{"profile", "I am tired."}, {"guides", {{{"session_index", 1}, {"goal", "talk"}}}}}.dump());
  b.add("generation", {kPatient}, Json{{"patient_response", "[closing] That's all, thanks."}}.dump());
  b.add("judgment", {key::kTermination, "[closing]"}, "True");
  b.add("generation", {key::kCounselor, "[fail]"}, "not a reply");
  b.add("judgment", {key::kAdjustment},
        Json{{"new_therapy", "Cognitive Behavioral Therapy"}, {"reason", "Keep going."}}.dump());
  add_engine_defaults(b);
  return b.str();
}

std::string judge_script() {
  ScriptBuilder j;
  add_judge_defaults(j);
  return j.str();
}

// Holds counselor generation until released, so a turn can be caught in flight.
class GateBackend : public Backend {
 public:
  explicit GateBackend(std::shared_ptr<Backend> inner) : inner_(std::move(inner)) {}

  LlmResponse complete(const LlmRequest& request, const SamplingParams& sampling) override {
    if (request.prompt_key == "counselor") {
      std::unique_lock lock(mutex_);
      if (armed_) {
        entered_ = true;
        cv_.notify_all();
        cv_.wait(lock, [&] { return released_; });
      }
    }
    return inner_->complete(request, sampling);
  }
  std::string id() const override { return inner_->id(); }

  void arm() {
    std::lock_guard lock(mutex_);
    armed_ = true;
  }
  void wait_entered() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return entered_; });
  }
  void release() {
    std::lock_guard lock(mutex_);
    released_ = true;
    cv_.notify_all();
  }

 private:
  std::shared_ptr<Backend> inner_;
  std::mutex mutex_;
  std::condition_variable cv_;
  bool armed_ = false, entered_ = false, released_ = false;
};

struct Fixture {
  fs::path dir;
  std::shared_ptr<GateBackend> gate;
  Runtime runtime;
  std::unique_ptr<FileArcStore> store;
  std::unique_ptr<ApiService> service;

  explicit Fixture(const std::string& tag) {
    dir = fs::temp_directory_path() / ("counsel-service-" + std::to_string(::getpid()) + "-" + tag);
    fs::remove_all(dir);
    GatewayConfig config;
    config.backoff = {std::chrono::milliseconds(0)};
    gate = std::make_shared<GateBackend>(
        std::make_shared<ScriptedBackend>(Script::parse(engine_script()), "scripted-engine"));
    runtime.prompts = PromptLibrary::builtin();
    runtime.audit = std::make_shared<AuditLog>();
    runtime.engine = std::make_shared<Gateway>(gate, config, runtime.audit);
    runtime.judge = std::make_shared<Gateway>(
        std::make_shared<ScriptedBackend>(Script::parse(judge_script()), "scripted-judge"), config, runtime.audit);
    store = std::make_unique<FileArcStore>(dir);
    service = std::make_unique<ApiService>(runtime, *store);
  }
  ~Fixture() {
    service.reset();
    std::error_code ec;
    fs::remove_all(dir, ec);
  }

  ApiResponse call(std::string_view method, const std::string& path, const Json& body = Json::object(),
                   const std::map<std::string, std::string>& query = {}) {
    return service->handle(method, path, body.dump(), query);
  }

  std::string register_case() {
    auto c = Json::parse(read_file(fixture("corpus/stress-01.json")));
    c["id"] = "stress-01";
    auto r = call("POST", "/cases", c);
    EXPECT_EQ(r.status, 201) << r.body.dump();
    return r.body["case_id"];
  }

  std::string start_arc(int k) {
    auto r = call("POST", "/arcs", {{"case_id", register_case()}, {"K", k}});
    EXPECT_EQ(r.status, 201) << r.body.dump();
    return r.body["arc_id"];
  }
};

}  // namespace

TEST(Service, LiveArcFlow) {
  Fixture f("flow");
  auto id = f.start_arc(2);
  EXPECT_EQ(id.rfind("live-", 0), 0u);

  auto early = f.call("POST", "/arcs/" + id + "/sessions/current/messages", {{"text", "Hello?"}});
  EXPECT_EQ(early.status, 409);
  EXPECT_EQ(early.body["error"], "session_closed");

  auto s1 = f.call("POST", "/arcs/" + id + "/sessions");
  ASSERT_EQ(s1.status, 201) << s1.body.dump();
  EXPECT_EQ(s1.body["session"], 1);
  EXPECT_EQ(s1.body["therapy"], "Cognitive Behavioral Therapy");
  EXPECT_EQ(s1.body["decision"]["decision"], "initial");

  auto again = f.call("POST", "/arcs/" + id + "/sessions");
  EXPECT_EQ(again.status, 409);
  EXPECT_EQ(again.body["error"], "session_open");

  auto empty = f.call("POST", "/arcs/" + id + "/sessions/current/messages", {{"text", "   "}});
  EXPECT_EQ(empty.status, 400);
  EXPECT_EQ(empty.body["error"], "empty_message");

  auto turn = f.call("POST", "/arcs/" + id + "/sessions/current/messages", {{"text", "I can't sleep."}});
  ASSERT_EQ(turn.status, 200) << turn.body.dump();
  EXPECT_FALSE(turn.body["closed"].get<bool>());
  EXPECT_EQ(turn.body["annotations"]["strategy"], "Restatement");
  EXPECT_EQ(turn.body["annotations"]["attitude"], "Resistant");
  EXPECT_TRUE(turn.body["annotations"]["memory"].is_null());
  EXPECT_EQ(turn.body["annotations"]["phase"]["tag"], "Engagement");

  auto bye = f.call("POST", "/arcs/" + id + "/sessions/current/messages", {{"text", "[closing] Thanks."}});
  ASSERT_EQ(bye.status, 200);
  EXPECT_TRUE(bye.body["closed"].get<bool>());
  EXPECT_EQ(bye.body["termination"], "PatientClosed");
  EXPECT_TRUE(bye.body.contains("snapshot_id"));

  auto s2 = f.call("POST", "/arcs/" + id + "/sessions");
  ASSERT_EQ(s2.status, 201) << s2.body.dump();
  EXPECT_EQ(s2.body["session"], 2);
  EXPECT_EQ(s2.body["decision"]["decision"], "maintained");

  f.call("POST", "/arcs/" + id + "/sessions/current/messages", {{"text", "[closing] Same again."}});
  auto done = f.call("POST", "/arcs/" + id + "/sessions");
  EXPECT_EQ(done.status, 409);
  EXPECT_EQ(done.body["error"], "arc_complete");

  auto live = f.call("GET", "/arcs/" + id);
  ASSERT_EQ(live.status, 200);
  EXPECT_TRUE(live.body["live"].get<bool>());
  EXPECT_TRUE(live.body["complete"].get<bool>());
  EXPECT_EQ(live.body["arc"]["sessions"].size(), 2u);

  const std::string snapshot = live.body["snapshot_id"];
  auto stored = f.call("GET", "/arcs/" + snapshot);
  ASSERT_EQ(stored.status, 200);
  EXPECT_FALSE(stored.body["live"].get<bool>());
  EXPECT_EQ(stored.body["arc"], live.body["arc"]);
}

TEST(Service, ErrorMapping) {
  Fixture f("errors");
  EXPECT_EQ(f.call("GET", "/arcs/nope").status, 404);
  EXPECT_EQ(f.call("POST", "/arcs/nope/sessions").status, 404);
  EXPECT_EQ(f.call("POST", "/arcs/nope/sessions/current/messages", {{"text", "hi"}}).status, 404);
  EXPECT_EQ(f.call("GET", "/runs/run-9").status, 404);
  EXPECT_EQ(f.call("GET", "/nowhere").body["error"], "not_found");
  EXPECT_EQ(f.call("GET", "/cases").status, 405);
  EXPECT_EQ(f.call("POST", "/arcs", {{"case_id", "unknown"}}).status, 404);
  EXPECT_EQ(f.call("POST", "/arcs", {{"K", 2}}).status, 400);
  EXPECT_EQ(f.call("POST", "/arcs", {{"case_id", "x"}, {"K", 0}}).status, 400);

  auto schema = f.call("POST", "/cases", {{"id", "c"}, {"title", "t"}, {"category", "Nowhere"}});
  EXPECT_EQ(schema.status, 400);
  EXPECT_EQ(schema.body["error"], "schema");
  EXPECT_EQ(schema.body["field"], "category");

  auto garbage = f.service->handle("POST", "/cases", "{not json", {});
  EXPECT_EQ(garbage.status, 400);
  EXPECT_EQ(garbage.body["error"], "invalid_request");
}

TEST(Service, ConcurrentTurnIsRejected) {
  Fixture f("busy");
  auto id = f.start_arc(1);
  ASSERT_EQ(f.call("POST", "/arcs/" + id + "/sessions").status, 201);
  f.gate->arm();
  auto first = std::async(std::launch::async, [&] {
    return f.call("POST", "/arcs/" + id + "/sessions/current/messages", {{"text", "First."}});
  });
  f.gate->wait_entered();
  auto second = f.call("POST", "/arcs/" + id + "/sessions/current/messages", {{"text", "Second."}});
  EXPECT_EQ(second.status, 429);
  EXPECT_EQ(second.body["error"], "session_busy");
  EXPECT_EQ(f.call("POST", "/arcs/" + id + "/sessions").status, 429);
  f.gate->release();
  EXPECT_EQ(first.get().status, 200);
  auto arc = f.call("GET", "/arcs/" + id);
  EXPECT_EQ(arc.body["arc"]["sessions"][0]["turns"].size(), 2u);
}

TEST(Service, EngineFailureLeavesTheSessionOpen) {
  Fixture f("fail");
  auto id = f.start_arc(1);
  ASSERT_EQ(f.call("POST", "/arcs/" + id + "/sessions").status, 201);
  auto r = f.call("POST", "/arcs/" + id + "/sessions/current/messages", {{"text", "[fail] Fine."}});
  EXPECT_EQ(r.status, 502);
  EXPECT_EQ(r.body["error"], "turn_failed");
  auto arc = f.call("GET", "/arcs/" + id);
  EXPECT_TRUE(arc.body["arc"]["sessions"][0]["turns"].empty());
  EXPECT_EQ(f.call("POST", "/arcs/" + id + "/sessions/current/messages", {{"text", "Fine."}}).status, 200);
}

TEST(Service, BackgroundRunsAndAnalytics) {
  Fixture f("runs");
  auto r = f.call("POST", "/runs", {{"corpus", fixture("corpus").string()}, {"stratify", 1}, {"K", 1}, {"seed", 3}});
  ASSERT_EQ(r.status, 202) << r.body.dump();
  EXPECT_EQ(r.body["cases"], 10);
  const std::string run_id = r.body["run_id"];
  f.service->wait_for_runs();

  auto status = f.call("GET", "/runs/" + run_id);
  ASSERT_EQ(status.status, 200);
  EXPECT_EQ(status.body["status"], "done");
  EXPECT_EQ(status.body["completed"], 10);
  EXPECT_EQ(status.body["failed"], 0);
  for (const auto& arc : status.body["arcs"]) EXPECT_TRUE(arc["complete"].get<bool>());
  EXPECT_EQ(f.store->list().size(), 10u);

  auto by_run = f.call("GET", "/analytics", Json::object(), {{"run", run_id}});
  ASSERT_EQ(by_run.status, 200);
  EXPECT_EQ(by_run.body["emotions"]["total"], 10);
  auto stored = f.call("GET", "/analytics");
  EXPECT_EQ(stored.body["strategies"]["counts"]["Restatement"], 10);
  EXPECT_EQ(f.call("GET", "/analytics", Json::object(), {{"run", "run-99"}}).status, 404);

  EXPECT_EQ(f.call("POST", "/runs", {{"corpus", fixture("corpus").string()}, {"stratify", 3}}).body["error"], "corpus");
  EXPECT_EQ(f.call("POST", "/runs", Json::object()).status, 400);
}

TEST(Http, LoopbackServesTheApi) {
  Fixture f("http");
  HttpServer server(*f.service);
  const int port = server.start("127.0.0.1", 0);
  ASSERT_GT(port, 0);
  httplib::Client client("127.0.0.1", port);

  auto missing = client.Get("/arcs/nope");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  EXPECT_EQ(Json::parse(missing->body)["error"], "not_found");
  EXPECT_EQ(missing->get_header_value("Access-Control-Allow-Origin"), "*");

  auto c = Json::parse(read_file(fixture("corpus/love-01.json")));
  c["id"] = "love-01";
  auto created = client.Post("/cases", c.dump(), "application/json");
  ASSERT_TRUE(created);
  EXPECT_EQ(created->status, 201);

  auto arc = client.Post("/arcs", Json{{"case_id", "love-01"}, {"K", 1}}.dump(), "application/json");
  ASSERT_TRUE(arc);
  EXPECT_EQ(arc->status, 201);
  const std::string id = Json::parse(arc->body)["arc_id"];
  EXPECT_EQ(client.Post("/arcs/" + id + "/sessions", "", "application/json")->status, 201);
  auto turn = client.Post("/arcs/" + id + "/sessions/current/messages", Json{{"text", "[closing] Bye."}}.dump(),
                          "application/json");
  ASSERT_TRUE(turn);
  EXPECT_EQ(turn->status, 200);
  EXPECT_TRUE(Json::parse(turn->body)["closed"].get<bool>());

  auto analytics = client.Get("/analytics");
  ASSERT_TRUE(analytics);
  EXPECT_EQ(analytics->status, 200);
  server.stop();
}
