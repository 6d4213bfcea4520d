#include "counsel/config.hpp"

#include <cstdlib>
#include <set>

#include <fmt/format.h>

#include "counsel/errors.hpp"
#include "counsel/store.hpp"

namespace counsel {

namespace {

void reject_unknown(const Json& j, std::initializer_list<const char*> allowed, std::string_view where) {
  std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!keys.count(key)) throw ConfigError(fmt::format("unknown key '{}' in {}", key, where));
  }
}

template <class T>
void read(const Json& j, const char* key, T& out, std::string_view where) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return;
  try {
    out = it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(fmt::format("'{}' in {} has the wrong type", key, where));
  }
}

BackendConfig backend_from_json(const Json& j, std::string_view where) {
  if (!j.is_object()) throw ConfigError(fmt::format("{} must be an object", where));
  reject_unknown(j, {"kind", "id", "script", "cassette", "record", "endpoint", "path", "model", "api_key_env",
                     "send_top_k", "timeout_seconds"},
                 where);
  BackendConfig b;
  read(j, "kind", b.kind, where);
  read(j, "id", b.id, where);
  read(j, "script", b.script, where);
  read(j, "cassette", b.cassette, where);
  read(j, "record", b.record, where);
  read(j, "endpoint", b.live.endpoint, where);
  read(j, "path", b.live.path, where);
  read(j, "model", b.live.model, where);
  read(j, "api_key_env", b.live.api_key_env, where);
  read(j, "send_top_k", b.live.send_top_k, where);
  read(j, "timeout_seconds", b.live.timeout_seconds, where);
  if (b.kind != "live" && b.kind != "scripted" && b.kind != "replay") {
    throw ConfigError(fmt::format("{}: backend kind must be live, scripted or replay, not '{}'", where, b.kind));
  }
  return b;
}

std::string effective_id(const BackendConfig& b) {
  if (!b.id.empty()) return b.id;
  if (b.kind == "live") return b.live.model;
  return b.kind;
}

}  // namespace

RunConfig run_config_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  reject_unknown(j, {"K", "backend", "judge", "seed", "stratify", "concurrency", "corpus", "output_dir", "data_dir",
                     "prompt_dir", "audit_log", "effective_threshold", "gateway", "engine"},
                 "run config");
  RunConfig c;
  read(j, "K", c.sessions, "run config");
  read(j, "seed", c.seed, "run config");
  if (j.contains("stratify") && !j["stratify"].is_null()) {
    int n = 0;
    read(j, "stratify", n, "run config");
    c.stratify = n;
  }
  read(j, "concurrency", c.concurrency, "run config");
  read(j, "corpus", c.corpus, "run config");
  read(j, "output_dir", c.data_dir, "run config");
  read(j, "data_dir", c.data_dir, "run config");
  read(j, "prompt_dir", c.prompt_dir, "run config");
  read(j, "audit_log", c.audit_log, "run config");
  read(j, "effective_threshold", c.effective_threshold, "run config");
  if (auto it = j.find("backend"); it != j.end()) c.backend = backend_from_json(*it, "backend");
  if (auto it = j.find("judge"); it != j.end() && !it->is_null()) c.judge = backend_from_json(*it, "judge");
  if (auto it = j.find("gateway"); it != j.end()) {
    reject_unknown(*it, {"retry_limit", "concurrency_cap", "backoff_ms"}, "gateway");
    read(*it, "retry_limit", c.gateway.retry_limit, "gateway");
    read(*it, "concurrency_cap", c.gateway.concurrency_cap, "gateway");
    if (auto b = it->find("backoff_ms"); b != it->end()) {
      std::vector<int> ms;
      read(*it, "backoff_ms", ms, "gateway");
      c.gateway.backoff.clear();
      for (int m : ms) c.gateway.backoff.emplace_back(m);
    }
  }
  if (auto it = j.find("engine"); it != j.end()) {
    reject_unknown(*it, {"turn_cap", "stage_every_n", "memory", "strategy", "stage", "parallel_perception", "greeting"},
                   "engine");
    read(*it, "turn_cap", c.engine.turn_cap, "engine");
    read(*it, "stage_every_n", c.engine.stage_every_n, "engine");
    read(*it, "memory", c.engine.enable_memory, "engine");
    read(*it, "strategy", c.engine.enable_strategy, "engine");
    read(*it, "stage", c.engine.enable_stage, "engine");
    read(*it, "parallel_perception", c.engine.parallel_perception, "engine");
    read(*it, "greeting", c.engine.greeting, "engine");
  }
  if (c.sessions < 1) throw ConfigError("K must be at least 1");
  if (c.concurrency < 1) throw ConfigError("concurrency must be at least 1");
  if (c.engine.turn_cap < 1) throw ConfigError("turn_cap must be at least 1");
  if (c.stratify && *c.stratify < 1) throw ConfigError("stratify must be positive");
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::string raw;
  try {
    raw = read_file(path);
  } catch (const StorageError&) {
    throw ConfigError(fmt::format("cannot read config '{}'", path.string()));
  }
  Json j = Json::parse(raw, nullptr, false);
  if (j.is_discarded()) throw ConfigError(fmt::format("config '{}' is not valid JSON", path.string()));
  return run_config_from_json(j);
}

RunConfig resolve_run_config(const std::optional<std::filesystem::path>& path) {
  RunConfig c;
  if (path) {
    c = load_run_config(*path);
  } else if (const char* env = std::getenv(kConfigEnv); env && *env) {
    c = load_run_config(env);
  }
  if (const char* dir = std::getenv(kDataDirEnv); dir && *dir) c.data_dir = dir;
  return c;
}

std::shared_ptr<Backend> make_backend(const BackendConfig& config) {
  std::shared_ptr<Backend> backend;
  const auto id = effective_id(config);
  if (config.kind == "scripted") {
    if (config.script.empty()) throw ConfigError("scripted backend needs a script path");
    backend = std::make_shared<ScriptedBackend>(Script::load(config.script), id);
  } else if (config.kind == "replay") {
    if (config.cassette.empty()) throw ConfigError("replay backend needs a cassette path");
    backend = make_replay_backend(config.cassette, id);
  } else if (config.kind == "live") {
    backend = std::make_shared<LiveBackend>(config.live);
  } else {
    throw ConfigError(fmt::format("unknown backend kind '{}'", config.kind));
  }
  if (!config.record.empty()) backend = std::make_shared<RecordingBackend>(backend, config.record);
  return backend;
}

void check_judge_distinct(const std::string& engine_id, const std::string& judge_id) {
  if (engine_id == judge_id) {
    throw ConfigError(fmt::format("judge backend '{}' must differ from the engine backend", judge_id));
  }
}

std::unique_ptr<Runtime> make_runtime(const RunConfig& config) {
  auto rt = std::make_unique<Runtime>();
  rt->prompts = PromptLibrary::builtin();
  if (!config.prompt_dir.empty()) rt->prompts.load_overrides(config.prompt_dir);
  rt->audit = config.audit_log.empty() ? std::make_shared<AuditLog>() : std::make_shared<AuditLog>(config.audit_log);
  rt->engine = std::make_shared<Gateway>(make_backend(config.backend), config.gateway, rt->audit);
  if (config.judge) {
    auto judge_backend = make_backend(*config.judge);
    check_judge_distinct(rt->engine->backend_id(), judge_backend->id());
    rt->judge = std::make_shared<Gateway>(judge_backend, config.gateway, rt->audit);
  } else {
    rt->judge = rt->engine;
  }
  return rt;
}

}  // namespace counsel
