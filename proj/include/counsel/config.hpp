#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "counsel/backends.hpp"
#include "counsel/llm.hpp"
#include "counsel/prompts.hpp"
#include "counsel/session.hpp"

namespace counsel {

inline constexpr const char* kConfigEnv = "COUNSEL_CONFIG";
inline constexpr const char* kDataDirEnv = "COUNSEL_DATA_DIR";

struct BackendConfig {
  // "live", "scripted" or "replay".
  std::string kind = "scripted";
  // Overrides the reported backend id (scripted and replay default to their kind).
  std::string id;
  std::string script;
  std::string cassette;
  // When set, every exchange is also written to this cassette.
  std::string record;
  LiveBackendConfig live;
};

struct RunConfig {
  int sessions = kDefaultSessionCount;
  BackendConfig backend;
  std::optional<BackendConfig> judge;
  std::uint64_t seed = 0;
  std::optional<int> stratify;
  int concurrency = 4;
  std::string corpus;
  std::string data_dir = "data";
  std::string prompt_dir;
  std::string audit_log;
  double effective_threshold = 1.5;
  GatewayConfig gateway;
  EngineConfig engine;
};

// Throws ConfigError on unknown keys or wrongly typed values.
RunConfig run_config_from_json(const Json& j);
RunConfig load_run_config(const std::filesystem::path& path);
// Reads the file named by `path`, else by COUNSEL_CONFIG, else defaults;
// COUNSEL_DATA_DIR then overrides the data directory.
RunConfig resolve_run_config(const std::optional<std::filesystem::path>& path);

std::shared_ptr<Backend> make_backend(const BackendConfig& config);

// Judges must not share the engine's model. Throws ConfigError.
void check_judge_distinct(const std::string& engine_id, const std::string& judge_id);

// Everything a run needs, built from a RunConfig.
struct Runtime {
  PromptLibrary prompts;
  Diagnostics diagnostics;
  std::shared_ptr<AuditLog> audit;
  std::shared_ptr<Gateway> engine;
  std::shared_ptr<Gateway> judge;

  LlmContext engine_ctx() { return {engine.get(), &prompts, &diagnostics}; }
  LlmContext judge_ctx() { return {judge.get(), &prompts, &diagnostics}; }
};

std::unique_ptr<Runtime> make_runtime(const RunConfig& config);

}  // namespace counsel
