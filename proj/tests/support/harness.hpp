#pragma once
// Shared by the unit tests and the acceptance runner: scripted model rigs,
// fixture paths and the two-session golden arc.

#include <filesystem>
#include <memory>
#include <string>

#include "counsel/backends.hpp"
#include "counsel/domain.hpp"
#include "counsel/json_io.hpp"
#include "counsel/llm.hpp"
#include "counsel/prompts.hpp"
#include "counsel/simulation.hpp"
#include "counsel/store.hpp"

namespace counsel::testing {

inline std::filesystem::path source_dir() { return COUNSEL_SOURCE_DIR; }
inline std::filesystem::path fixture(const std::string& rel) { return source_dir() / "fixtures" / rel; }

inline CaseFile load_case_file(const std::filesystem::path& path) {
  return validate_case(Json::parse(read_file(path)), path.stem().string());
}

// Engine and judge gateways over scripted backends, sharing one audit log.
// Retries never sleep.
struct Rig {
  PromptLibrary prompts = PromptLibrary::builtin();
  Diagnostics diagnostics;
  std::shared_ptr<AuditLog> audit = std::make_shared<AuditLog>();
  std::shared_ptr<Gateway> engine;
  std::shared_ptr<Gateway> judge;

  Rig(Script engine_script, Script judge_script, GatewayConfig config = {}) {
    config.backoff = {std::chrono::milliseconds(0)};
    engine = std::make_shared<Gateway>(
        std::make_shared<ScriptedBackend>(std::move(engine_script), "scripted-engine"), config, audit);
    judge = std::make_shared<Gateway>(
        std::make_shared<ScriptedBackend>(std::move(judge_script), "scripted-judge"), config, audit);
    engine->set_sleeper([](std::chrono::milliseconds) {});
    judge->set_sleeper([](std::chrono::milliseconds) {});
  }

  Rig(const std::string& engine_jsonl, const std::string& judge_jsonl, GatewayConfig config = {})
      : Rig(Script::parse(engine_jsonl), Script::parse(judge_jsonl), std::move(config)) {}

  // Both roles answered from the same rules.
  explicit Rig(const std::string& jsonl) : Rig(Script::parse(jsonl), Script::parse(jsonl)) {}

  LlmContext engine_ctx() { return {engine.get(), &prompts, &diagnostics}; }
  LlmContext judge_ctx() { return {judge.get(), &prompts, &diagnostics}; }
};

inline std::filesystem::path golden_dir() { return fixture("arc_happy_path"); }

inline Rig golden_rig() {
  return Rig(Script::load(golden_dir() / "script.jsonl"), Script::load(golden_dir() / "judge.jsonl"));
}

inline ArcRunOptions golden_options() {
  ArcRunOptions options;
  options.sessions = 2;
  options.seed = 7;
  return options;
}

// Runs the happy-path fixture and returns the arc JSON with timestamps masked.
inline Json run_golden_arc() {
  auto rig = golden_rig();
  auto c = load_case_file(golden_dir() / "case.json");
  auto arc = run_arc(rig.engine_ctx(), rig.judge_ctx(), c, golden_options());
  return mask_timestamps(to_json(arc));
}

}  // namespace counsel::testing
