#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "counsel/llm.hpp"

namespace counsel {

// One scripted reply. A rule matches when its role (if given) equals the
// request preset and every `match` substring occurs in the rendered prompt, or,
// for cassette entries, when `prompt_hash` equals the request hash.
struct ScriptRule {
  std::optional<RolePreset> role;
  std::vector<std::string> match;
  std::optional<std::string> prompt_hash;
  // Replies handed out in order; the last one repeats once the list is used up.
  std::vector<std::string> responses;
  // Simulated transport failure instead of a reply.
  std::optional<std::string> error;
  // Cassette entries are consumed: a used one no longer matches.
  bool consume = false;
};

struct Script {
  std::vector<ScriptRule> rules;

  // JSONL, one rule per line:
  //   {"role": "judgment", "match": "Identify the primary emotion", "response": "..."}
  // `match` may be a string or a list of strings; `responses` may replace
  // `response`; `{"role", "prompt_hash", "response"}` lines are cassette
  // entries. Blank lines and lines starting with '#' or "//" are skipped.
  static Script parse(std::string_view jsonl);
  static Script load(const std::filesystem::path& path);
};

// Deterministic offline backend. First matching rule wins.
class ScriptedBackend : public Backend {
 public:
  explicit ScriptedBackend(Script script, std::string id = "scripted");

  LlmResponse complete(const LlmRequest& request, const SamplingParams& sampling) override;
  std::string id() const override { return id_; }

  // Reply for `request` without going through a gateway. Throws ScriptMiss.
  std::string respond(const LlmRequest& request);

 private:
  const Script script_;
  std::string id_;
  std::mutex mutex_;
  std::vector<std::size_t> served_;
};

struct LiveBackendConfig {
  // Base URL of an OpenAI-compatible server, e.g. "https://api.deepseek.com".
  std::string endpoint;
  std::string path = "/v1/chat/completions";
  std::string model;
  // Name of the environment variable holding the API key.
  std::string api_key_env;
  bool send_top_k = true;
  int timeout_seconds = 120;
};

// Chat-completions client. Authentication failures raise a non-retryable
// TransportError; network errors, 429 and 5xx raise retryable ones.
class LiveBackend : public Backend {
 public:
  explicit LiveBackend(LiveBackendConfig config);

  LlmResponse complete(const LlmRequest& request, const SamplingParams& sampling) override;
  std::string id() const override { return config_.model; }

 private:
  LiveBackendConfig config_;
};

// Writes every successful exchange of the wrapped backend to a cassette
// (Script-compatible JSONL keyed by prompt hash).
class RecordingBackend : public Backend {
 public:
  RecordingBackend(std::shared_ptr<Backend> inner, const std::filesystem::path& cassette);

  LlmResponse complete(const LlmRequest& request, const SamplingParams& sampling) override;
  std::string id() const override { return inner_->id(); }

 private:
  std::shared_ptr<Backend> inner_;
  std::mutex mutex_;
  std::ofstream out_;
};

// Serves a recorded cassette; each entry answers once, in recorded order.
std::shared_ptr<Backend> make_replay_backend(const std::filesystem::path& cassette,
                                             std::string id = "replay");

}  // namespace counsel
