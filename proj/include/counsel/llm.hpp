#pragma once

#include <chrono>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "counsel/domain.hpp"
#include "counsel/sampling.hpp"

namespace counsel {

struct LlmRequest {
  RolePreset preset = RolePreset::Judgment;
  // Template key the prompt was rendered from ("emotion", "memory", ...).
  // Carried into the audit log so traffic can be counted per stage.
  std::string prompt_key;
  std::string system;
  std::string user;
  std::optional<int> max_output_words;
};

struct LlmResponse {
  std::string text;
  std::int64_t latency_ms = 0;
  std::optional<int> prompt_tokens;
  std::optional<int> completion_tokens;
};

// Stable hash over the preset and both prompt texts.
std::string prompt_hash(const LlmRequest& request);

class Backend {
 public:
  virtual ~Backend() = default;
  virtual LlmResponse complete(const LlmRequest& request, const SamplingParams& sampling) = 0;
  virtual std::string id() const = 0;
};

struct AuditRecord {
  std::string timestamp;
  RolePreset preset = RolePreset::Judgment;
  std::string prompt_key;
  std::string prompt_hash;
  std::string raw_response;
  // "ok", or the error class and message of the final failure.
  std::string outcome;
  int attempts = 0;
};

Json to_json(const AuditRecord& r);

// Append-only, thread-safe. Mirrors every record to a JSONL file when one is
// attached.
class AuditLog {
 public:
  AuditLog() = default;
  explicit AuditLog(const std::string& jsonl_path);

  void append(AuditRecord record);
  std::vector<AuditRecord> records() const;
  std::size_t size() const;
  std::size_t count(std::string_view prompt_key) const;

 private:
  mutable std::mutex mutex_;
  std::vector<AuditRecord> records_;
  std::ofstream file_;
};

struct GatewayConfig {
  int retry_limit = 2;
  std::vector<std::chrono::milliseconds> backoff = {std::chrono::milliseconds(500),
                                                    std::chrono::milliseconds(2000)};
  int concurrency_cap = 4;
  std::map<RolePreset, SamplingParams> sampling_overrides;
};

// Provider-agnostic access point. Applies the role preset, retries retryable
// transport failures with backoff, bounds in-flight requests and audits every
// call exactly once.
class Gateway {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  Gateway(std::shared_ptr<Backend> backend, GatewayConfig config = {},
          std::shared_ptr<AuditLog> audit = nullptr);

  LlmResponse complete(const LlmRequest& request);

  SamplingParams sampling(RolePreset role) const;
  std::string backend_id() const { return backend_->id(); }
  AuditLog& audit() { return *audit_; }
  const AuditLog& audit() const { return *audit_; }
  const GatewayConfig& config() const { return config_; }

  // Tests replace the real sleep to keep retry paths fast.
  void set_sleeper(Sleeper sleeper) { sleeper_ = std::move(sleeper); }

 private:
  std::shared_ptr<Backend> backend_;
  GatewayConfig config_;
  std::shared_ptr<AuditLog> audit_;
  std::counting_semaphore<> in_flight_;
  Sleeper sleeper_;
};

// Returns the first balanced top-level JSON object in `raw`, tolerating code
// fences, leading prose and trailing commentary. Throws NoJsonFound.
Json extract_json_object(std::string_view raw);

// Collected non-fatal events (word-cap truncations, fallbacks, fail-open
// judgments). Thread-safe; also logged through spdlog.
class Diagnostics {
 public:
  enum class Kind { WordCap, Fallback, FailOpen, Other };

  void warn(Kind kind, std::string message);
  std::vector<std::string> messages() const;
  std::size_t count(Kind kind) const;
  std::vector<std::pair<Kind, std::string>> entries() const;
  void clear();

 private:
  mutable std::mutex mutex_;
  std::vector<std::pair<Kind, std::string>> entries_;
};

// Everything a stage needs to talk to a model.
struct LlmContext {
  Gateway* gateway = nullptr;
  const class PromptLibrary* prompts = nullptr;
  Diagnostics* diagnostics = nullptr;
};

}  // namespace counsel
