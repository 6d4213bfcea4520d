#include "counsel/llm.hpp"

#include <algorithm>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "counsel/errors.hpp"
#include "counsel/text.hpp"

namespace counsel {

SamplingParams sampling_for_role(RolePreset role) {
  switch (role) {
    case RolePreset::Generation:
      return {0.9, 0.75, 20};
    case RolePreset::Judgment:
      return {0.3, 0.75, 20};
    case RolePreset::Judge:
      return {0.0, 0.95, 64};
  }
  return {0.3, 0.75, 20};
}

std::string_view to_string(RolePreset role) {
  switch (role) {
    case RolePreset::Generation:
      return "generation";
    case RolePreset::Judgment:
      return "judgment";
    case RolePreset::Judge:
      return "judge";
  }
  return "judgment";
}

RolePreset parse_role_preset(std::string_view raw) {
  for (auto r : {RolePreset::Generation, RolePreset::Judgment, RolePreset::Judge}) {
    if (text::iequals(raw, to_string(r))) return r;
  }
  throw ValidationError(fmt::format("unknown role preset '{}'", raw));
}

std::string prompt_hash(const LlmRequest& request) {
  std::string material;
  material.reserve(request.system.size() + request.user.size() + 32);
  material += to_string(request.preset);
  material += '\x1f';
  material += request.system;
  material += '\x1f';
  material += request.user;
  return text::sha256_hex(material);
}

// ---------------------------------------------------------------------------

Json to_json(const AuditRecord& r) {
  Json j;
  j["timestamp"] = r.timestamp;
  j["role_preset"] = to_string(r.preset);
  j["prompt"] = r.prompt_key;
  j["prompt_hash"] = r.prompt_hash;
  j["raw_response"] = r.raw_response;
  j["outcome"] = r.outcome;
  j["attempts"] = r.attempts;
  return j;
}

AuditLog::AuditLog(const std::string& jsonl_path) : file_(jsonl_path, std::ios::app) {
  if (!file_) throw StorageError(fmt::format("cannot open audit log '{}'", jsonl_path));
}

void AuditLog::append(AuditRecord record) {
  std::lock_guard lock(mutex_);
  if (file_.is_open()) {
    file_ << to_json(record).dump() << '\n';
    file_.flush();
  }
  records_.push_back(std::move(record));
}

std::vector<AuditRecord> AuditLog::records() const {
  std::lock_guard lock(mutex_);
  return records_;
}

std::size_t AuditLog::size() const {
  std::lock_guard lock(mutex_);
  return records_.size();
}

std::size_t AuditLog::count(std::string_view prompt_key) const {
  std::lock_guard lock(mutex_);
  return static_cast<std::size_t>(std::count_if(
      records_.begin(), records_.end(), [&](const AuditRecord& r) { return r.prompt_key == prompt_key; }));
}

// ---------------------------------------------------------------------------

Gateway::Gateway(std::shared_ptr<Backend> backend, GatewayConfig config, std::shared_ptr<AuditLog> audit)
    : backend_(std::move(backend)),
      config_(std::move(config)),
      audit_(audit ? std::move(audit) : std::make_shared<AuditLog>()),
      in_flight_(std::max(1, config_.concurrency_cap)),
      sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
  if (!backend_) throw ConfigError("gateway needs a backend");
  if (config_.retry_limit < 0) throw ConfigError("retry limit must be non-negative");
}

SamplingParams Gateway::sampling(RolePreset role) const {
  if (auto it = config_.sampling_overrides.find(role); it != config_.sampling_overrides.end()) {
    return it->second;
  }
  return sampling_for_role(role);
}

LlmResponse Gateway::complete(const LlmRequest& request) {
  AuditRecord record;
  record.timestamp = text::utc_timestamp();
  record.preset = request.preset;
  record.prompt_key = request.prompt_key;
  record.prompt_hash = prompt_hash(request);

  const auto params = sampling(request.preset);
  const int max_attempts = config_.retry_limit + 1;

  in_flight_.acquire();
  struct Release {
    std::counting_semaphore<>& s;
    ~Release() { s.release(); }
  } release{in_flight_};

  for (int attempt = 1;; ++attempt) {
    record.attempts = attempt;
    try {
      auto response = backend_->complete(request, params);
      record.raw_response = response.text;
      record.outcome = "ok";
      audit_->append(std::move(record));
      return response;
    } catch (const TransportError& e) {
      if (!e.retryable()) {
        record.outcome = fmt::format("TransportError: {}", e.what());
        audit_->append(std::move(record));
        throw;
      }
      if (attempt >= max_attempts) {
        record.outcome = fmt::format("BackendExhausted: {}", e.what());
        audit_->append(std::move(record));
        throw BackendExhausted(fmt::format("{} attempts failed for '{}': {}", attempt,
                                           request.prompt_key, e.what()));
      }
      spdlog::warn("transport failure on '{}' (attempt {}/{}): {}", request.prompt_key, attempt,
                   max_attempts, e.what());
      if (!config_.backoff.empty()) {
        auto idx = std::min<std::size_t>(static_cast<std::size_t>(attempt - 1), config_.backoff.size() - 1);
        sleeper_(config_.backoff[idx]);
      }
    } catch (const ScriptMiss& e) {
      record.outcome = fmt::format("ScriptMiss: {}", e.what());
      audit_->append(std::move(record));
      throw;
    } catch (const std::exception& e) {
      record.outcome = fmt::format("error: {}", e.what());
      audit_->append(std::move(record));
      throw;
    }
  }
}

// ---------------------------------------------------------------------------

void Diagnostics::warn(Kind kind, std::string message) {
  spdlog::warn("{}", message);
  std::lock_guard lock(mutex_);
  entries_.emplace_back(kind, std::move(message));
}

std::vector<std::string> Diagnostics::messages() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [kind, message] : entries_) out.push_back(message);
  return out;
}

std::size_t Diagnostics::count(Kind kind) const {
  std::lock_guard lock(mutex_);
  return static_cast<std::size_t>(
      std::count_if(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == kind; }));
}

std::vector<std::pair<Diagnostics::Kind, std::string>> Diagnostics::entries() const {
  std::lock_guard lock(mutex_);
  return entries_;
}

void Diagnostics::clear() {
  std::lock_guard lock(mutex_);
  entries_.clear();
}

}  // namespace counsel
