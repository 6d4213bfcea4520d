#include "counsel/backends.hpp"

#include <algorithm>
#include <sstream>

#include <fmt/format.h>

#include "counsel/errors.hpp"
#include "counsel/text.hpp"

namespace counsel {

namespace {

ScriptRule parse_rule(const Json& j, std::size_t line_no) {
  auto fail = [&](const std::string& what) {
    throw ScriptParseError(fmt::format("script line {}: {}", line_no, what));
  };
  if (!j.is_object()) fail("rule must be a JSON object");

  ScriptRule rule;
  if (auto it = j.find("role"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) fail("'role' must be a string");
    try {
      rule.role = parse_role_preset(it->get<std::string>());
    } catch (const ValidationError& e) {
      fail(e.what());
    }
  }
  if (auto it = j.find("match"); it != j.end()) {
    if (it->is_string()) {
      rule.match.push_back(it->get<std::string>());
    } else if (it->is_array()) {
      for (const auto& m : *it) {
        if (!m.is_string()) fail("'match' entries must be strings");
        rule.match.push_back(m.get<std::string>());
      }
    } else {
      fail("'match' must be a string or a list of strings");
    }
  }
  if (auto it = j.find("prompt_hash"); it != j.end()) {
    if (!it->is_string()) fail("'prompt_hash' must be a string");
    rule.prompt_hash = it->get<std::string>();
    rule.consume = true;
  }
  if (auto it = j.find("response"); it != j.end()) {
    if (!it->is_string()) fail("'response' must be a string");
    rule.responses.push_back(it->get<std::string>());
  }
  if (auto it = j.find("responses"); it != j.end()) {
    if (!it->is_array() || it->empty()) fail("'responses' must be a non-empty list");
    for (const auto& r : *it) {
      if (!r.is_string()) fail("'responses' entries must be strings");
      rule.responses.push_back(r.get<std::string>());
    }
  }
  if (auto it = j.find("error"); it != j.end()) {
    if (!it->is_string()) fail("'error' must be a string");
    rule.error = it->get<std::string>();
  }
  if (rule.responses.empty() && !rule.error) fail("rule needs 'response', 'responses' or 'error'");
  if (rule.match.empty() && !rule.prompt_hash) fail("rule needs 'match' or 'prompt_hash'");
  return rule;
}

}  // namespace

Script Script::parse(std::string_view jsonl) {
  Script script;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto trimmed = text::trim(line);
    if (trimmed.empty() || trimmed.starts_with('#') || trimmed.starts_with("//")) continue;
    Json j = Json::parse(trimmed.begin(), trimmed.end(), nullptr, false);
    if (j.is_discarded()) throw ScriptParseError(fmt::format("script line {}: invalid JSON", line_no));
    script.rules.push_back(parse_rule(j, line_no));
  }
  if (script.rules.empty()) throw ScriptParseError("script has no rules");
  return script;
}

Script Script::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScriptParseError(fmt::format("cannot read script '{}'", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse(buffer.str());
  } catch (const ScriptParseError& e) {
    throw ScriptParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

// ---------------------------------------------------------------------------

ScriptedBackend::ScriptedBackend(Script script, std::string id)
    : script_(std::move(script)), id_(std::move(id)), served_(script_.rules.size(), 0) {}

std::string ScriptedBackend::respond(const LlmRequest& request) {
  const auto hash = prompt_hash(request);
  std::string prompt = request.system;
  if (!prompt.empty()) prompt += '\n';
  prompt += request.user;

  std::lock_guard lock(mutex_);
  for (std::size_t i = 0; i < script_.rules.size(); ++i) {
    const auto& rule = script_.rules[i];
    if (rule.role && *rule.role != request.preset) continue;
    if (rule.prompt_hash) {
      if (*rule.prompt_hash != hash) continue;
    } else {
      bool all = std::all_of(rule.match.begin(), rule.match.end(),
                             [&](const std::string& m) { return prompt.find(m) != std::string::npos; });
      if (!all) continue;
    }
    if (rule.consume && served_[i] >= rule.responses.size()) continue;

    auto served = served_[i]++;
    if (rule.error) {
      bool retryable = *rule.error != "auth";
      throw TransportError(fmt::format("scripted {} failure", *rule.error), retryable);
    }
    return rule.responses[std::min(served, rule.responses.size() - 1)];
  }
  throw ScriptMiss(hash);
}

LlmResponse ScriptedBackend::complete(const LlmRequest& request, const SamplingParams&) {
  LlmResponse response;
  response.text = respond(request);
  return response;
}

// ---------------------------------------------------------------------------

RecordingBackend::RecordingBackend(std::shared_ptr<Backend> inner, const std::filesystem::path& cassette)
    : inner_(std::move(inner)), out_(cassette, std::ios::app) {
  if (!out_) throw StorageError(fmt::format("cannot open cassette '{}'", cassette.string()));
}

LlmResponse RecordingBackend::complete(const LlmRequest& request, const SamplingParams& sampling) {
  auto response = inner_->complete(request, sampling);
  Json entry;
  entry["role"] = to_string(request.preset);
  entry["prompt"] = request.prompt_key;
  entry["prompt_hash"] = prompt_hash(request);
  entry["response"] = response.text;
  std::lock_guard lock(mutex_);
  out_ << entry.dump() << '\n';
  out_.flush();
  return response;
}

std::shared_ptr<Backend> make_replay_backend(const std::filesystem::path& cassette, std::string id) {
  return std::make_shared<ScriptedBackend>(Script::load(cassette), std::move(id));
}

}  // namespace counsel
