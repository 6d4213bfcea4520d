#include <chrono>
#include <cstdlib>

#include <fmt/format.h>

#include "counsel/backends.hpp"
#include "counsel/errors.hpp"
#include "httplib.h"

namespace counsel {

LiveBackend::LiveBackend(LiveBackendConfig config) : config_(std::move(config)) {
  if (config_.endpoint.empty()) throw ConfigError("live backend needs an endpoint URL");
  if (config_.model.empty()) throw ConfigError("live backend needs a model identifier");
}

LlmResponse LiveBackend::complete(const LlmRequest& request, const SamplingParams& sampling) {
  const char* key = config_.api_key_env.empty() ? nullptr : std::getenv(config_.api_key_env.c_str());
  if (!config_.api_key_env.empty() && (key == nullptr || *key == '\0')) {
    throw TransportError(fmt::format("credential variable {} is not set", config_.api_key_env), false);
  }

  Json body;
  body["model"] = config_.model;
  Json messages = Json::array();
  if (!request.system.empty()) messages.push_back({{"role", "system"}, {"content", request.system}});
  messages.push_back({{"role", "user"}, {"content", request.user}});
  body["messages"] = std::move(messages);
  body["temperature"] = sampling.temperature;
  body["top_p"] = sampling.top_p;
  if (config_.send_top_k && sampling.top_k) body["top_k"] = *sampling.top_k;
  body["stream"] = false;

  httplib::Client client(config_.endpoint);
  client.set_connection_timeout(std::chrono::seconds(10));
  client.set_read_timeout(std::chrono::seconds(config_.timeout_seconds));
  httplib::Headers headers;
  if (key) headers.emplace("Authorization", fmt::format("Bearer {}", key));

  auto started = std::chrono::steady_clock::now();
  auto result = client.Post(config_.path, headers, body.dump(), "application/json");
  if (!result) {
    throw TransportError(fmt::format("request to {} failed: {}", config_.endpoint,
                                     httplib::to_string(result.error())),
                         true);
  }
  const int status = result->status;
  if (status == 401 || status == 403) {
    throw TransportError(fmt::format("authentication rejected by {} (HTTP {})", config_.endpoint, status),
                         false);
  }
  if (status == 429 || status >= 500) {
    throw TransportError(fmt::format("HTTP {} from {}", status, config_.endpoint), true);
  }
  if (status != 200) {
    throw TransportError(fmt::format("HTTP {} from {}: {}", status, config_.endpoint, result->body), false);
  }

  Json reply = Json::parse(result->body, nullptr, false);
  if (reply.is_discarded()) throw TransportError("backend returned a non-JSON body", true);

  LlmResponse response;
  try {
    response.text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(fmt::format("unexpected completion shape: {}", e.what()), true);
  }
  response.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - started)
                            .count();
  if (auto usage = reply.find("usage"); usage != reply.end() && usage->is_object()) {
    if (auto p = usage->find("prompt_tokens"); p != usage->end() && p->is_number_integer()) {
      response.prompt_tokens = p->get<int>();
    }
    if (auto c = usage->find("completion_tokens"); c != usage->end() && c->is_number_integer()) {
      response.completion_tokens = c->get<int>();
    }
  }
  return response;
}

}  // namespace counsel
