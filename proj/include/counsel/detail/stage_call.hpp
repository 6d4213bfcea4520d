#pragma once

#include <map>
#include <string>
#include <string_view>
#include <utility>

#include <fmt/format.h>

#include "counsel/errors.hpp"
#include "counsel/llm.hpp"
#include "counsel/prompts.hpp"

namespace counsel::detail {

inline constexpr std::string_view kJsonNudge = "Return only the JSON object.";
inline constexpr std::string_view kBoolNudge = "Return only True or False.";

inline LlmRequest render_request(const LlmContext& ctx, std::string_view key, RolePreset preset,
                                 const std::map<std::string, std::string>& values) {
  if (!ctx.gateway || !ctx.prompts) throw ConfigError("stage called without a gateway or prompt library");
  LlmRequest request;
  request.preset = preset;
  request.prompt_key = std::string(key);
  request.user = ctx.prompts->get(key).render(values);
  return request;
}

inline void warn(const LlmContext& ctx, Diagnostics::Kind kind, std::string message) {
  if (ctx.diagnostics) {
    ctx.diagnostics->warn(kind, std::move(message));
  }
}

// Sends `request` and hands the raw text to `parse`. When `parse` throws
// ParseFailure the request is re-sent once with `nudge` appended; a second
// ParseFailure becomes `StageError`. Transport errors pass through untouched.
template <class StageError, class Parse>
auto call_with_repair(const LlmContext& ctx, LlmRequest request, std::string_view nudge, Parse&& parse) {
  try {
    return parse(ctx.gateway->complete(request).text);
  } catch (const ParseFailure& first) {
    request.user += "\n\n";
    request.user += nudge;
    try {
      return parse(ctx.gateway->complete(request).text);
    } catch (const ParseFailure& second) {
      throw StageError(fmt::format("{}: unusable model output after one repair retry ({}; then {})",
                                   request.prompt_key, first.what(), second.what()));
    }
  }
}

}  // namespace counsel::detail

#include "counsel/text.hpp"

namespace counsel::detail {

// For free-text replies with a word budget. `extract` pulls the reply out of
// the raw text (throwing ParseFailure). A malformed or over-long first answer
// earns one retry with a matching nudge; a second malformed answer throws
// StageError, a second over-long one is truncated to `hard_cap` with a
// warning.
template <class StageError, class Extract>
std::string call_with_word_cap(const LlmContext& ctx, LlmRequest request, Extract&& extract,
                               std::size_t target, std::size_t hard_cap) {
  const std::string base = request.user;
  std::string first_problem;
  for (int attempt = 1; attempt <= 2; ++attempt) {
    std::string reply;
    try {
      reply = extract(ctx.gateway->complete(request).text);
    } catch (const ParseFailure& e) {
      if (attempt == 2) {
        throw StageError(fmt::format("{}: unusable model output after one repair retry ({}; then {})",
                                     request.prompt_key, first_problem, e.what()));
      }
      first_problem = e.what();
      request.user = base + "\n\n" + std::string(kJsonNudge);
      continue;
    }
    const auto words = text::count_words(reply);
    if (words <= hard_cap) return reply;
    if (attempt == 2) {
      warn(ctx, Diagnostics::Kind::WordCap,
           fmt::format("{} reply of {} words truncated to {}", request.prompt_key, words, hard_cap));
      return text::cap_words(reply, hard_cap).text;
    }
    first_problem = fmt::format("{} words", words);
    request.user = base + "\n\n" + fmt::format("Keep the response under {} words.", target);
  }
  throw StageError(fmt::format("{}: no reply", request.prompt_key));
}

// Reads a string field from the first JSON object in `raw`.
inline std::string json_string_field(const std::string& raw, std::string_view field) {
  Json j = extract_json_object(raw);
  auto it = j.find(std::string(field));
  if (it == j.end() || !it->is_string()) throw ParseFailure(fmt::format("missing string field '{}'", field));
  auto value = std::string(text::trim(it->get<std::string>()));
  if (value.empty()) throw ParseFailure(fmt::format("field '{}' is empty", field));
  return value;
}

}  // namespace counsel::detail
