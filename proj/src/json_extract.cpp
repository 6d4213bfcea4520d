#include <string_view>

#include "counsel/errors.hpp"
#include "counsel/llm.hpp"

namespace counsel {

namespace {

// End (exclusive) of the brace-balanced span starting at `open`, honouring
// JSON string literals and escapes; npos when the span never closes.
std::size_t balanced_end(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    char c = s[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

}  // namespace

Json extract_json_object(std::string_view raw) {
  for (std::size_t open = raw.find('{'); open != std::string_view::npos; open = raw.find('{', open + 1)) {
    auto end = balanced_end(raw, open);
    if (end == std::string_view::npos) continue;
    auto candidate = raw.substr(open, end - open);
    Json parsed = Json::parse(candidate.begin(), candidate.end(), nullptr, /*allow_exceptions=*/false);
    if (!parsed.is_discarded() && parsed.is_object()) return parsed;
  }
  throw NoJsonFound("no JSON object found in model output");
}

}  // namespace counsel
