#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace counsel::text {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
std::vector<std::string> split(std::string_view s, std::string_view separator);
std::string join(const std::vector<std::string>& parts, std::string_view separator);

// Word counting is whitespace tokenization.
std::size_t count_words(std::string_view s);

struct Capped {
  std::string text;
  bool truncated = false;
};

// Keeps at most `max_words` words, cutting after the last full word and
// preserving the original spacing before the cut.
Capped cap_words(std::string_view s, std::size_t max_words);

// Hex-encoded SHA-256.
std::string sha256_hex(std::string_view data);

// UTC wall-clock time as ISO-8601 with milliseconds.
std::string utc_timestamp();

}  // namespace counsel::text
