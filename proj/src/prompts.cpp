#include "counsel/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "counsel/errors.hpp"

namespace counsel {

namespace detail {
const std::map<std::string, std::string>& embedded_prompts();
}

namespace {

bool is_name_char(char c) {
  return std::islower(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) ||
         c == '_';
}

// Calls `on_placeholder(name, begin, end)` for each `{name}` and returns the
// positions so rendering and listing share one scanner.
template <class F>
void scan(const std::string& s, F&& on_placeholder) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '{') continue;
    std::size_t j = i + 1;
    while (j < s.size() && is_name_char(s[j])) ++j;
    if (j < s.size() && s[j] == '}' && j > i + 1 && std::islower(static_cast<unsigned char>(s[i + 1]))) {
      on_placeholder(s.substr(i + 1, j - i - 1), i, j + 1);
      i = j;
    }
  }
}

}  // namespace

PromptTemplate::PromptTemplate(std::string text) : text_(std::move(text)) {}

std::vector<std::string> PromptTemplate::placeholders() const {
  std::vector<std::string> names;
  scan(text_, [&](std::string name, std::size_t, std::size_t) {
    if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(std::move(name));
  });
  return names;
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& values) const {
  std::string out;
  out.reserve(text_.size() + 256);
  std::size_t cursor = 0;
  std::set<std::string> used;
  scan(text_, [&](const std::string& name, std::size_t begin, std::size_t end) {
    auto it = values.find(name);
    if (it == values.end()) throw TemplateError(fmt::format("no value for placeholder '{{{}}}'", name));
    out.append(text_, cursor, begin - cursor);
    out += it->second;
    cursor = end;
    used.insert(name);
  });
  out.append(text_, cursor, std::string::npos);
  for (const auto& [name, value] : values) {
    if (!used.count(name)) throw TemplateError(fmt::format("value '{}' matches no placeholder", name));
  }
  return out;
}

PromptLibrary PromptLibrary::builtin() {
  PromptLibrary lib;
  for (const auto& [key, text] : detail::embedded_prompts()) {
    // Files end with a newline; prompts should not.
    std::string body = text;
    while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.pop_back();
    lib.templates_.emplace(key, PromptTemplate(std::move(body)));
  }
  return lib;
}

void PromptLibrary::load_overrides(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw ConfigError(fmt::format("prompt directory '{}' does not exist", dir.string()));
  }
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    std::ifstream in(entry.path());
    std::stringstream buffer;
    buffer << in.rdbuf();
    std::string body = buffer.str();
    while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.pop_back();
    templates_.insert_or_assign(entry.path().stem().string(), PromptTemplate(std::move(body)));
  }
}

const PromptTemplate& PromptLibrary::get(std::string_view key) const {
  auto it = templates_.find(key);
  if (it == templates_.end()) throw TemplateError(fmt::format("no prompt template '{}'", key));
  return it->second;
}

std::vector<std::string> PromptLibrary::keys() const {
  std::vector<std::string> out;
  for (const auto& [key, value] : templates_) out.push_back(key);
  return out;
}

}  // namespace counsel
