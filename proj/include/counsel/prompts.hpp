#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace counsel {

// A prompt with `{name}` placeholders (lowercase letters, digits and
// underscores). Any other brace, such as the JSON examples inside prompts, is
// literal text.
class PromptTemplate {
 public:
  PromptTemplate() = default;
  explicit PromptTemplate(std::string text);

  const std::string& text() const noexcept { return text_; }
  // Placeholder names in order of first appearance.
  std::vector<std::string> placeholders() const;
  // Throws TemplateError when a placeholder has no value or a value is unused.
  std::string render(const std::map<std::string, std::string>& values) const;

 private:
  std::string text_;
};

// Templates keyed by stage name: emotion, resistance, memory, strategy, stage,
// phase_tag, counselor, termination, initial_therapy, therapy_adjustment,
// patient, case_init, judge_single, judge_multi.
class PromptLibrary {
 public:
  // The templates compiled into the library.
  static PromptLibrary builtin();

  // Replaces templates with `<key>.txt` files found in `dir`.
  void load_overrides(const std::filesystem::path& dir);

  const PromptTemplate& get(std::string_view key) const;
  std::vector<std::string> keys() const;

 private:
  std::map<std::string, PromptTemplate, std::less<>> templates_;
};

}  // namespace counsel
