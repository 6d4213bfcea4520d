#include "counsel/perception.hpp"

#include <cctype>
#include <future>

#include "counsel/detail/stage_call.hpp"
#include "counsel/text.hpp"

namespace counsel {

namespace {

void require_utterance(std::string_view utterance) {
  if (text::trim(utterance).empty()) throw PreconditionError("utterance must not be empty");
}

EmotionReading parse_emotion_payload(const std::string& raw) {
  Json j = extract_json_object(raw);
  auto label = j.find("primary_emotion");
  if (label == j.end() || !label->is_string()) throw ParseFailure("missing 'primary_emotion'");
  auto emotion = try_parse_emotion(label->get<std::string>());
  if (!emotion) throw ParseFailure(fmt::format("emotion '{}' is not in the label set", label->get<std::string>()));

  auto level = j.find("emotional_intensity");
  if (level == j.end()) throw ParseFailure("missing 'emotional_intensity'");
  std::string literal;
  if (level->is_string()) {
    literal = std::string(text::trim(level->get<std::string>()));
  } else if (level->is_number()) {
    literal = level->dump();
  } else {
    throw ParseFailure("'emotional_intensity' is neither a number nor a string");
  }
  try {
    return {*emotion, Intensity::round_from_text(literal)};
  } catch (const ValidationError& e) {
    throw ParseFailure(e.what());
  }
}

}  // namespace

std::optional<bool> parse_bool_token(std::string_view raw) {
  auto is_word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
  std::size_t i = 0;
  while (i < raw.size()) {
    if (!is_word(raw[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < raw.size() && is_word(raw[j])) ++j;
    auto word = raw.substr(i, j - i);
    if (text::iequals(word, "true")) return true;
    if (text::iequals(word, "false")) return false;
    i = j;
  }
  return std::nullopt;
}

EmotionReading classify_emotion(const LlmContext& ctx, std::string_view utterance) {
  require_utterance(utterance);
  auto request = detail::render_request(ctx, "emotion", RolePreset::Judgment,
                                        {{"patient_input", std::string(utterance)}});
  return detail::call_with_repair<PerceptionError>(ctx, std::move(request), detail::kJsonNudge,
                                                   parse_emotion_payload);
}

bool detect_resistance(const LlmContext& ctx, std::string_view utterance) {
  require_utterance(utterance);
  auto request = detail::render_request(ctx, "resistance", RolePreset::Judgment,
                                        {{"patient_input", std::string(utterance)}});
  return detail::call_with_repair<PerceptionError>(ctx, std::move(request), detail::kBoolNudge,
                                                   [](const std::string& raw) {
                                                     auto value = parse_bool_token(raw);
                                                     if (!value) throw ParseFailure("no True/False token");
                                                     return *value;
                                                   });
}

PatientState perceive(const LlmContext& ctx, std::string_view utterance, bool concurrent) {
  require_utterance(utterance);
  PatientState state;
  EmotionReading reading;
  if (concurrent) {
    auto resisting = std::async(std::launch::async, [&] { return detect_resistance(ctx, utterance); });
    try {
      reading = classify_emotion(ctx, utterance);
    } catch (...) {
      resisting.wait();
      throw;
    }
    state.is_rejecting = resisting.get();
  } else {
    reading = classify_emotion(ctx, utterance);
    state.is_rejecting = detect_resistance(ctx, utterance);
  }
  state.emotion = reading.emotion;
  state.intensity = reading.intensity;
  return state;
}

}  // namespace counsel
