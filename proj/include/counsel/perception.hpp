#pragma once

#include <optional>
#include <string_view>

#include "counsel/domain.hpp"
#include "counsel/llm.hpp"

namespace counsel {

struct EmotionReading {
  Emotion emotion = Emotion::Joy;
  Intensity intensity;
};

// Finds a standalone "true" or "false" token (any case, surrounded by
// whitespace or punctuation). The first token wins when both occur.
std::optional<bool> parse_bool_token(std::string_view raw);

// Emotion label and intensity of one patient utterance. Throws PerceptionError.
EmotionReading classify_emotion(const LlmContext& ctx, std::string_view utterance);

// Whether the patient resists or drifts off topic. Throws PerceptionError.
bool detect_resistance(const LlmContext& ctx, std::string_view utterance);

// Both judgments combined. The attitude stays unset; strategy selection
// decides it.
PatientState perceive(const LlmContext& ctx, std::string_view utterance, bool concurrent = false);

}  // namespace counsel
