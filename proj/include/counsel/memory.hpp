#pragma once

#include <span>
#include <string>
#include <string_view>

#include "counsel/domain.hpp"
#include "counsel/llm.hpp"

namespace counsel {

inline constexpr std::size_t kMemoryWordCap = 60;

// Renders turns as "Patient: ..." / "Counselor: ..." lines.
std::string flatten_turns(std::span<const Turn> turns);

// "Session k:" blocks separated by blank lines.
std::string flatten_history(std::span<const SessionRecord> sessions);

// Cross-session recall. With no prior sessions this returns none() without
// calling the model. A reply containing the sentinel sentence means none;
// anything else is kept, capped at kMemoryWordCap words. Throws MemoryError
// after an empty reply and one retry.
MemorySummary recall_memory(const LlmContext& ctx, std::string_view utterance,
                            std::span<const SessionRecord> prior_sessions);

}  // namespace counsel
