#include "counsel/memory.hpp"

#include "counsel/detail/stage_call.hpp"
#include "counsel/text.hpp"

namespace counsel {

std::string flatten_turns(std::span<const Turn> turns) {
  std::string out;
  for (const auto& turn : turns) {
    if (!out.empty()) out += '\n';
    out += turn.role == Role::Patient ? "Patient: " : "Counselor: ";
    out += turn.text;
  }
  return out;
}

std::string flatten_history(std::span<const SessionRecord> sessions) {
  std::string out;
  for (const auto& session : sessions) {
    if (!out.empty()) out += "\n\n";
    out += fmt::format("Session {}:", session.index);
    if (!session.turns.empty()) {
      out += '\n';
      out += flatten_turns(session.turns);
    }
  }
  return out;
}

MemorySummary recall_memory(const LlmContext& ctx, std::string_view utterance,
                            std::span<const SessionRecord> prior_sessions) {
  if (text::trim(utterance).empty()) throw PreconditionError("utterance must not be empty");
  if (prior_sessions.empty()) return MemorySummary::none();

  auto request = detail::render_request(ctx, "memory", RolePreset::Judgment,
                                        {{"all_dialogs", flatten_history(prior_sessions)},
                                         {"patient_input", std::string(utterance)}});
  auto reply = detail::call_with_repair<MemoryError>(
      ctx, std::move(request), "Return either the summary or the sentence exactly as instructed.",
      [](const std::string& raw) {
        auto body = std::string(text::trim(raw));
        if (body.empty()) throw ParseFailure("empty memory reply");
        return body;
      });

  if (reply.find(kNoMemorySentinel) != std::string::npos) return MemorySummary::none();
  auto capped = text::cap_words(reply, kMemoryWordCap);
  if (capped.truncated) {
    detail::warn(ctx, Diagnostics::Kind::WordCap,
                 fmt::format("memory summary of {} words truncated to {}", text::count_words(reply),
                             kMemoryWordCap));
  }
  return MemorySummary::some(std::move(capped.text));
}

}  // namespace counsel
