#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "counsel/domain.hpp"
#include "counsel/llm.hpp"

namespace counsel {

inline constexpr std::string_view kDefaultGreeting = "Hello, welcome back. How are you feeling today?";

struct EngineConfig {
  // Patient turns after which a session is closed as TurnCapReached.
  int turn_cap = 20;
  // Stage analysis runs on counselor turns 1, 1+n, 1+2n, ... and is reused
  // in between.
  int stage_every_n = 1;
  bool enable_memory = true;
  bool enable_strategy = true;
  bool enable_stage = true;
  bool parallel_perception = false;
  std::string greeting = std::string(kDefaultGreeting);
};

inline constexpr std::size_t kGuidanceWordCap = 30;
inline constexpr std::size_t kStageWordCap = 80;
inline constexpr std::size_t kReplyWordTarget = 60;
inline constexpr std::size_t kReplyWordCap = 70;

struct StrategyChoice {
  Strategy strategy;
  std::string guidance;
  Attitude attitude = Attitude::Resistant;
  bool fallback = false;
};

// Everything the reply generator conditions on.
struct TurnContext {
  std::string utterance;
  // Current session so far, without the utterance.
  std::vector<Turn> history;
  TherapyPlan therapy = TherapyPlan::create({"Person-Centered Therapy"});
  PatientState state;
  MemorySummary memory;
  std::vector<Strategy> strategy_memory;
  std::vector<std::string> reply_memory;
};

// Picks a strategy and derives the attitude from its category. With
// `fallback_on_failure`, two unusable answers yield Reflection of Feelings
// (attitude Resistant) and a warning instead of StrategyError.
StrategyChoice select_strategy(const LlmContext& ctx, const PatientState& state, std::string_view utterance,
                               std::span<const Strategy> strategy_memory, bool fallback_on_failure = true);

// Stage analysis capped at kStageWordCap words plus a phase tag from a second
// call. Throws StageError.
PhaseNote analyze_stage(const LlmContext& ctx, const TherapyPlan& therapy, std::string_view all_dialogs);

// Counselor reply. Missing strategy or phase (ablations) are described as
// unavailable in the prompt. Throws GenerationError.
std::string generate_reply(const LlmContext& ctx, const TurnContext& turn,
                           const std::optional<StrategyChoice>& strategy, const std::optional<PhaseNote>& phase);

// Whether the patient wants to end the session. Throws TerminationJudgeError;
// the engine treats that as false.
bool should_terminate(const LlmContext& ctx, std::string_view utterance);

// Appends session k = sessions.size() + 1 with the greeting as its opening.
// Throws PreconditionError when a session is still open or K is reached.
SessionRecord& open_session(ArcRecord& arc, TherapyPlan therapy, const EngineConfig& config);

struct TurnOutcome {
  Turn patient;
  Turn counselor;
  std::optional<Termination> termination;
};

// One patient utterance through perception, memory, termination check,
// strategy, stage analysis and generation, applied to the open session of
// `arc`. Nothing is recorded unless every stage succeeds.
TurnOutcome run_turn(const LlmContext& ctx, const EngineConfig& config, ArcRecord& arc, std::string_view utterance);

// Supplies patient utterances: a simulator or a human.
class PatientSource {
 public:
  virtual ~PatientSource() = default;
  // `counselor_message` is the greeting on the first turn of a session.
  virtual std::string next_utterance(const ArcRecord& arc, const SessionRecord& session,
                                     std::string_view counselor_message) = 0;
};

// Opens session k and runs it to PatientClosed or TurnCapReached. Any error
// closes the session as Aborted, flags the arc incomplete and is rethrown.
SessionRecord& run_session(const LlmContext& ctx, const EngineConfig& config, ArcRecord& arc, int k,
                           TherapyPlan therapy, PatientSource& patient);

}  // namespace counsel
