#include "counsel/session.hpp"

#include "counsel/detail/stage_call.hpp"
#include "counsel/memory.hpp"
#include "counsel/perception.hpp"
#include "counsel/text.hpp"

namespace counsel {

namespace {

StrategyChoice parse_strategy_payload(const std::string& raw) {
  Json j = extract_json_object(raw);
  auto name = j.find("strategy");
  if (name == j.end() || !name->is_string()) throw ParseFailure("missing 'strategy'");
  StrategyChoice choice;
  try {
    choice.strategy = parse_strategy_name(name->get<std::string>());
  } catch (const ValidationError& e) {
    throw ParseFailure(e.what());
  }
  if (auto guide = j.find("strategy_text"); guide != j.end() && guide->is_string()) {
    choice.guidance = std::string(text::trim(guide->get<std::string>()));
  }
  choice.attitude = attitude_for(choice.strategy.category);
  return choice;
}

std::optional<Phase> find_phase_word(std::string_view raw) {
  auto lowered = text::to_lower(raw);
  std::optional<Phase> found;
  std::size_t best = std::string::npos;
  for (auto phase : {Phase::Engagement, Phase::Exploration, Phase::Integration}) {
    auto pos = lowered.find(text::to_lower(to_string(phase)));
    if (pos < best) {
      best = pos;
      found = phase;
    }
  }
  return found;
}

std::string list_or_none(const std::vector<std::string>& items, std::string_view separator) {
  if (items.empty()) return "none yet";
  return text::join(items, separator);
}

SessionRecord& open_session_checked(ArcRecord& arc) {
  if (arc.sessions.empty()) throw PreconditionError("no session has been opened");
  auto& session = arc.sessions.back();
  if (session.closed()) throw PreconditionError(fmt::format("session {} is closed", session.index));
  return session;
}

}  // namespace

StrategyChoice select_strategy(const LlmContext& ctx, const PatientState& state, std::string_view utterance,
                               std::span<const Strategy> strategy_memory, bool fallback_on_failure) {
  std::vector<std::string> used;
  for (const auto& s : strategy_memory) used.emplace_back(s.name);
  auto request = detail::render_request(ctx, "strategy", RolePreset::Judgment,
                                        {{"patient_input", std::string(utterance)},
                                         {"primary_emotion", std::string(to_string(state.emotion))},
                                         {"emotional_intensity", state.intensity.to_string()},
                                         {"is_rejecting", state.is_rejecting ? "Yes" : "No"},
                                         {"session_strategy_memory", list_or_none(used, ", ")}});
  StrategyChoice choice;
  try {
    choice = detail::call_with_repair<StrategyError>(ctx, std::move(request), detail::kJsonNudge,
                                                     parse_strategy_payload);
  } catch (const StrategyError& e) {
    if (!fallback_on_failure) throw;
    detail::warn(ctx, Diagnostics::Kind::Fallback,
                 fmt::format("strategy selection failed, using {}: {}", fallback_strategy().name, e.what()));
    choice.strategy = fallback_strategy();
    choice.attitude = attitude_for(choice.strategy.category);
    choice.fallback = true;
    return choice;
  }
  auto capped = text::cap_words(choice.guidance, kGuidanceWordCap);
  if (capped.truncated) {
    detail::warn(ctx, Diagnostics::Kind::WordCap,
                 fmt::format("strategy guidance of {} words truncated to {}", text::count_words(choice.guidance),
                             kGuidanceWordCap));
    choice.guidance = std::move(capped.text);
  }
  return choice;
}

PhaseNote analyze_stage(const LlmContext& ctx, const TherapyPlan& therapy, std::string_view all_dialogs) {
  auto request = detail::render_request(ctx, "stage", RolePreset::Judgment,
                                        {{"current_therapy", therapy.render()},
                                         {"all_dialogs", std::string(all_dialogs)}});
  auto analysis = detail::call_with_repair<StageError>(
      ctx, std::move(request), "Return only the analysis paragraph.", [](const std::string& raw) {
        auto body = std::string(text::trim(raw));
        if (body.empty()) throw ParseFailure("empty stage analysis");
        return body;
      });
  auto capped = text::cap_words(analysis, kStageWordCap);
  if (capped.truncated) {
    detail::warn(ctx, Diagnostics::Kind::WordCap,
                 fmt::format("stage analysis of {} words truncated to {}", text::count_words(analysis),
                             kStageWordCap));
  }

  PhaseNote note;
  note.text = std::move(capped.text);
  auto tag_request = detail::render_request(ctx, "phase_tag", RolePreset::Judgment,
                                            {{"stage_analysis", note.text}});
  note.tag = detail::call_with_repair<StageError>(
      ctx, std::move(tag_request), "Return only one word: Engagement, Exploration or Integration.",
      [](const std::string& raw) {
        auto phase = find_phase_word(raw);
        if (!phase) throw ParseFailure("no phase name in reply");
        return *phase;
      });
  return note;
}

std::string generate_reply(const LlmContext& ctx, const TurnContext& turn,
                           const std::optional<StrategyChoice>& strategy, const std::optional<PhaseNote>& phase) {
  std::vector<std::string> replies;
  for (const auto& r : turn.reply_memory) replies.push_back(fmt::format("\"{}\"", r));
  auto request = detail::render_request(
      ctx, "counselor", RolePreset::Generation,
      {{"patient_input", turn.utterance},
       {"memory_result", turn.memory.has_value() ? turn.memory.text : std::string(kNoMemorySentinel)},
       {"primary_emotion", std::string(to_string(turn.state.emotion))},
       {"emotional_intensity", turn.state.intensity.to_string()},
       {"current_therapy", turn.therapy.render()},
       {"current_stage", phase ? phase->text : std::string("not available")},
       {"current_strategy", strategy ? std::string(strategy->strategy.name) : std::string("your own judgment")},
       {"current_strategy_text", strategy && !strategy->guidance.empty() ? strategy->guidance
                                                                          : std::string("none")},
       {"session_memory", list_or_none(replies, "; ")}});
  request.max_output_words = static_cast<int>(kReplyWordTarget);
  return detail::call_with_word_cap<GenerationError>(
      ctx, std::move(request),
      [](const std::string& raw) { return detail::json_string_field(raw, "counselor_response"); },
      kReplyWordTarget, kReplyWordCap);
}

bool should_terminate(const LlmContext& ctx, std::string_view utterance) {
  if (text::trim(utterance).empty()) throw PreconditionError("utterance must not be empty");
  auto request = detail::render_request(ctx, "termination", RolePreset::Judgment,
                                        {{"patient_input", std::string(utterance)}});
  return detail::call_with_repair<TerminationJudgeError>(ctx, std::move(request), detail::kBoolNudge,
                                                         [](const std::string& raw) {
                                                           auto value = parse_bool_token(raw);
                                                           if (!value) throw ParseFailure("no True/False token");
                                                           return *value;
                                                         });
}

SessionRecord& open_session(ArcRecord& arc, TherapyPlan therapy, const EngineConfig& config) {
  if (!arc.sessions.empty() && !arc.sessions.back().closed()) {
    throw PreconditionError(fmt::format("session {} is still open", arc.sessions.back().index));
  }
  if (static_cast<int>(arc.sessions.size()) >= arc.planned_sessions) {
    throw PreconditionError(fmt::format("all {} planned sessions have been held", arc.planned_sessions));
  }
  SessionRecord session;
  session.index = static_cast<int>(arc.sessions.size()) + 1;
  session.therapy = std::move(therapy);
  session.opening = config.greeting;
  arc.sessions.push_back(std::move(session));
  return arc.sessions.back();
}

TurnOutcome run_turn(const LlmContext& ctx, const EngineConfig& config, ArcRecord& arc, std::string_view utterance) {
  auto& session = open_session_checked(arc);
  if (text::trim(utterance).empty()) throw PreconditionError("utterance must not be empty");
  const std::string said(text::trim(utterance));

  TurnContext turn;
  turn.utterance = said;
  turn.history = session.turns;
  turn.therapy = session.therapy;
  turn.strategy_memory = session.strategy_trace;
  for (const auto& t : session.turns) {
    if (t.role == Role::Counselor) turn.reply_memory.push_back(t.text);
  }

  turn.state = perceive(ctx, said, config.parallel_perception);

  const std::span<const SessionRecord> prior(arc.sessions.data(), arc.sessions.size() - 1);
  if (config.enable_memory) turn.memory = recall_memory(ctx, said, prior);

  bool closing = false;
  try {
    closing = should_terminate(ctx, said);
  } catch (const TerminationJudgeError& e) {
    detail::warn(ctx, Diagnostics::Kind::FailOpen, fmt::format("termination judge failed, continuing: {}", e.what()));
  }

  std::optional<StrategyChoice> choice;
  if (config.enable_strategy) {
    choice = select_strategy(ctx, turn.state, said, turn.strategy_memory);
    turn.state.attitude = choice->attitude;
  }

  std::optional<PhaseNote> phase;
  if (config.enable_stage) {
    const int counselor_turns = static_cast<int>(turn.reply_memory.size());
    const int every = std::max(1, config.stage_every_n);
    if (counselor_turns % every == 0 || session.turns.empty()) {
      std::string dialogs = flatten_history(prior);
      if (!dialogs.empty()) dialogs += "\n\n";
      dialogs += fmt::format("Session {}:", session.index);
      if (!session.turns.empty()) dialogs += "\n" + flatten_turns(session.turns);
      phase = analyze_stage(ctx, session.therapy, dialogs);
    } else {
      phase = session.turns.back().annotations->phase;
    }
  }

  auto reply = generate_reply(ctx, turn, choice, phase);

  TurnOutcome outcome;
  outcome.patient.role = Role::Patient;
  outcome.patient.text = said;
  outcome.patient.index = static_cast<int>(session.turns.size());

  Annotations notes;
  notes.state = turn.state;
  if (choice) {
    notes.strategy = choice->strategy;
    notes.guidance = choice->guidance;
  }
  notes.memory = turn.memory;
  notes.phase = phase;
  outcome.counselor.role = Role::Counselor;
  outcome.counselor.text = std::move(reply);
  outcome.counselor.index = outcome.patient.index + 1;
  outcome.counselor.annotations = std::move(notes);

  session.turns.push_back(outcome.patient);
  session.turns.push_back(outcome.counselor);
  if (choice) session.strategy_trace.push_back(choice->strategy);

  if (closing) {
    session.termination = Termination::PatientClosed;
  } else if (session.patient_turns() >= config.turn_cap) {
    session.termination = Termination::TurnCapReached;
  }
  outcome.termination = session.termination;
  return outcome;
}

SessionRecord& run_session(const LlmContext& ctx, const EngineConfig& config, ArcRecord& arc, int k,
                           TherapyPlan therapy, PatientSource& patient) {
  if (k < 1 || static_cast<int>(arc.sessions.size()) != k - 1) {
    throw PreconditionError(fmt::format("session {} cannot start: arc holds {} sessions", k, arc.sessions.size()));
  }
  for (const auto& s : arc.sessions) {
    if (!s.closed()) throw PreconditionError(fmt::format("session {} is still open", s.index));
  }
  auto& session = open_session(arc, std::move(therapy), config);
  std::string counselor_message = session.opening;
  try {
    while (!arc.sessions.back().closed()) {
      auto utterance = patient.next_utterance(arc, arc.sessions.back(), counselor_message);
      auto outcome = run_turn(ctx, config, arc, utterance);
      counselor_message = outcome.counselor.text;
    }
  } catch (const Error&) {
    arc.sessions.back().termination = Termination::Aborted;
    arc.incomplete = true;
    throw;
  }
  return arc.sessions.back();
}

}  // namespace counsel
