#include <gtest/gtest.h>

#include "../support/harness.hpp"
#include "../support/scripts.hpp"
#include "counsel/errors.hpp"
#include "counsel/session.hpp"
#include "counsel/text.hpp"

using namespace counsel;
using namespace counsel::testing;

namespace {

std::string words(int n, const std::string& w = "word") {
  std::string out;
  for (int i = 0; i < n; ++i) out += (i ? " " : "") + w;
  return out;
}

ArcRecord open_arc(int planned = 1) {
  ArcRecord arc;
  arc.case_id = "c";
  arc.planned_sessions = planned;
  open_session(arc, TherapyPlan::create({"Narrative Therapy"}), EngineConfig{});
  return arc;
}

PatientState calm() {
  PatientState s;
  s.emotion = Emotion::Trust;
  s.intensity = Intensity::from_tenths(3);
  return s;
}

class ThrowingPatient : public PatientSource {
 public:
  std::string next_utterance(const ArcRecord&, const SessionRecord& s, std::string_view) override {
    if (s.patient_turns() == 2) throw SimulatorError("simulator broke");
    return turn_tag(s.index, s.patient_turns() + 1) + " fine";
  }
};

}  // namespace

// ---------------------------------------------------------------------------

TEST(Strategy, ChallengingImpliesCooperative) {
  ScriptBuilder b;
  b.add("judgment", {key::kStrategy}, strategy_json("B. Confrontation", "Point out the contradiction."));
  Rig rig(b.str());
  auto choice = select_strategy(rig.engine_ctx(), calm(), "I'm fine but I cried all week.", {});
  EXPECT_EQ(choice.strategy.code, 'B');
  EXPECT_EQ(choice.attitude, Attitude::Cooperative);
  EXPECT_EQ(choice.guidance, "Point out the contradiction.");
  EXPECT_FALSE(choice.fallback);
}

TEST(Strategy, SupportingImpliesResistant) {
  ScriptBuilder b;
  b.add("judgment", {key::kStrategy}, strategy_json("Minimal Encouragement", "Nod along."));
  Rig rig(b.str());
  EXPECT_EQ(select_strategy(rig.engine_ctx(), calm(), "x", {}).attitude, Attitude::Resistant);
}

TEST(Strategy, PromptListsStrategiesAlreadyUsed) {
  ScriptBuilder b;
  b.add("judgment", {key::kStrategy, "Restatement, Answer"}, strategy_json("Interpretation", ""));
  b.add("judgment", {key::kStrategy, "none yet"}, strategy_json("Restatement", ""));
  Rig rig(b.str());
  std::vector<Strategy> used = {strategy_by_code('E'), strategy_by_code('L')};
  EXPECT_EQ(select_strategy(rig.engine_ctx(), calm(), "x", used).strategy.code, 'A');
  EXPECT_EQ(select_strategy(rig.engine_ctx(), calm(), "x", {}).strategy.code, 'E');
}

TEST(Strategy, GuidanceIsCapped) {
  ScriptBuilder b;
  b.add("judgment", {key::kStrategy}, strategy_json("Answer", words(45)));
  Rig rig(b.str());
  auto choice = select_strategy(rig.engine_ctx(), calm(), "x", {});
  EXPECT_EQ(text::count_words(choice.guidance), kGuidanceWordCap);
  EXPECT_EQ(rig.diagnostics.count(Diagnostics::Kind::WordCap), 1u);
}

TEST(Strategy, UnknownNameFallsBackToReflection) {
  ScriptBuilder b;
  b.add("judgment", {key::kStrategy}, strategy_json("Motivational Interviewing", "x"));
  Rig rig(b.str());
  auto choice = select_strategy(rig.engine_ctx(), calm(), "x", {});
  EXPECT_TRUE(choice.fallback);
  EXPECT_EQ(choice.strategy.name, "Reflection of Feelings");
  EXPECT_EQ(choice.attitude, Attitude::Resistant);
  EXPECT_EQ(rig.audit->count("strategy"), 2u);
  EXPECT_EQ(rig.diagnostics.count(Diagnostics::Kind::Fallback), 1u);
  EXPECT_THROW(select_strategy(rig.engine_ctx(), calm(), "x", {}, false), StrategyError);
}

// ---------------------------------------------------------------------------

TEST(Stage, AnalysisIsCappedAndTagged) {
  ScriptBuilder b;
  b.add("judgment", {key::kStage}, words(95, "explore"));
  b.add("judgment", {key::kPhase}, "This reads as Integration, not Exploration.");
  Rig rig(b.str());
  auto note = analyze_stage(rig.engine_ctx(), TherapyPlan::create({"Narrative Therapy"}), "Session 1:");
  EXPECT_EQ(text::count_words(note.text), kStageWordCap);
  EXPECT_EQ(note.tag, Phase::Integration);
  EXPECT_EQ(rig.diagnostics.count(Diagnostics::Kind::WordCap), 1u);
}

TEST(Stage, UntaggableAnalysisFails) {
  ScriptBuilder b;
  b.add("judgment", {key::kStage}, "Going fine.");
  b.add("judgment", {key::kPhase}, "Hard to tell.");
  Rig rig(b.str());
  EXPECT_THROW(analyze_stage(rig.engine_ctx(), TherapyPlan::create({"Narrative Therapy"}), "Session 1:"),
               StageError);
}

// ---------------------------------------------------------------------------

namespace {

TurnContext basic_turn() {
  TurnContext t;
  t.utterance = "I slept badly.";
  t.state = calm();
  return t;
}

}  // namespace

TEST(Reply, WithinCapIsReturnedAsIs) {
  ScriptBuilder b;
  b.add("generation", {key::kCounselor}, counselor_json("  That sounds exhausting.  "));
  Rig rig(b.str());
  EXPECT_EQ(generate_reply(rig.engine_ctx(), basic_turn(), std::nullopt, std::nullopt), "That sounds exhausting.");
}

TEST(Reply, OverlongFirstAnswerIsRetriedWithANudge) {
  ScriptBuilder b;
  b.add("generation", {key::kCounselor, "Keep the response under 60 words."}, counselor_json(words(40)));
  b.add("generation", {key::kCounselor}, counselor_json(words(90)));
  Rig rig(b.str());
  auto reply = generate_reply(rig.engine_ctx(), basic_turn(), std::nullopt, std::nullopt);
  EXPECT_EQ(text::count_words(reply), 40u);
  EXPECT_EQ(rig.audit->count("counselor"), 2u);
  EXPECT_EQ(rig.diagnostics.count(Diagnostics::Kind::WordCap), 0u);
}

TEST(Reply, SecondOverlongAnswerIsTruncatedToTheHardCap) {
  ScriptBuilder b;
  b.add("generation", {key::kCounselor}, counselor_json(words(90)));
  Rig rig(b.str());
  auto reply = generate_reply(rig.engine_ctx(), basic_turn(), std::nullopt, std::nullopt);
  EXPECT_EQ(text::count_words(reply), kReplyWordCap);
  EXPECT_EQ(rig.diagnostics.count(Diagnostics::Kind::WordCap), 1u);
}

TEST(Reply, MalformedTwiceIsAGenerationError) {
  ScriptBuilder b;
  b.add("generation", {key::kCounselor}, "That sounds hard.");
  Rig rig(b.str());
  EXPECT_THROW(generate_reply(rig.engine_ctx(), basic_turn(), std::nullopt, std::nullopt), GenerationError);
}

TEST(Reply, PromptDescribesAblatedInputs) {
  ScriptBuilder b;
  b.add("generation",
        {key::kCounselor, "not available", "your own judgment", "none yet",
         std::string(kNoMemorySentinel)},
        counselor_json("ablated"));
  b.add("generation", {key::kCounselor, "Early work", "Restatement", "Say it back", "\"Earlier reply\""},
        counselor_json("full"));
  Rig rig(b.str());
  EXPECT_EQ(generate_reply(rig.engine_ctx(), basic_turn(), std::nullopt, std::nullopt), "ablated");

  auto turn = basic_turn();
  turn.reply_memory = {"Earlier reply"};
  StrategyChoice choice{strategy_by_code('E'), "Say it back", Attitude::Resistant, false};
  EXPECT_EQ(generate_reply(rig.engine_ctx(), turn, choice, PhaseNote{"Early work", Phase::Engagement}), "full");
}

// ---------------------------------------------------------------------------

TEST(Termination, ReadsTheVerdict) {
  ScriptBuilder b;
  b.add("judgment", {key::kTermination, "[closing]"}, "True");
  b.add("judgment", {key::kTermination, "[unsure]"}, "Unclear.");
  b.add("judgment", {key::kTermination}, "False");
  Rig rig(b.str());
  EXPECT_TRUE(should_terminate(rig.engine_ctx(), "Thanks [closing]"));
  EXPECT_FALSE(should_terminate(rig.engine_ctx(), "Tell me more"));
  EXPECT_THROW(should_terminate(rig.engine_ctx(), "[unsure]"), TerminationJudgeError);
  EXPECT_THROW(should_terminate(rig.engine_ctx(), " "), PreconditionError);
}

// ---------------------------------------------------------------------------

TEST(OpenSession, EnforcesOrderAndLimit) {
  ArcRecord arc;
  arc.planned_sessions = 1;
  auto& s = open_session(arc, TherapyPlan::create({"Narrative Therapy"}), EngineConfig{});
  EXPECT_EQ(s.index, 1);
  EXPECT_EQ(s.opening, kDefaultGreeting);
  EXPECT_THROW(open_session(arc, TherapyPlan::create({"Narrative Therapy"}), EngineConfig{}), PreconditionError);
  arc.sessions[0].termination = Termination::PatientClosed;
  EXPECT_THROW(open_session(arc, TherapyPlan::create({"Narrative Therapy"}), EngineConfig{}), PreconditionError);
}

TEST(RunTurn, AppendsAnAnnotatedPair) {
  ScriptBuilder b;
  add_engine_defaults(b);
  Rig rig(b.str());
  auto arc = open_arc();
  auto outcome = run_turn(rig.engine_ctx(), EngineConfig{}, arc, "  I slept badly.  ");
  const auto& s = arc.sessions[0];
  ASSERT_EQ(s.turns.size(), 2u);
  EXPECT_EQ(s.turns[0].text, "I slept badly.");
  EXPECT_EQ(s.turns[0].index, 0);
  EXPECT_EQ(s.turns[1].index, 1);
  EXPECT_FALSE(s.turns[0].annotations.has_value());
  ASSERT_TRUE(s.turns[1].annotations.has_value());
  const auto& a = *s.turns[1].annotations;
  EXPECT_EQ(a.state.emotion, Emotion::Sadness);
  EXPECT_EQ(a.strategy->code, 'E');
  EXPECT_EQ(a.state.attitude, Attitude::Resistant);
  EXPECT_FALSE(a.memory.has_value());
  EXPECT_EQ(a.phase->tag, Phase::Engagement);
  EXPECT_EQ(s.strategy_trace.size(), 1u);
  EXPECT_FALSE(outcome.termination.has_value());
  EXPECT_EQ(rig.audit->count("memory"), 0u);
}

TEST(RunTurn, FailureLeavesTheSessionUntouched) {
  ScriptBuilder b;
  b.add("generation", {key::kCounselor}, "not json at all");
  add_engine_defaults(b);
  Rig rig(b.str());
  auto arc = open_arc();
  EXPECT_THROW(run_turn(rig.engine_ctx(), EngineConfig{}, arc, "Hello"), GenerationError);
  EXPECT_TRUE(arc.sessions[0].turns.empty());
  EXPECT_TRUE(arc.sessions[0].strategy_trace.empty());
  EXPECT_FALSE(arc.sessions[0].closed());
}

TEST(RunTurn, TerminationJudgeFailureFailsOpen) {
  ScriptBuilder b;
  b.add("judgment", {key::kTermination}, "I cannot decide.");
  add_engine_defaults(b);
  Rig rig(b.str());
  auto arc = open_arc();
  auto outcome = run_turn(rig.engine_ctx(), EngineConfig{}, arc, "Goodbye?");
  EXPECT_FALSE(outcome.termination.has_value());
  EXPECT_EQ(rig.diagnostics.count(Diagnostics::Kind::FailOpen), 1u);
}

TEST(RunTurn, ClosingVerdictEndsOnTheCounselorTurn) {
  ScriptBuilder b;
  b.add("judgment", {key::kTermination, "[closing]"}, "True");
  add_engine_defaults(b);
  Rig rig(b.str());
  auto arc = open_arc();
  auto outcome = run_turn(rig.engine_ctx(), EngineConfig{}, arc, "Thanks [closing]");
  EXPECT_EQ(outcome.termination, Termination::PatientClosed);
  EXPECT_EQ(arc.sessions[0].turns.back().role, Role::Counselor);
  EXPECT_THROW(run_turn(rig.engine_ctx(), EngineConfig{}, arc, "more"), PreconditionError);
}

TEST(RunTurn, CapClosesAtExactlyTheConfiguredPatientTurn) {
  ScriptBuilder b;
  add_engine_defaults(b);
  Rig rig(b.str());
  EngineConfig config;
  config.turn_cap = 3;
  auto arc = open_arc();
  EXPECT_FALSE(run_turn(rig.engine_ctx(), config, arc, "one").termination);
  EXPECT_FALSE(run_turn(rig.engine_ctx(), config, arc, "two").termination);
  EXPECT_EQ(run_turn(rig.engine_ctx(), config, arc, "three").termination, Termination::TurnCapReached);
}

TEST(RunTurn, StageAnalysisEveryNTurnsIsReusedBetween) {
  ScriptBuilder b;
  add_engine_defaults(b);
  Rig rig(b.str());
  EngineConfig config;
  config.stage_every_n = 2;
  auto arc = open_arc();
  for (const char* u : {"a", "b", "c", "d", "e"}) run_turn(rig.engine_ctx(), config, arc, u);
  EXPECT_EQ(rig.audit->count("stage"), 3u);
  EXPECT_EQ(rig.audit->count("phase_tag"), 3u);
  for (const auto& t : arc.sessions[0].turns) {
    if (t.role == Role::Counselor) EXPECT_TRUE(t.annotations->phase.has_value());
  }
}

TEST(RunTurn, AblationsSkipTheirStages) {
  ScriptBuilder b;
  add_engine_defaults(b);
  Rig rig(b.str());
  EngineConfig config;
  config.enable_memory = false;
  config.enable_strategy = false;
  config.enable_stage = false;
  ArcRecord arc;
  arc.planned_sessions = 2;
  open_session(arc, TherapyPlan::create({"Narrative Therapy"}), config);
  arc.sessions[0].termination = Termination::PatientClosed;
  open_session(arc, TherapyPlan::create({"Narrative Therapy"}), config);
  run_turn(rig.engine_ctx(), config, arc, "hello");
  const auto& a = *arc.sessions[1].turns[1].annotations;
  EXPECT_FALSE(a.strategy.has_value());
  EXPECT_FALSE(a.state.attitude.has_value());
  EXPECT_FALSE(a.phase.has_value());
  EXPECT_FALSE(a.memory.has_value());
  EXPECT_EQ(rig.audit->count("memory"), 0u);
  EXPECT_EQ(rig.audit->count("strategy"), 0u);
  EXPECT_EQ(rig.audit->count("stage"), 0u);
  EXPECT_NO_THROW(check_arc_invariants(arc));
}

TEST(RunTurn, MemoryIsConsultedOncePerTurnAfterTheFirstSession) {
  ScriptBuilder b;
  b.add("judgment", {key::kMemory}, "Last time she spoke about her brother.");
  add_engine_defaults(b);
  Rig rig(b.str());
  ArcRecord arc;
  arc.planned_sessions = 2;
  open_session(arc, TherapyPlan::create({"Narrative Therapy"}), EngineConfig{});
  run_turn(rig.engine_ctx(), EngineConfig{}, arc, "first");
  arc.sessions[0].termination = Termination::PatientClosed;
  EXPECT_EQ(rig.audit->count("memory"), 0u);
  open_session(arc, TherapyPlan::create({"Narrative Therapy"}), EngineConfig{});
  run_turn(rig.engine_ctx(), EngineConfig{}, arc, "second");
  run_turn(rig.engine_ctx(), EngineConfig{}, arc, "third");
  EXPECT_EQ(rig.audit->count("memory"), 2u);
  EXPECT_EQ(arc.sessions[1].turns[1].annotations->memory.text, "Last time she spoke about her brother.");
}

TEST(RunTurn, RejectsEmptyUtteranceAndMissingSession) {
  ScriptBuilder b;
  add_engine_defaults(b);
  Rig rig(b.str());
  ArcRecord none;
  EXPECT_THROW(run_turn(rig.engine_ctx(), EngineConfig{}, none, "hi"), PreconditionError);
  auto arc = open_arc();
  EXPECT_THROW(run_turn(rig.engine_ctx(), EngineConfig{}, arc, "   "), PreconditionError);
}

// ---------------------------------------------------------------------------

TEST(RunSession, RunsToThePatientsClose) {
  ScriptBuilder b;
  b.add("judgment", {key::kTermination, turn_tag(1, 4)}, "True");
  add_engine_defaults(b);
  Rig rig(b.str());
  ArcRecord arc;
  arc.planned_sessions = 1;
  TaggedPatient patient;
  auto& s = run_session(rig.engine_ctx(), EngineConfig{}, arc, 1, TherapyPlan::create({"Narrative Therapy"}), patient);
  EXPECT_EQ(s.patient_turns(), 4);
  EXPECT_EQ(s.termination, Termination::PatientClosed);
  EXPECT_NO_THROW(check_arc_invariants(arc));
}

TEST(RunSession, ErrorsAbortTheSessionAndFlagTheArc) {
  ScriptBuilder b;
  add_engine_defaults(b);
  Rig rig(b.str());
  ArcRecord arc;
  arc.planned_sessions = 1;
  ThrowingPatient patient;
  EXPECT_THROW(
      run_session(rig.engine_ctx(), EngineConfig{}, arc, 1, TherapyPlan::create({"Narrative Therapy"}), patient),
      SimulatorError);
  EXPECT_EQ(arc.sessions[0].termination, Termination::Aborted);
  EXPECT_EQ(arc.sessions[0].patient_turns(), 2);
  EXPECT_TRUE(arc.incomplete);
  EXPECT_FALSE(arc.complete());
}

TEST(RunSession, ChecksSessionNumber) {
  ScriptBuilder b;
  add_engine_defaults(b);
  Rig rig(b.str());
  ArcRecord arc;
  arc.planned_sessions = 3;
  TaggedPatient patient;
  EXPECT_THROW(
      run_session(rig.engine_ctx(), EngineConfig{}, arc, 2, TherapyPlan::create({"Narrative Therapy"}), patient),
      PreconditionError);
}
