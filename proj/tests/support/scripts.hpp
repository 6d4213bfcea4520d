#pragma once
// Builds scripted-backend rules in code and drives sessions with tagged
// patient lines, so generated scenarios can key replies to a single turn.

#include <string>
#include <vector>

#include <fmt/format.h>

#include "counsel/domain.hpp"
#include "counsel/session.hpp"

namespace counsel::testing {

class ScriptBuilder {
 public:
  ScriptBuilder& add(std::string_view role, std::vector<std::string> match, std::string response) {
    Json rule;
    rule["role"] = role;
    rule["match"] = std::move(match);
    rule["response"] = std::move(response);
    lines_.push_back(rule.dump());
    return *this;
  }
  ScriptBuilder& add_error(std::string_view role, std::vector<std::string> match, std::string error) {
    Json rule;
    rule["role"] = role;
    rule["match"] = std::move(match);
    rule["error"] = std::move(error);
    lines_.push_back(rule.dump());
    return *this;
  }
  ScriptBuilder& raw(std::string line) {
    lines_.push_back(std::move(line));
    return *this;
  }
  std::string str() const {
    std::string out;
    for (const auto& l : lines_) out += l + "\n";
    return out;
  }

 private:
  std::vector<std::string> lines_;
};

inline std::string emotion_json(std::string_view emotion, std::string_view intensity) {
  return Json{{"primary_emotion", emotion}, {"emotional_intensity", intensity}}.dump();
}
inline std::string strategy_json(std::string_view strategy, std::string_view text) {
  return Json{{"strategy", strategy}, {"strategy_text", text}}.dump();
}
inline std::string counselor_json(std::string_view reply) { return Json{{"counselor_response", reply}}.dump(); }

// Prompt fragments that identify each stage.
namespace key {
inline const std::string kEmotion = "Identify the primary emotion";
inline const std::string kResistance = "shows resistance or has significantly deviated";
inline const std::string kMemory = "necessary to refer to the historical conversations";
inline const std::string kTermination = "whether the current session should be ended";
inline const std::string kStrategy = "Choose a response strategy";
inline const std::string kStage = "Provide an analysis of the current stage of treatment";
inline const std::string kPhase = "Classify the current treatment phase";
inline const std::string kCounselor = "respond to the patient compassionately";
inline const std::string kInitialTherapy = "recommend a suitable psychological treatment therapy";
inline const std::string kAdjustment = "Evaluate whether the last conversation had a therapeutic effect";
inline const std::string kJudgeSingle = "in a single session";
inline const std::string kJudgeMulti = "whole";
}  // namespace key

// Catch-all replies for every engine stage; specific rules go first.
inline void add_engine_defaults(ScriptBuilder& b) {
  b.add("judgment", {key::kEmotion}, emotion_json("sadness", "0.5"))
      .add("judgment", {key::kResistance}, "False")
      .add("judgment", {key::kMemory}, std::string(kNoMemorySentinel))
      .add("judgment", {key::kTermination}, "False")
      .add("judgment", {key::kStrategy}, strategy_json("Restatement", "Restate what was said."))
      .add("judgment", {key::kStage}, "Early engagement; keep building trust.")
      .add("judgment", {key::kPhase}, "Engagement")
      .add("generation", {key::kCounselor}, counselor_json("I hear you. Tell me more about that."))
      .add("judgment", {key::kInitialTherapy}, "Cognitive Behavioral Therapy");
}

inline void add_judge_defaults(ScriptBuilder& b) {
  b.add("judge", {key::kJudgeSingle},
        Json{{"Therapeutic Alliance Assessment", {2}}, {"Interaction Assessment", {2}}}.dump())
      .add("judge", {key::kJudgeMulti},
           Json{{"Coherence Assessment", {2}},
                {"Flexibility Assessment", {2}},
                {"Empathy Assessment", {2}},
                {"Therapeutic Attunement Assessment", {2}}}
               .dump());
}

// Stands in for the side of a rig a test never calls; empty scripts are rejected.
inline std::string unused_script() {
  return ScriptBuilder().add("judgment", {"<never matched>"}, "unused").str();
}

// Tag identifying patient turn `n` (1-based) of session `k`.
inline std::string turn_tag(int k, int n) { return fmt::format("[s{}t{:03}]", k, n); }

// Patient lines "[s1t001] ...". Tags let scripts answer one specific turn.
class TaggedPatient : public PatientSource {
 public:
  std::string next_utterance(const ArcRecord&, const SessionRecord& session, std::string_view) override {
    return turn_tag(session.index, session.patient_turns() + 1) + " I keep thinking about it.";
  }
};

}  // namespace counsel::testing
