#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "counsel/sampling.hpp"

namespace counsel {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Perceived patient state
// ---------------------------------------------------------------------------

enum class Emotion { Joy, Sadness, Anger, Fear, Disgust, Surprise, Trust, Anticipation };

inline constexpr std::array kAllEmotions = {Emotion::Joy,      Emotion::Sadness, Emotion::Anger,
                                            Emotion::Fear,     Emotion::Disgust, Emotion::Surprise,
                                            Emotion::Trust,    Emotion::Anticipation};

std::string_view to_string(Emotion e);
std::optional<Emotion> try_parse_emotion(std::string_view raw);
// Throws ValidationError for labels outside the closed set.
Emotion parse_emotion(std::string_view raw);

// Emotional intensity in [0, 1] with exactly one fractional digit, stored as
// integer tenths so that equality and serialization are exact.
class Intensity {
 public:
  constexpr Intensity() = default;

  static Intensity from_tenths(int tenths);
  // Accepts only values that already have one fractional digit (0.85 throws).
  static Intensity exact(double value);
  // Parses a decimal literal, rounds half away from zero to one digit and
  // clamps to [0, 1]. Rounding is done on the decimal digits, so "0.85" is 0.9.
  static Intensity round_from_text(std::string_view decimal);

  int tenths() const noexcept { return tenths_; }
  double value() const noexcept { return tenths_ / 10.0; }
  std::string to_string() const;

  friend auto operator<=>(const Intensity&, const Intensity&) = default;

 private:
  explicit constexpr Intensity(int tenths) : tenths_(tenths) {}
  int tenths_ = 0;
};

enum class Attitude { Cooperative, Resistant };

std::string_view to_string(Attitude a);
// Accepts the canonical names and the prompt-side synonyms positive/negative.
Attitude parse_attitude(std::string_view raw);

struct PatientState {
  Emotion emotion = Emotion::Joy;
  Intensity intensity;
  // Unset until strategy selection has judged the attitude.
  std::optional<Attitude> attitude;
  bool is_rejecting = false;

  friend bool operator==(const PatientState&, const PatientState&) = default;
};

// ---------------------------------------------------------------------------
// Response strategies
// ---------------------------------------------------------------------------

enum class StrategyCategory { Challenging, Supporting };

std::string_view to_string(StrategyCategory c);

struct Strategy {
  std::string_view name;
  char code = 'F';
  StrategyCategory category = StrategyCategory::Supporting;

  friend bool operator==(const Strategy& a, const Strategy& b) { return a.code == b.code; }
};

// The twelve strategies in option order A..L.
std::span<const Strategy> all_strategies();
const Strategy& strategy_by_code(char code);

// Strips option letters ("A.", "B)"), parenthesized glosses, quotes and
// surrounding whitespace, then matches case-insensitively. Throws
// UnknownStrategy when nothing matches.
Strategy parse_strategy_name(std::string_view raw);

// Cooperative patients get challenging strategies, resistant ones supporting.
Attitude attitude_for(StrategyCategory category);

inline const Strategy& fallback_strategy() { return strategy_by_code('F'); }

// ---------------------------------------------------------------------------
// Therapy plans, phases, memory
// ---------------------------------------------------------------------------

class TherapyPlan {
 public:
  static constexpr std::string_view kSeparator = " + ";

  // Throws ValidationError unless 1-2 non-empty method names are given.
  static TherapyPlan create(std::vector<std::string> methods, std::string rationale = {});
  // Splits a rendered plan on " + ".
  static TherapyPlan parse(std::string_view rendered, std::string rationale = {});

  const std::vector<std::string>& methods() const noexcept { return methods_; }
  const std::string& rationale() const noexcept { return rationale_; }
  std::string render() const;
  // Same methods in the same order, compared case-insensitively.
  bool same_methods(const TherapyPlan& other) const;

  friend bool operator==(const TherapyPlan&, const TherapyPlan&) = default;

 private:
  TherapyPlan() = default;
  std::vector<std::string> methods_;
  std::string rationale_;
};

enum class Phase { Engagement, Exploration, Integration };

std::string_view to_string(Phase p);
Phase parse_phase(std::string_view raw);

struct PhaseNote {
  std::string text;
  Phase tag = Phase::Engagement;

  friend bool operator==(const PhaseNote&, const PhaseNote&) = default;
};

inline constexpr std::string_view kNoMemorySentinel =
    "No need to consider historical conversation memory";

struct MemorySummary {
  static MemorySummary none() { return {}; }
  static MemorySummary some(std::string text);

  bool has_value() const noexcept { return !text.empty(); }

  std::string text;

  friend bool operator==(const MemorySummary&, const MemorySummary&) = default;
};

// ---------------------------------------------------------------------------
// Transcripts
// ---------------------------------------------------------------------------

enum class Role { Patient, Counselor };

std::string_view to_string(Role r);

// The deliberation behind one counselor reply.
struct Annotations {
  PatientState state;
  // Absent only when strategy selection is ablated.
  std::optional<Strategy> strategy;
  std::string guidance;
  MemorySummary memory;
  // Absent only when stage analysis is ablated.
  std::optional<PhaseNote> phase;

  friend bool operator==(const Annotations&, const Annotations&) = default;
};

struct Turn {
  Role role = Role::Patient;
  std::string text;
  int index = 0;
  std::optional<Annotations> annotations;

  friend bool operator==(const Turn&, const Turn&) = default;
};

enum class Termination { PatientClosed, TurnCapReached, Aborted };

std::string_view to_string(Termination t);

struct EfficacyReport {
  bool effective = false;
  std::string reason;
  std::optional<double> score;

  friend bool operator==(const EfficacyReport&, const EfficacyReport&) = default;
};

struct SessionRecord {
  int index = 1;
  TherapyPlan therapy = TherapyPlan::create({"Person-Centered Therapy"});
  // Neutral greeting the patient's first line answers; not a counselor turn.
  std::string opening;
  std::vector<Turn> turns;
  std::optional<Termination> termination;
  std::optional<EfficacyReport> efficacy;
  std::vector<Strategy> strategy_trace;

  bool closed() const noexcept { return termination.has_value(); }
  bool completed() const noexcept {
    return termination && *termination != Termination::Aborted;
  }
  int patient_turns() const;

  friend bool operator==(const SessionRecord&, const SessionRecord&) = default;
};

enum class DecisionKind { Initial, Maintained, Switched, Fallback };

std::string_view to_string(DecisionKind d);
DecisionKind parse_decision_kind(std::string_view raw);

// How the plan for `session` was chosen.
struct TherapyDecision {
  int session = 1;
  std::string prev;
  std::string next;
  std::optional<double> score;
  std::optional<bool> effective;
  std::string reason;
  DecisionKind decision = DecisionKind::Initial;

  friend bool operator==(const TherapyDecision&, const TherapyDecision&) = default;
};

struct RunManifest {
  std::string backend_id;
  std::string judge_backend_id;
  std::map<std::string, SamplingParams> sampling;
  std::uint64_t seed = 0;
  std::string started_at;
  std::string finished_at;
  std::vector<std::string> warnings;

  friend bool operator==(const RunManifest&, const RunManifest&) = default;
};

struct SessionGuide {
  int session_index = 1;
  std::string goal;
  std::string emotional_range;

  friend bool operator==(const SessionGuide&, const SessionGuide&) = default;
};

struct PatientProfile {
  std::string profile;
  std::vector<SessionGuide> guides;

  friend bool operator==(const PatientProfile&, const PatientProfile&) = default;
};

inline constexpr int kDefaultSessionCount = 6;

struct ArcRecord {
  std::string case_id;
  int planned_sessions = kDefaultSessionCount;
  std::vector<SessionRecord> sessions;
  std::vector<TherapyDecision> decisions;
  std::optional<PatientProfile> patient;
  RunManifest manifest;
  bool incomplete = false;

  // Every planned session ran to a normal close.
  bool complete() const;

  friend bool operator==(const ArcRecord&, const ArcRecord&) = default;
};

// ---------------------------------------------------------------------------
// Case files
// ---------------------------------------------------------------------------

enum class CaseCategory {
  Love, Family, Emotion, Youth, Social, Stress, Addiction, Anxiety, SelfGrowth, Rare
};

inline constexpr std::array kAllCategories = {
    CaseCategory::Love,      CaseCategory::Family,  CaseCategory::Emotion,
    CaseCategory::Youth,     CaseCategory::Social,  CaseCategory::Stress,
    CaseCategory::Addiction, CaseCategory::Anxiety, CaseCategory::SelfGrowth,
    CaseCategory::Rare};

std::string_view to_string(CaseCategory c);
std::optional<CaseCategory> try_parse_category(std::string_view raw);

struct CaseFile {
  std::string id;
  std::string title;
  CaseCategory category = CaseCategory::Rare;
  std::string method;
  std::string case_brief;
  std::string consultation_process;
  std::string experience_thoughts;

  friend bool operator==(const CaseFile&, const CaseFile&) = default;
};

// Checks the six case-file fields in document order and throws SchemaError
// naming the first violation. `fallback_id` is used when the document has no
// "id" key (typically the file stem).
CaseFile validate_case(const Json& raw, std::string_view fallback_id = {});

// Checks the structural invariants of a recorded arc (role alternation,
// annotations only on counselor turns, contiguous session indices, trace
// consistency, attitude/strategy gate). Throws ValidationError.
void check_arc_invariants(const ArcRecord& arc);

}  // namespace counsel
