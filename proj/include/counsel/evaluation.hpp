#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "counsel/domain.hpp"
#include "counsel/llm.hpp"

namespace counsel {

struct RubricScore {
  std::string dimension;
  // Present when the judge returned the three 0/1 sub-items.
  std::optional<std::array<int, 3>> sub_items;
  int total = 0;

  friend bool operator==(const RubricScore&, const RubricScore&) = default;
};

// How a judge expressed a dimension: "total" ([n] or n) or "sub_items" ([a,b,c]).
struct SessionScores {
  RubricScore alliance;
  RubricScore interaction;
  std::string shape;

  double mean() const { return (alliance.total + interaction.total) / 2.0; }
};

struct ArcScores {
  RubricScore coherence;
  RubricScore flexibility;
  RubricScore empathy;
  RubricScore attunement;
  std::string shape;
};

inline constexpr std::string_view kAllianceDim = "Therapeutic Alliance Assessment";
inline constexpr std::string_view kInteractionDim = "Interaction Assessment";
inline constexpr std::string_view kCoherenceDim = "Coherence Assessment";
inline constexpr std::string_view kFlexibilityDim = "Flexibility Assessment";
inline constexpr std::string_view kEmpathyDim = "Empathy Assessment";
inline constexpr std::string_view kAttunementDim = "Therapeutic Attunement Assessment";

// Reads one dimension from a judge payload. Throws ParseFailure on a missing
// key, a malformed value or a total outside 0..3.
RubricScore parse_rubric(const Json& payload, std::string_view dimension);

// Dialogue text only, as judges see it: the opening line, then the turns.
std::string render_transcript(const SessionRecord& session);

// Throws PreconditionError for an open or empty session, JudgeError after one
// retry.
SessionScores judge_single_session(const LlmContext& judge, const SessionRecord& session);

// Throws PreconditionError for an incomplete arc, JudgeError after one retry.
ArcScores judge_multi_session(const LlmContext& judge, const ArcRecord& arc);

// Half-up rounding to `digits` decimals, robust to binary representation
// (2.3575 -> 2.358).
double round_half_up(double value, int digits);

// Relative improvement (a - b) / b. Throws ValidationError when b is 0.
double improvement(double a, double b);

struct ReportRow {
  std::string label;
  double alliance = 0, interaction = 0;
  double coherence = 0, flexibility = 0, empathy = 0, attunement = 0;
  double single_avg = 0, multi_avg = 0;
  std::size_t arcs = 0;
};

// Derived columns from per-dimension values (unrounded).
ReportRow make_row(std::string label, double alliance, double interaction, double coherence, double flexibility,
                   double empathy, double attunement);

// Per-dimension means over scored sessions and arcs. Throws PreconditionError
// when either collection is empty.
ReportRow aggregate_report(std::string label, std::span<const SessionScores> sessions,
                           std::span<const ArcScores> arcs);

// Markdown table with every value rounded half-up to 3 decimals.
std::string report_markdown(std::span<const ReportRow> rows);
Json report_json(std::span<const ReportRow> rows);

// Two-rater Cohen's kappa over categorical labels. Throws ValidationError for
// unequal or empty inputs. Returns 1 when both raters agree on one label only.
double cohens_kappa(std::span<const std::string> rater_a, std::span<const std::string> rater_b);

Json to_json(const SessionScores& s);
Json to_json(const ArcScores& s);
SessionScores session_scores_from_json(const Json& j);
ArcScores arc_scores_from_json(const Json& j);

// Behaviour analytics over recorded counselor annotations.
struct Distribution {
  std::map<std::string, std::size_t> counts;
  std::size_t total = 0;

  double frequency(const std::string& key) const;
  std::map<std::string, double> frequencies() const;
};

struct AttitudeIntensity {
  std::string case_id;
  int session = 0;
  int turn = 0;
  std::string attitude;
  double intensity = 0;
};

struct Analytics {
  Distribution emotions;
  Distribution strategies;
  std::map<int, Distribution> phases_by_session;
  std::vector<AttitudeIntensity> attitude_intensity;
};

Analytics analytics_extract(std::span<const ArcRecord> arcs);
Json to_json(const Analytics& a);
// CSV headers: "emotion,count,frequency"; "strategy,code,category,count,frequency";
// "session,phase,count,frequency"; "case_id,session,turn,attitude,intensity".
std::string emotions_csv(const Analytics& a);
std::string strategies_csv(const Analytics& a);
std::string phases_csv(const Analytics& a);
std::string attitude_intensity_csv(const Analytics& a);

}  // namespace counsel
