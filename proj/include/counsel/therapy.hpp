#pragma once

#include <string_view>

#include "counsel/domain.hpp"
#include "counsel/llm.hpp"

namespace counsel {

inline constexpr double kDefaultEffectiveThreshold = 1.5;
inline constexpr std::size_t kReasonWordCap = 50;

// Splits a model-written plan on " + " after stripping quotes, list markers
// and a trailing period. Throws ParseFailure unless 1-2 methods remain.
TherapyPlan parse_plan_reply(std::string_view raw, std::string rationale = {});

// Medical record = case brief + consultation process. Throws
// TherapySelectError after one retry.
TherapyPlan select_initial_therapy(const LlmContext& ctx, const CaseFile& c);

// Numeric efficacy: mean of the two single-session rubric totals from the
// judge. `effective` is the threshold reading; select_next_therapy replaces it
// with the adjustment prompt's verdict. Throws EfficacyError.
EfficacyReport evaluate_efficacy(const LlmContext& judge, const SessionRecord& session,
                                 double threshold = kDefaultEffectiveThreshold);

struct TherapySelection {
  TherapyPlan plan;
  TherapyDecision decision;
};

// Asks the adjustment prompt to keep or change `prev`. Fills in efficacy's
// reason and verdict. On any failure the previous plan is kept and the
// decision is Fallback.
TherapySelection select_next_therapy(const LlmContext& ctx, const TherapyPlan& prev, const SessionRecord& session,
                                     EfficacyReport& efficacy);

// After the latest session closed: efficacy, selection, bookkeeping. Stores
// the report on the session and the decision on the arc and returns the plan
// for the next session. When efficacy fails the arc is flagged incomplete and
// the error propagates. Throws PreconditionError when the latest session is
// open or the last planned one.
TherapyPlan advance_arc(const LlmContext& ctx, const LlmContext& judge, ArcRecord& arc,
                        double threshold = kDefaultEffectiveThreshold);

// Decision record for session 1.
TherapyDecision initial_decision(const TherapyPlan& plan);

}  // namespace counsel
