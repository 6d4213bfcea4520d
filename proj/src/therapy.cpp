#include "counsel/therapy.hpp"

#include "counsel/detail/stage_call.hpp"
#include "counsel/evaluation.hpp"
#include "counsel/memory.hpp"
#include "counsel/text.hpp"

namespace counsel {

namespace {

constexpr std::string_view kPlanNudge =
    "Return only the therapy name, or two names joined by ' + ', with no other text.";

std::string strip_decoration(std::string_view raw) {
  auto s = std::string(text::trim(raw));
  auto strip_edges = [&](std::string_view chars) {
    while (!s.empty() && chars.find(s.front()) != std::string_view::npos) s.erase(s.begin());
    while (!s.empty() && chars.find(s.back()) != std::string_view::npos) s.pop_back();
  };
  strip_edges("\"'`*-. \t\r\n");
  return s;
}

std::string capped_reason(const LlmContext& ctx, std::string reason) {
  auto capped = text::cap_words(reason, kReasonWordCap);
  if (capped.truncated) {
    detail::warn(ctx, Diagnostics::Kind::WordCap,
                 fmt::format("therapy reason of {} words truncated to {}", text::count_words(reason), kReasonWordCap));
  }
  return std::move(capped.text);
}

}  // namespace

TherapyPlan parse_plan_reply(std::string_view raw, std::string rationale) {
  auto cleaned = strip_decoration(raw);
  if (cleaned.empty()) throw ParseFailure("empty therapy reply");
  if (cleaned.find('\n') != std::string::npos) throw ParseFailure("therapy reply spans several lines");
  std::vector<std::string> methods;
  for (auto& part : text::split(cleaned, TherapyPlan::kSeparator)) methods.push_back(strip_decoration(part));
  try {
    return TherapyPlan::create(std::move(methods), std::move(rationale));
  } catch (const ValidationError& e) {
    throw ParseFailure(e.what());
  }
}

TherapyPlan select_initial_therapy(const LlmContext& ctx, const CaseFile& c) {
  std::string record = c.case_brief;
  if (!c.consultation_process.empty()) record += "\n" + c.consultation_process;
  auto request = detail::render_request(ctx, "initial_therapy", RolePreset::Judgment, {{"medical_record", record}});
  return detail::call_with_repair<TherapySelectError>(ctx, std::move(request), kPlanNudge,
                                                      [](const std::string& raw) { return parse_plan_reply(raw); });
}

EfficacyReport evaluate_efficacy(const LlmContext& judge, const SessionRecord& session, double threshold) {
  if (!session.closed()) throw PreconditionError(fmt::format("session {} is still open", session.index));
  SessionScores scores;
  try {
    scores = judge_single_session(judge, session);
  } catch (const PreconditionError&) {
    throw;
  } catch (const Error& e) {
    throw EfficacyError(fmt::format("efficacy of session {} could not be judged: {}", session.index, e.what()));
  }
  EfficacyReport report;
  report.score = scores.mean();
  report.effective = *report.score >= threshold;
  return report;
}

TherapySelection select_next_therapy(const LlmContext& ctx, const TherapyPlan& prev, const SessionRecord& session,
                                     EfficacyReport& efficacy) {
  if (!session.closed()) throw PreconditionError(fmt::format("session {} is still open", session.index));
  TherapySelection out{prev, {}};
  out.decision.session = session.index + 1;
  out.decision.prev = prev.render();
  out.decision.score = efficacy.score;

  try {
    auto request = detail::render_request(
        ctx, "therapy_adjustment", RolePreset::Judgment,
        {{"last_therapy", prev.render()},
         {"last_dialogs", flatten_turns(session.turns)},
         {"efficacy_score", efficacy.score ? fmt::format("{:.2f}", *efficacy.score) : std::string("not available")}});
    auto [plan, reason] = detail::call_with_repair<TherapySelectError>(
        ctx, std::move(request), detail::kJsonNudge, [](const std::string& raw) {
          auto therapy = detail::json_string_field(raw, "new_therapy");
          Json j = extract_json_object(raw);
          std::string why;
          if (auto r = j.find("reason"); r != j.end() && r->is_string()) why = std::string(text::trim(r->get<std::string>()));
          return std::pair{parse_plan_reply(therapy), why};
        });
    reason = capped_reason(ctx, std::move(reason));
    const bool same = plan.same_methods(prev);
    out.plan = same ? prev : TherapyPlan::create(plan.methods(), reason);
    out.decision.decision = same ? DecisionKind::Maintained : DecisionKind::Switched;
    out.decision.reason = reason;
    efficacy.effective = same;
    efficacy.reason = reason;
  } catch (const PreconditionError&) {
    throw;
  } catch (const Error& e) {
    detail::warn(ctx, Diagnostics::Kind::Fallback,
                 fmt::format("therapy selection after session {} failed, keeping '{}': {}", session.index,
                             prev.render(), e.what()));
    out.plan = prev;
    out.decision.decision = DecisionKind::Fallback;
    out.decision.reason = "selection failed; previous therapy kept";
    efficacy.reason = out.decision.reason;
  }
  out.decision.next = out.plan.render();
  out.decision.effective = efficacy.effective;
  return out;
}

TherapyPlan advance_arc(const LlmContext& ctx, const LlmContext& judge, ArcRecord& arc, double threshold) {
  if (arc.sessions.empty()) throw PreconditionError("arc has no session to evaluate");
  auto& last = arc.sessions.back();
  if (!last.completed()) throw PreconditionError(fmt::format("session {} did not close normally", last.index));
  if (last.index >= arc.planned_sessions) {
    throw PreconditionError(fmt::format("session {} is the last planned session", last.index));
  }
  EfficacyReport efficacy;
  try {
    efficacy = evaluate_efficacy(judge, last, threshold);
  } catch (const Error&) {
    arc.incomplete = true;
    throw;
  }
  auto selection = select_next_therapy(ctx, last.therapy, last, efficacy);
  last.efficacy = efficacy;
  arc.decisions.push_back(selection.decision);
  return selection.plan;
}

TherapyDecision initial_decision(const TherapyPlan& plan) {
  TherapyDecision d;
  d.session = 1;
  d.next = plan.render();
  d.reason = plan.rationale();
  d.decision = DecisionKind::Initial;
  return d;
}

}  // namespace counsel
