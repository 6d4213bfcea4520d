#include "counsel/evaluation.hpp"

#include <cmath>
#include <set>

#include "counsel/detail/stage_call.hpp"
#include "counsel/text.hpp"

namespace counsel {

namespace {

int binary_item(const Json& v, std::string_view dimension) {
  if (!v.is_number_integer()) throw ParseFailure(fmt::format("'{}' sub-item is not an integer", dimension));
  int x = v.get<int>();
  if (x != 0 && x != 1) throw ParseFailure(fmt::format("'{}' sub-item {} is not 0 or 1", dimension, x));
  return x;
}

int checked_total(const Json& v, std::string_view dimension) {
  if (!v.is_number_integer()) throw ParseFailure(fmt::format("'{}' total is not an integer", dimension));
  int x = v.get<int>();
  if (x < 0 || x > 3) throw ParseFailure(fmt::format("'{}' total {} is outside 0..3", dimension, x));
  return x;
}

std::string shape_of(std::initializer_list<const RubricScore*> scores) {
  std::set<std::string> kinds;
  for (const auto* s : scores) kinds.insert(s->sub_items ? "sub_items" : "total");
  return kinds.size() == 1 ? *kinds.begin() : "mixed";
}

std::string fixed3(double v) { return fmt::format("{:.3f}", round_half_up(v, 3)); }

Json rubric_json(const RubricScore& r) {
  Json j;
  j["dimension"] = r.dimension;
  j["total"] = r.total;
  if (r.sub_items) {
    j["sub_items"] = Json::array({(*r.sub_items)[0], (*r.sub_items)[1], (*r.sub_items)[2]});
  } else {
    j["sub_items"] = nullptr;
  }
  return j;
}

RubricScore rubric_from_json(const Json& j) {
  RubricScore r;
  r.dimension = j.at("dimension").get<std::string>();
  r.total = j.at("total").get<int>();
  if (j.contains("sub_items") && j.at("sub_items").is_array()) {
    const auto& s = j.at("sub_items");
    r.sub_items = std::array<int, 3>{s.at(0).get<int>(), s.at(1).get<int>(), s.at(2).get<int>()};
  }
  return r;
}

}  // namespace

RubricScore parse_rubric(const Json& payload, std::string_view dimension) {
  auto it = payload.find(std::string(dimension));
  if (it == payload.end()) throw ParseFailure(fmt::format("missing dimension '{}'", dimension));
  RubricScore score;
  score.dimension = std::string(dimension);
  const Json& v = *it;
  if (v.is_array()) {
    if (v.size() == 1) {
      score.total = checked_total(v[0], dimension);
    } else if (v.size() == 3) {
      std::array<int, 3> items{binary_item(v[0], dimension), binary_item(v[1], dimension),
                               binary_item(v[2], dimension)};
      score.sub_items = items;
      score.total = items[0] + items[1] + items[2];
    } else {
      throw ParseFailure(fmt::format("'{}' has {} entries; expected 1 or 3", dimension, v.size()));
    }
  } else {
    score.total = checked_total(v, dimension);
  }
  return score;
}

std::string render_transcript(const SessionRecord& session) {
  std::string out;
  if (!session.opening.empty()) out = "Counselor: " + session.opening;
  for (const auto& turn : session.turns) {
    if (!out.empty()) out += '\n';
    out += turn.role == Role::Patient ? "Patient: " : "Counselor: ";
    out += turn.text;
  }
  return out;
}

SessionScores judge_single_session(const LlmContext& judge, const SessionRecord& session) {
  if (!session.closed() || session.turns.empty()) {
    throw PreconditionError(fmt::format("session {} is not a closed, non-empty session", session.index));
  }
  auto request = detail::render_request(judge, "judge_single", RolePreset::Judge,
                                        {{"session_name", fmt::format("Session {}", session.index)},
                                         {"session_dialogs", render_transcript(session)}});
  return detail::call_with_repair<JudgeError>(judge, std::move(request), detail::kJsonNudge, [](const std::string& raw) {
    Json j = extract_json_object(raw);
    SessionScores s;
    s.alliance = parse_rubric(j, kAllianceDim);
    s.interaction = parse_rubric(j, kInteractionDim);
    s.shape = shape_of({&s.alliance, &s.interaction});
    return s;
  });
}

ArcScores judge_multi_session(const LlmContext& judge, const ArcRecord& arc) {
  if (!arc.complete()) throw PreconditionError(fmt::format("arc '{}' is not complete", arc.case_id));
  std::string dialogs;
  for (const auto& session : arc.sessions) {
    if (!dialogs.empty()) dialogs += "\n\n";
    dialogs += fmt::format("Session {}:\n{}", session.index, render_transcript(session));
  }
  auto request = detail::render_request(judge, "judge_multi", RolePreset::Judge,
                                        {{"session_count", std::to_string(arc.sessions.size())},
                                         {"session_dialogs", dialogs}});
  return detail::call_with_repair<JudgeError>(judge, std::move(request), detail::kJsonNudge, [](const std::string& raw) {
    Json j = extract_json_object(raw);
    ArcScores s;
    s.coherence = parse_rubric(j, kCoherenceDim);
    s.flexibility = parse_rubric(j, kFlexibilityDim);
    s.empathy = parse_rubric(j, kEmpathyDim);
    s.attunement = parse_rubric(j, kAttunementDim);
    s.shape = shape_of({&s.coherence, &s.flexibility, &s.empathy, &s.attunement});
    return s;
  });
}

double round_half_up(double value, int digits) {
  const double scale = std::pow(10.0, digits);
  // The nudge absorbs representation error such as 2.3575 -> 2.35749999...
  return std::floor(value * scale + 0.5 + 1e-9) / scale;
}

double improvement(double a, double b) {
  if (b == 0.0) throw ValidationError("improvement over a zero baseline is undefined");
  return (a - b) / b;
}

ReportRow make_row(std::string label, double alliance, double interaction, double coherence, double flexibility,
                   double empathy, double attunement) {
  ReportRow row;
  row.label = std::move(label);
  row.alliance = alliance;
  row.interaction = interaction;
  row.coherence = coherence;
  row.flexibility = flexibility;
  row.empathy = empathy;
  row.attunement = attunement;
  row.single_avg = (alliance + interaction) / 2.0;
  row.multi_avg = (coherence + flexibility + empathy + attunement) / 4.0;
  return row;
}

ReportRow aggregate_report(std::string label, std::span<const SessionScores> sessions,
                           std::span<const ArcScores> arcs) {
  if (sessions.empty() || arcs.empty()) throw PreconditionError("aggregation needs at least one scored arc");
  double al = 0, in = 0, co = 0, fl = 0, em = 0, at = 0;
  for (const auto& s : sessions) {
    al += s.alliance.total;
    in += s.interaction.total;
  }
  for (const auto& a : arcs) {
    co += a.coherence.total;
    fl += a.flexibility.total;
    em += a.empathy.total;
    at += a.attunement.total;
  }
  const double ns = static_cast<double>(sessions.size());
  const double na = static_cast<double>(arcs.size());
  auto row = make_row(std::move(label), al / ns, in / ns, co / na, fl / na, em / na, at / na);
  row.arcs = arcs.size();
  return row;
}

std::string report_markdown(std::span<const ReportRow> rows) {
  std::string out =
      "| Model | T.Alli | Inter | Single Avg | Coh | Flex | Emp | T.Attun | Multi Avg |\n"
      "|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& r : rows) {
    out += fmt::format("| {} | {} | {} | {} | {} | {} | {} | {} | {} |\n", r.label, fixed3(r.alliance),
                       fixed3(r.interaction), fixed3(r.single_avg), fixed3(r.coherence), fixed3(r.flexibility),
                       fixed3(r.empathy), fixed3(r.attunement), fixed3(r.multi_avg));
  }
  return out;
}

Json report_json(std::span<const ReportRow> rows) {
  Json out = Json::array();
  for (const auto& r : rows) {
    Json j;
    j["model"] = r.label;
    j["arcs"] = r.arcs;
    j["single_session"] = {{"T.Alli", round_half_up(r.alliance, 3)},
                           {"Inter", round_half_up(r.interaction, 3)},
                           {"Avg", round_half_up(r.single_avg, 3)}};
    j["multi_session"] = {{"Coh", round_half_up(r.coherence, 3)},
                          {"Flex", round_half_up(r.flexibility, 3)},
                          {"Emp", round_half_up(r.empathy, 3)},
                          {"T.Attun", round_half_up(r.attunement, 3)},
                          {"Avg", round_half_up(r.multi_avg, 3)}};
    out.push_back(std::move(j));
  }
  return out;
}

double cohens_kappa(std::span<const std::string> rater_a, std::span<const std::string> rater_b) {
  if (rater_a.size() != rater_b.size() || rater_a.empty()) {
    throw ValidationError("kappa needs two equally long, non-empty label lists");
  }
  std::map<std::string, std::pair<double, double>> marginals;
  double agree = 0;
  for (std::size_t i = 0; i < rater_a.size(); ++i) {
    if (rater_a[i] == rater_b[i]) agree += 1;
    marginals[rater_a[i]].first += 1;
    marginals[rater_b[i]].second += 1;
  }
  const double n = static_cast<double>(rater_a.size());
  const double po = agree / n;
  double pe = 0;
  for (const auto& [label, m] : marginals) pe += (m.first / n) * (m.second / n);
  if (pe >= 1.0) return 1.0;
  return (po - pe) / (1.0 - pe);
}

Json to_json(const SessionScores& s) {
  Json j;
  j["alliance"] = rubric_json(s.alliance);
  j["interaction"] = rubric_json(s.interaction);
  j["shape"] = s.shape;
  return j;
}

Json to_json(const ArcScores& s) {
  Json j;
  j["coherence"] = rubric_json(s.coherence);
  j["flexibility"] = rubric_json(s.flexibility);
  j["empathy"] = rubric_json(s.empathy);
  j["attunement"] = rubric_json(s.attunement);
  j["shape"] = s.shape;
  return j;
}

SessionScores session_scores_from_json(const Json& j) {
  SessionScores s;
  s.alliance = rubric_from_json(j.at("alliance"));
  s.interaction = rubric_from_json(j.at("interaction"));
  s.shape = j.value("shape", "total");
  return s;
}

ArcScores arc_scores_from_json(const Json& j) {
  ArcScores s;
  s.coherence = rubric_from_json(j.at("coherence"));
  s.flexibility = rubric_from_json(j.at("flexibility"));
  s.empathy = rubric_from_json(j.at("empathy"));
  s.attunement = rubric_from_json(j.at("attunement"));
  s.shape = j.value("shape", "total");
  return s;
}

}  // namespace counsel
