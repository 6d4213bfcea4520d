#include "counsel/json_io.hpp"

#include <fmt/format.h>

#include "counsel/errors.hpp"

namespace counsel {

namespace {

template <class T>
T get_field(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(key, "missing");
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(key, e.what());
  }
}

template <class T>
std::optional<T> get_optional(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(key, e.what());
  }
}

const Json& get_node(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError(key, "missing");
  return *it;
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }
Json optional_json(const std::optional<bool>& v) { return v ? Json(*v) : Json(nullptr); }

Strategy strategy_from_name(const std::string& name) {
  try {
    return parse_strategy_name(name);
  } catch (const UnknownStrategy& e) {
    throw SchemaError("strategy", e.what());
  }
}

Termination parse_termination(std::string_view raw) {
  for (auto t : {Termination::PatientClosed, Termination::TurnCapReached, Termination::Aborted}) {
    if (raw == to_string(t)) return t;
  }
  throw SchemaError("termination", fmt::format("unknown value '{}'", raw));
}

}  // namespace

Json to_json(const SamplingParams& s) {
  Json j;
  j["temperature"] = s.temperature;
  j["top_p"] = s.top_p;
  j["top_k"] = s.top_k ? Json(*s.top_k) : Json(nullptr);
  return j;
}

SamplingParams sampling_from_json(const Json& j) {
  SamplingParams s;
  s.temperature = get_field<double>(j, "temperature");
  s.top_p = get_field<double>(j, "top_p");
  s.top_k = get_optional<int>(j, "top_k");
  return s;
}

Json to_json(const PatientState& s) {
  Json j;
  j["emotion"] = to_string(s.emotion);
  j["intensity"] = s.intensity.value();
  j["attitude"] = s.attitude ? Json(to_string(*s.attitude)) : Json(nullptr);
  j["is_rejecting"] = s.is_rejecting;
  return j;
}

PatientState patient_state_from_json(const Json& j) {
  PatientState s;
  s.emotion = parse_emotion(get_field<std::string>(j, "emotion"));
  s.intensity = Intensity::exact(get_field<double>(j, "intensity"));
  if (auto a = get_optional<std::string>(j, "attitude")) s.attitude = parse_attitude(*a);
  s.is_rejecting = get_field<bool>(j, "is_rejecting");
  return s;
}

Json to_json(const Annotations& a) {
  Json j;
  j["state"] = to_json(a.state);
  if (a.strategy) {
    j["strategy"] = a.strategy->name;
    j["strategy_code"] = std::string(1, a.strategy->code);
    j["strategy_category"] = to_string(a.strategy->category);
  } else {
    j["strategy"] = nullptr;
  }
  j["guidance"] = a.guidance;
  j["memory"] = a.memory.has_value() ? Json(a.memory.text) : Json(nullptr);
  if (a.phase) {
    j["phase"] = {{"tag", to_string(a.phase->tag)}, {"text", a.phase->text}};
  } else {
    j["phase"] = nullptr;
  }
  return j;
}

Annotations annotations_from_json(const Json& j) {
  Annotations a;
  a.state = patient_state_from_json(get_node(j, "state"));
  if (auto name = get_optional<std::string>(j, "strategy")) a.strategy = strategy_from_name(*name);
  a.guidance = get_field<std::string>(j, "guidance");
  if (auto memory = get_optional<std::string>(j, "memory")) a.memory = MemorySummary::some(*memory);
  if (auto it = j.find("phase"); it != j.end() && !it->is_null()) {
    a.phase = PhaseNote{get_field<std::string>(*it, "text"), parse_phase(get_field<std::string>(*it, "tag"))};
  }
  return a;
}

Json to_json(const Turn& t) {
  Json j;
  j["index"] = t.index;
  j["role"] = to_string(t.role);
  j["text"] = t.text;
  j["annotations"] = t.annotations ? to_json(*t.annotations) : Json(nullptr);
  return j;
}

Turn turn_from_json(const Json& j) {
  Turn t;
  t.index = get_field<int>(j, "index");
  auto role = get_field<std::string>(j, "role");
  if (role == "patient") {
    t.role = Role::Patient;
  } else if (role == "counselor") {
    t.role = Role::Counselor;
  } else {
    throw SchemaError("role", fmt::format("unknown role '{}'", role));
  }
  t.text = get_field<std::string>(j, "text");
  if (auto it = j.find("annotations"); it != j.end() && !it->is_null()) {
    t.annotations = annotations_from_json(*it);
  }
  return t;
}

Json to_json(const TherapyPlan& p) {
  Json j;
  j["methods"] = p.methods();
  j["rendered"] = p.render();
  j["rationale"] = p.rationale();
  return j;
}

TherapyPlan therapy_from_json(const Json& j) {
  return TherapyPlan::create(get_field<std::vector<std::string>>(j, "methods"),
                             get_field<std::string>(j, "rationale"));
}

Json to_json(const EfficacyReport& e) {
  Json j;
  j["effective"] = e.effective;
  j["reason"] = e.reason;
  j["score"] = optional_json(e.score);
  return j;
}

EfficacyReport efficacy_from_json(const Json& j) {
  EfficacyReport e;
  e.effective = get_field<bool>(j, "effective");
  e.reason = get_field<std::string>(j, "reason");
  e.score = get_optional<double>(j, "score");
  return e;
}

Json to_json(const SessionRecord& s) {
  Json j;
  j["session_index"] = s.index;
  j["therapy"] = to_json(s.therapy);
  j["opening"] = s.opening;
  j["termination"] = s.termination ? Json(to_string(*s.termination)) : Json(nullptr);
  Json trace = Json::array();
  for (const auto& st : s.strategy_trace) trace.push_back(st.name);
  j["strategy_trace"] = std::move(trace);
  j["efficacy"] = s.efficacy ? to_json(*s.efficacy) : Json(nullptr);
  Json turns = Json::array();
  for (const auto& t : s.turns) turns.push_back(to_json(t));
  j["turns"] = std::move(turns);
  return j;
}

SessionRecord session_from_json(const Json& j) {
  SessionRecord s;
  s.index = get_field<int>(j, "session_index");
  s.therapy = therapy_from_json(get_node(j, "therapy"));
  s.opening = get_field<std::string>(j, "opening");
  if (auto t = get_optional<std::string>(j, "termination")) s.termination = parse_termination(*t);
  for (const auto& name : get_field<std::vector<std::string>>(j, "strategy_trace")) {
    s.strategy_trace.push_back(strategy_from_name(name));
  }
  if (auto it = j.find("efficacy"); it != j.end() && !it->is_null()) s.efficacy = efficacy_from_json(*it);
  for (const auto& t : get_node(j, "turns")) s.turns.push_back(turn_from_json(t));
  return s;
}

Json to_json(const TherapyDecision& d) {
  Json j;
  j["k"] = d.session;
  j["prev"] = d.prev;
  j["next"] = d.next;
  j["score"] = optional_json(d.score);
  j["effective"] = optional_json(d.effective);
  j["reason"] = d.reason;
  j["decision"] = to_string(d.decision);
  return j;
}

TherapyDecision decision_from_json(const Json& j) {
  TherapyDecision d;
  d.session = get_field<int>(j, "k");
  d.prev = get_field<std::string>(j, "prev");
  d.next = get_field<std::string>(j, "next");
  d.score = get_optional<double>(j, "score");
  d.effective = get_optional<bool>(j, "effective");
  d.reason = get_field<std::string>(j, "reason");
  d.decision = parse_decision_kind(get_field<std::string>(j, "decision"));
  return d;
}

Json to_json(const RunManifest& m) {
  Json j;
  j["backend_id"] = m.backend_id;
  j["judge_backend_id"] = m.judge_backend_id;
  Json sampling = Json::object();
  for (const auto& [role, params] : m.sampling) sampling[role] = to_json(params);
  j["sampling"] = std::move(sampling);
  j["seed"] = m.seed;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  j["warnings"] = m.warnings;
  return j;
}

RunManifest manifest_from_json(const Json& j) {
  RunManifest m;
  m.backend_id = get_field<std::string>(j, "backend_id");
  m.judge_backend_id = get_field<std::string>(j, "judge_backend_id");
  for (const auto& [role, params] : get_node(j, "sampling").items()) {
    m.sampling[role] = sampling_from_json(params);
  }
  m.seed = get_field<std::uint64_t>(j, "seed");
  m.started_at = get_field<std::string>(j, "started_at");
  m.finished_at = get_field<std::string>(j, "finished_at");
  m.warnings = get_field<std::vector<std::string>>(j, "warnings");
  return m;
}

Json to_json(const PatientProfile& p) {
  Json j;
  j["profile"] = p.profile;
  Json guides = Json::array();
  for (const auto& g : p.guides) {
    guides.push_back({{"session_index", g.session_index},
                      {"goal", g.goal},
                      {"emotional_range", g.emotional_range}});
  }
  j["guides"] = std::move(guides);
  return j;
}

PatientProfile profile_from_json(const Json& j) {
  PatientProfile p;
  p.profile = get_field<std::string>(j, "profile");
  for (const auto& g : get_node(j, "guides")) {
    p.guides.push_back({get_field<int>(g, "session_index"), get_field<std::string>(g, "goal"),
                        get_field<std::string>(g, "emotional_range")});
  }
  return p;
}

Json to_json(const ArcRecord& arc) {
  Json j;
  j["case_id"] = arc.case_id;
  j["K"] = arc.planned_sessions;
  j["incomplete"] = arc.incomplete;
  j["manifest"] = to_json(arc.manifest);
  j["patient"] = arc.patient ? to_json(*arc.patient) : Json(nullptr);
  Json decisions = Json::array();
  for (const auto& d : arc.decisions) decisions.push_back(to_json(d));
  j["decisions"] = std::move(decisions);
  Json sessions = Json::array();
  for (const auto& s : arc.sessions) sessions.push_back(to_json(s));
  j["sessions"] = std::move(sessions);
  return j;
}

ArcRecord arc_from_json(const Json& j) {
  ArcRecord arc;
  arc.case_id = get_field<std::string>(j, "case_id");
  arc.planned_sessions = get_field<int>(j, "K");
  arc.incomplete = get_field<bool>(j, "incomplete");
  arc.manifest = manifest_from_json(get_node(j, "manifest"));
  if (auto it = j.find("patient"); it != j.end() && !it->is_null()) arc.patient = profile_from_json(*it);
  for (const auto& d : get_node(j, "decisions")) arc.decisions.push_back(decision_from_json(d));
  for (const auto& s : get_node(j, "sessions")) arc.sessions.push_back(session_from_json(s));
  return arc;
}

Json to_json(const CaseFile& c) {
  Json j;
  j["id"] = c.id;
  j["title"] = c.title;
  j["category"] = to_string(c.category);
  j["method"] = c.method;
  j["case_brief"] = c.case_brief;
  j["consultation_process"] = c.consultation_process;
  j["experience_thoughts"] = c.experience_thoughts;
  return j;
}

void write_transcript_jsonl(std::ostream& out, std::string_view arc_id, const ArcRecord& arc) {
  for (const auto& session : arc.sessions) {
    for (const auto& turn : session.turns) {
      Json line;
      line["arc_id"] = arc_id;
      line["session"] = session.index;
      line["index"] = turn.index;
      line["role"] = to_string(turn.role);
      line["text"] = turn.text;
      line["annotations"] = turn.annotations ? to_json(*turn.annotations) : Json(nullptr);
      out << line.dump() << '\n';
    }
  }
}

void write_decisions_jsonl(std::ostream& out, std::string_view arc_id, const ArcRecord& arc) {
  for (const auto& d : arc.decisions) {
    Json line;
    line["arc_id"] = arc_id;
    const Json fields = to_json(d);
    for (const auto& [key, value] : fields.items()) line[key] = value;
    out << line.dump() << '\n';
  }
}

Json mask_timestamps(Json arc_json) {
  if (auto it = arc_json.find("manifest"); it != arc_json.end() && it->is_object()) {
    (*it)["started_at"] = "<masked>";
    (*it)["finished_at"] = "<masked>";
  }
  return arc_json;
}

}  // namespace counsel
