#pragma once

#include <ostream>
#include <string>
#include <string_view>

#include "counsel/domain.hpp"

namespace counsel {

// Field order in every serializer is fixed; the golden fixtures depend on it.

Json to_json(const SamplingParams& s);
SamplingParams sampling_from_json(const Json& j);

Json to_json(const PatientState& s);
PatientState patient_state_from_json(const Json& j);

Json to_json(const Annotations& a);
Annotations annotations_from_json(const Json& j);

Json to_json(const Turn& t);
Turn turn_from_json(const Json& j);

Json to_json(const TherapyPlan& p);
TherapyPlan therapy_from_json(const Json& j);

Json to_json(const EfficacyReport& e);
EfficacyReport efficacy_from_json(const Json& j);

Json to_json(const SessionRecord& s);
SessionRecord session_from_json(const Json& j);

Json to_json(const TherapyDecision& d);
TherapyDecision decision_from_json(const Json& j);

Json to_json(const RunManifest& m);
RunManifest manifest_from_json(const Json& j);

Json to_json(const PatientProfile& p);
PatientProfile profile_from_json(const Json& j);

Json to_json(const ArcRecord& arc);
ArcRecord arc_from_json(const Json& j);

Json to_json(const CaseFile& c);

// One JSON object per turn: {arc_id, session, index, role, text, annotations}.
void write_transcript_jsonl(std::ostream& out, std::string_view arc_id, const ArcRecord& arc);

// One line per therapy decision:
// {arc_id, k, prev, next, score, effective, reason, decision}.
void write_decisions_jsonl(std::ostream& out, std::string_view arc_id, const ArcRecord& arc);

// Copy of the arc JSON with run timestamps blanked, for golden comparisons.
Json mask_timestamps(Json arc_json);

}  // namespace counsel
