#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "counsel/domain.hpp"
#include "counsel/llm.hpp"
#include "counsel/session.hpp"
#include "counsel/store.hpp"
#include "counsel/therapy.hpp"

namespace counsel {

inline constexpr std::size_t kPatientWordTarget = 60;
inline constexpr std::size_t kPatientWordCap = 70;

// Persona and exactly `sessions` guides indexed 1..sessions. Throws InitError
// after one retry.
PatientProfile init_case(const LlmContext& ctx, const CaseFile& c, int sessions);

// One simulated patient line. `history` is the flattened record so far.
// Throws SimulatorError after one retry.
std::string simulate_patient_reply(const LlmContext& ctx, const PatientProfile& profile, const SessionGuide& guide,
                                   int session, int turn_no, std::string_view counselor_message,
                                   std::string_view history);

// PatientSource backed by the simulator prompt.
class SimulatedPatient : public PatientSource {
 public:
  SimulatedPatient(LlmContext ctx, PatientProfile profile);

  std::string next_utterance(const ArcRecord& arc, const SessionRecord& session,
                             std::string_view counselor_message) override;

 private:
  LlmContext ctx_;
  PatientProfile profile_;
};

struct ArcRunOptions {
  int sessions = kDefaultSessionCount;
  EngineConfig engine;
  double effective_threshold = kDefaultEffectiveThreshold;
  std::uint64_t seed = 0;
};

// Fills `arc` with a full simulated arc: case initialization, initial therapy,
// then sessions 1..K with advance_arc between them. On failure the arc keeps
// what completed, is flagged incomplete, is persisted when `store` is given,
// and the error propagates.
void run_arc_into(ArcRecord& arc, const LlmContext& engine, const LlmContext& judge, const CaseFile& c,
                  const ArcRunOptions& options, ArcStore* store = nullptr);

ArcRecord run_arc(const LlmContext& engine, const LlmContext& judge, const CaseFile& c, const ArcRunOptions& options,
                  ArcStore* store = nullptr);

struct ArcOutcome {
  std::string case_id;
  ArcRecord arc;
  // Set when the arc was persisted.
  std::string arc_id;
  // Set when the arc failed.
  std::optional<std::string> error;
};

// Runs independent arcs on up to `concurrency` threads. Results follow the
// order of `cases`.
std::vector<ArcOutcome> run_batch(const LlmContext& engine, const LlmContext& judge, const std::vector<CaseFile>& cases,
                                  const ArcRunOptions& options, ArcStore* store, int concurrency);

struct CorpusIssue {
  std::string file;
  std::string field;
  std::string message;
};

struct CorpusLoad {
  std::vector<CaseFile> cases;
  std::vector<CorpusIssue> issues;
};

// Loads every *.json case in `dir` (sorted by file name). Invalid files are
// reported in `issues`, not thrown. With `per_category`, returns exactly that
// many cases from each of the ten categories, chosen by a seeded shuffle;
// throws CorpusError naming the first category that falls short.
CorpusLoad load_corpus(const std::filesystem::path& dir, std::optional<int> per_category = std::nullopt,
                       std::uint64_t seed = 0);

// Portable seeded Fisher-Yates: same permutation on every platform.
void seeded_shuffle(std::vector<std::size_t>& items, std::uint64_t seed);

}  // namespace counsel
