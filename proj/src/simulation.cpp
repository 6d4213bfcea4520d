#include "counsel/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <random>
#include <thread>

#include <spdlog/spdlog.h>

#include "counsel/detail/stage_call.hpp"
#include "counsel/json_io.hpp"
#include "counsel/memory.hpp"
#include "counsel/store.hpp"
#include "counsel/text.hpp"

namespace counsel {

namespace fs = std::filesystem;

namespace {

std::string required_text(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string() || text::trim(it->get<std::string>()).empty()) {
    throw ParseFailure(fmt::format("'{}' must be a non-empty string", key));
  }
  return std::string(text::trim(it->get<std::string>()));
}

PatientProfile parse_profile(const std::string& raw, int sessions) {
  Json j = extract_json_object(raw);
  PatientProfile p;
  p.profile = required_text(j, "profile");
  auto guides = j.find("guides");
  if (guides == j.end() || !guides->is_array()) throw ParseFailure("'guides' must be a list");
  if (static_cast<int>(guides->size()) != sessions) {
    throw ParseFailure(fmt::format("expected {} session guides, got {}", sessions, guides->size()));
  }
  for (const auto& g : *guides) {
    if (!g.is_object()) throw ParseFailure("each guide must be an object");
    SessionGuide guide;
    auto idx = g.find("session_index");
    if (idx == g.end() || !idx->is_number_integer()) throw ParseFailure("guide lacks an integer 'session_index'");
    guide.session_index = idx->get<int>();
    guide.goal = required_text(g, "goal");
    if (auto r = g.find("emotional_range"); r != g.end() && r->is_string()) {
      guide.emotional_range = std::string(text::trim(r->get<std::string>()));
    }
    p.guides.push_back(std::move(guide));
  }
  std::sort(p.guides.begin(), p.guides.end(),
            [](const SessionGuide& a, const SessionGuide& b) { return a.session_index < b.session_index; });
  for (int i = 0; i < sessions; ++i) {
    if (p.guides[static_cast<std::size_t>(i)].session_index != i + 1) {
      throw ParseFailure("guide indices must run 1..K");
    }
  }
  return p;
}

std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  // Rejection sampling keeps the draw unbiased and identical everywhere.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

}  // namespace

PatientProfile init_case(const LlmContext& ctx, const CaseFile& c, int sessions) {
  if (sessions < 1) throw PreconditionError("an arc needs at least one session");
  auto request = detail::render_request(ctx, "case_init", RolePreset::Judgment,
                                        {{"session_count", std::to_string(sessions)},
                                         {"title", c.title},
                                         {"category", std::string(to_string(c.category))},
                                         {"method", c.method},
                                         {"case_brief", c.case_brief},
                                         {"consultation_process", c.consultation_process},
                                         {"experience_thoughts", c.experience_thoughts}});
  return detail::call_with_repair<InitError>(
      ctx, std::move(request),
      fmt::format("Return only the JSON object with exactly {} guides.", sessions),
      [sessions](const std::string& raw) { return parse_profile(raw, sessions); });
}

std::string simulate_patient_reply(const LlmContext& ctx, const PatientProfile& profile, const SessionGuide& guide,
                                   int session, int turn_no, std::string_view counselor_message,
                                   std::string_view history) {
  std::string info = profile.profile;
  info += fmt::format("\nYour goal for this session: {}", guide.goal);
  if (!guide.emotional_range.empty()) info += fmt::format("\nEmotional range for this session: {}", guide.emotional_range);
  auto request = detail::render_request(ctx, "patient", RolePreset::Generation,
                                        {{"client_information", info},
                                         {"dialogue_count", std::to_string(turn_no)},
                                         {"session_number", std::to_string(session)},
                                         {"therapist_message", std::string(counselor_message)},
                                         {"historical_dialogs", history.empty() ? std::string("none") : std::string(history)}});
  request.max_output_words = static_cast<int>(kPatientWordTarget);
  return detail::call_with_word_cap<SimulatorError>(
      ctx, std::move(request),
      [](const std::string& raw) { return detail::json_string_field(raw, "patient_response"); }, kPatientWordTarget,
      kPatientWordCap);
}

SimulatedPatient::SimulatedPatient(LlmContext ctx, PatientProfile profile)
    : ctx_(ctx), profile_(std::move(profile)) {}

std::string SimulatedPatient::next_utterance(const ArcRecord& arc, const SessionRecord& session,
                                             std::string_view counselor_message) {
  if (session.index < 1 || session.index > static_cast<int>(profile_.guides.size())) {
    throw SimulatorError(fmt::format("no session guide for session {}", session.index));
  }
  const auto& guide = profile_.guides[static_cast<std::size_t>(session.index - 1)];
  return simulate_patient_reply(ctx_, profile_, guide, session.index, session.patient_turns() + 1, counselor_message,
                                flatten_history(arc.sessions));
}

void run_arc_into(ArcRecord& arc, const LlmContext& engine, const LlmContext& judge, const CaseFile& c,
                  const ArcRunOptions& options, ArcStore* store) {
  if (options.sessions < 1) throw PreconditionError("an arc needs at least one session");
  Diagnostics local;
  LlmContext eng = engine;
  LlmContext jdg = judge;
  eng.diagnostics = &local;
  jdg.diagnostics = &local;

  arc = ArcRecord{};
  arc.case_id = c.id;
  arc.planned_sessions = options.sessions;
  arc.manifest.backend_id = engine.gateway->backend_id();
  arc.manifest.judge_backend_id = judge.gateway->backend_id();
  for (auto role : {RolePreset::Generation, RolePreset::Judgment}) {
    arc.manifest.sampling[std::string(to_string(role))] = engine.gateway->sampling(role);
  }
  arc.manifest.sampling["judge"] = judge.gateway->sampling(RolePreset::Judge);
  arc.manifest.seed = options.seed;
  arc.manifest.started_at = text::utc_timestamp();

  auto finish = [&] {
    arc.manifest.finished_at = text::utc_timestamp();
    for (auto& [kind, message] : local.entries()) {
      arc.manifest.warnings.push_back(message);
      if (engine.diagnostics) engine.diagnostics->warn(kind, message);
    }
  };

  try {
    arc.patient = init_case(eng, c, options.sessions);
    auto plan = select_initial_therapy(eng, c);
    arc.decisions.push_back(initial_decision(plan));
    SimulatedPatient patient(eng, *arc.patient);
    for (int k = 1; k <= options.sessions; ++k) {
      if (k > 1) plan = advance_arc(eng, jdg, arc, options.effective_threshold);
      run_session(eng, options.engine, arc, k, plan, patient);
    }
  } catch (const Error&) {
    arc.incomplete = true;
    finish();
    if (store) {
      try {
        store->persist(arc);
      } catch (const StorageError& e) {
        spdlog::error("could not persist partial arc for case '{}': {}", c.id, e.what());
      }
    }
    throw;
  }
  finish();
}

ArcRecord run_arc(const LlmContext& engine, const LlmContext& judge, const CaseFile& c, const ArcRunOptions& options,
                  ArcStore* store) {
  ArcRecord arc;
  run_arc_into(arc, engine, judge, c, options, store);
  return arc;
}

std::vector<ArcOutcome> run_batch(const LlmContext& engine, const LlmContext& judge, const std::vector<CaseFile>& cases,
                                  const ArcRunOptions& options, ArcStore* store, int concurrency) {
  std::vector<ArcOutcome> results(cases.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cases.size(); i = next++) {
      auto& out = results[i];
      out.case_id = cases[i].id;
      try {
        run_arc_into(out.arc, engine, judge, cases[i], options, nullptr);
        if (store) out.arc_id = store->persist(out.arc);
      } catch (const Error& e) {
        out.error = e.what();
        if (store) {
          try {
            out.arc_id = store->persist(out.arc);
          } catch (const StorageError& se) {
            spdlog::error("could not persist partial arc for case '{}': {}", out.case_id, se.what());
          }
        }
      }
    }
  };
  const int threads = std::clamp(concurrency, 1, static_cast<int>(std::max<std::size_t>(1, cases.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return results;
}

void seeded_shuffle(std::vector<std::size_t>& items, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = items.size(); i > 1; --i) {
    auto j = static_cast<std::size_t>(bounded(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

CorpusLoad load_corpus(const fs::path& dir, std::optional<int> per_category, std::uint64_t seed) {
  if (!fs::is_directory(dir)) throw CorpusError(fmt::format("corpus directory '{}' does not exist", dir.string()));
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  CorpusLoad load;
  for (const auto& file : files) {
    Json j;
    try {
      j = Json::parse(read_file(file));
    } catch (const std::exception& e) {
      load.issues.push_back({file.filename().string(), "<document>", e.what()});
      continue;
    }
    try {
      load.cases.push_back(validate_case(j, file.stem().string()));
    } catch (const SchemaError& e) {
      load.issues.push_back({file.filename().string(), e.field(), e.what()});
    } catch (const ValidationError& e) {
      load.issues.push_back({file.filename().string(), "<document>", e.what()});
    }
  }
  if (!per_category) return load;
  if (*per_category < 1) throw CorpusError("per-category count must be positive");

  std::vector<CaseFile> sampled;
  for (auto category : kAllCategories) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < load.cases.size(); ++i) {
      if (load.cases[i].category == category) members.push_back(i);
    }
    if (static_cast<int>(members.size()) < *per_category) {
      throw CorpusError(fmt::format("category {} has {} valid cases, {} requested", to_string(category),
                                    members.size(), *per_category));
    }
    std::sort(members.begin(), members.end(),
              [&](std::size_t a, std::size_t b) { return load.cases[a].id < load.cases[b].id; });
    seeded_shuffle(members, seed ^ (static_cast<std::uint64_t>(category) * 0x9E3779B97F4A7C15ULL));
    for (int n = 0; n < *per_category; ++n) sampled.push_back(load.cases[members[static_cast<std::size_t>(n)]]);
  }
  load.cases = std::move(sampled);
  return load;
}

}  // namespace counsel
