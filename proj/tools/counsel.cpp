// Command-line front end: simulate, evaluate, report, chat, serve, replay.
#include <csignal>
#include <fstream>
#include <iostream>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "counsel/config.hpp"
#include "counsel/errors.hpp"
#include "counsel/evaluation.hpp"
#include "counsel/json_io.hpp"
#include "counsel/service.hpp"
#include "counsel/simulation.hpp"
#include "counsel/store.hpp"
#include "counsel/text.hpp"

namespace fs = std::filesystem;
using namespace counsel;

namespace {

struct Common {
  std::string config;
  std::string data_dir;
  std::string script;
  std::string judge_script;
  std::string prompt_dir;
  std::string audit_log;
  int sessions = 0;
  bool verbose = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("-c,--config", c.config, "Run config JSON (default: $COUNSEL_CONFIG)");
  app->add_option("-d,--data-dir", c.data_dir, "Data directory (default: $COUNSEL_DATA_DIR or ./data)");
  app->add_option("--script", c.script, "Use a scripted engine backend");
  app->add_option("--judge-script", c.judge_script, "Use a scripted judge backend");
  app->add_option("--prompts", c.prompt_dir, "Directory of prompt overrides");
  app->add_option("--audit-log", c.audit_log, "Append every model call to this JSONL file");
  app->add_option("-K,--sessions", c.sessions, "Sessions per arc");
  app->add_flag("-v,--verbose", c.verbose, "Debug logging");
}

RunConfig build_config(const Common& c) {
  auto config = resolve_run_config(c.config.empty() ? std::nullopt : std::optional<fs::path>(c.config));
  if (!c.data_dir.empty()) config.data_dir = c.data_dir;
  if (!c.script.empty()) {
    config.backend = BackendConfig{};
    config.backend.kind = "scripted";
    config.backend.script = c.script;
  }
  if (!c.judge_script.empty()) {
    BackendConfig judge;
    judge.kind = "scripted";
    judge.id = "scripted-judge";
    judge.script = c.judge_script;
    config.judge = judge;
  }
  if (!c.prompt_dir.empty()) config.prompt_dir = c.prompt_dir;
  if (!c.audit_log.empty()) config.audit_log = c.audit_log;
  if (c.sessions > 0) config.sessions = c.sessions;
  spdlog::set_level(c.verbose ? spdlog::level::debug : spdlog::level::warn);
  return config;
}

CaseFile read_case(const std::string& path) {
  auto j = Json::parse(read_file(path));
  return validate_case(j, fs::path(path).stem().string());
}

ArcRunOptions run_options(const RunConfig& config) {
  ArcRunOptions options;
  options.sessions = config.sessions;
  options.engine = config.engine;
  options.effective_threshold = config.effective_threshold;
  options.seed = config.seed;
  return options;
}

int cmd_simulate(const Common& common, const std::string& corpus, int stratify, std::uint64_t seed, int concurrency) {
  auto config = build_config(common);
  if (!corpus.empty()) config.corpus = corpus;
  if (stratify > 0) config.stratify = stratify;
  if (seed != 0) config.seed = seed;
  if (concurrency > 0) config.concurrency = concurrency;
  if (config.corpus.empty()) throw ConfigError("no corpus given (--corpus or config 'corpus')");

  auto rt = make_runtime(config);
  auto load = load_corpus(config.corpus, config.stratify, config.seed);
  for (const auto& issue : load.issues) {
    std::cerr << fmt::format("skipped {}: {} ({})\n", issue.file, issue.message, issue.field);
  }
  FileArcStore store(config.data_dir);
  auto outcomes =
      run_batch(rt->engine_ctx(), rt->judge_ctx(), load.cases, run_options(config), &store, config.concurrency);
  Json summary = Json::array();
  int failed = 0;
  for (const auto& o : outcomes) {
    if (o.error) ++failed;
    summary.push_back({{"case_id", o.case_id},
                       {"arc_id", o.arc_id},
                       {"complete", o.arc.complete()},
                       {"error", o.error ? Json(*o.error) : Json(nullptr)}});
  }
  std::cout << summary.dump(2) << '\n';
  return failed == 0 ? 0 : 2;
}

int cmd_evaluate(const Common& common, std::vector<std::string> arc_ids, const std::string& out_path) {
  auto config = build_config(common);
  auto rt = make_runtime(config);
  FileArcStore store(config.data_dir);
  if (arc_ids.empty()) arc_ids = store.list();
  auto judge = rt->judge_ctx();

  Json scores = Json::array();
  for (const auto& id : arc_ids) {
    auto arc = store.load(id);
    Json entry{{"arc_id", id}, {"case_id", arc.case_id}};
    try {
      Json sessions = Json::array();
      for (const auto& s : arc.sessions) sessions.push_back(to_json(judge_single_session(judge, s)));
      entry["sessions"] = std::move(sessions);
      entry["arc"] = to_json(judge_multi_session(judge, arc));
    } catch (const Error& e) {
      std::cerr << fmt::format("arc {} not scored: {}\n", id, e.what());
      continue;
    }
    scores.push_back(std::move(entry));
  }
  Json doc{{"judge_backend", rt->judge->backend_id()}, {"scores", scores}};
  if (out_path.empty()) {
    std::cout << doc.dump(2) << '\n';
  } else {
    write_file_atomic(out_path, doc.dump(2) + "\n");
  }
  return 0;
}

int cmd_report(const std::vector<std::string>& score_files, const std::vector<std::string>& labels,
               const std::string& json_out) {
  std::vector<ReportRow> rows;
  for (std::size_t i = 0; i < score_files.size(); ++i) {
    auto doc = Json::parse(read_file(score_files[i]));
    std::vector<SessionScores> sessions;
    std::vector<ArcScores> arcs;
    for (const auto& entry : doc.at("scores")) {
      for (const auto& s : entry.at("sessions")) sessions.push_back(session_scores_from_json(s));
      arcs.push_back(arc_scores_from_json(entry.at("arc")));
    }
    auto label = i < labels.size() ? labels[i] : fs::path(score_files[i]).stem().string();
    rows.push_back(aggregate_report(label, sessions, arcs));
  }
  std::cout << report_markdown(rows);
  if (!json_out.empty()) write_file_atomic(json_out, report_json(rows).dump(2) + "\n");
  return 0;
}

class TerminalPatient : public PatientSource {
 public:
  std::string next_utterance(const ArcRecord&, const SessionRecord&, std::string_view counselor_message) override {
    std::cout << "\nCounselor: " << counselor_message << "\nYou: " << std::flush;
    std::string line;
    while (std::getline(std::cin, line)) {
      if (!text::trim(line).empty()) return line;
      std::cout << "You: " << std::flush;
    }
    throw PreconditionError("input closed");
  }
};

int cmd_chat(const Common& common, const std::string& case_path, bool show_internals) {
  auto config = build_config(common);
  auto rt = make_runtime(config);
  auto c = read_case(case_path);
  auto engine = rt->engine_ctx();
  auto judge = rt->judge_ctx();

  ArcRecord arc;
  arc.case_id = c.id;
  arc.planned_sessions = config.sessions;
  arc.manifest.backend_id = rt->engine->backend_id();
  arc.manifest.started_at = text::utc_timestamp();
  auto plan = select_initial_therapy(engine, c);
  arc.decisions.push_back(initial_decision(plan));
  FileArcStore store(config.data_dir);

  for (int k = 1; k <= config.sessions; ++k) {
    if (k > 1) plan = advance_arc(engine, judge, arc, config.effective_threshold);
    std::cout << fmt::format("\n=== Session {} ({}) ===", k, plan.render());
    auto& session = open_session(arc, plan, config.engine);
    std::string counselor = session.opening;
    TerminalPatient you;
    while (!arc.sessions.back().closed()) {
      std::string line;
      try {
        line = you.next_utterance(arc, arc.sessions.back(), counselor);
      } catch (const PreconditionError&) {
        arc.incomplete = true;
        std::cout << "\nSaved as " << store.persist(arc) << '\n';
        return 0;
      }
      try {
        auto outcome = run_turn(engine, config.engine, arc, line);
        counselor = outcome.counselor.text;
        if (show_internals) {
          const auto& a = *outcome.counselor.annotations;
          std::cout << fmt::format("  [{} {} | {} | {} | memory: {}]\n", to_string(a.state.emotion),
                                   a.state.intensity.to_string(),
                                   a.state.attitude ? to_string(*a.state.attitude) : "-",
                                   a.strategy ? a.strategy->name : "-",
                                   a.memory.has_value() ? a.memory.text : "none");
        }
      } catch (const Error& e) {
        std::cerr << "turn failed: " << e.what() << '\n';
      }
    }
    std::cout << "\nCounselor: " << counselor << '\n';
  }
  std::cout << "\nSaved as " << store.persist(arc) << '\n';
  return 0;
}

HttpServer* g_server = nullptr;

int cmd_serve(const Common& common, const std::string& host, int port, bool wait_when_busy) {
  auto config = build_config(common);
  spdlog::set_level(spdlog::level::info);
  auto rt = make_runtime(config);
  FileArcStore store(config.data_dir);
  ServiceOptions options;
  options.engine = config.engine;
  options.effective_threshold = config.effective_threshold;
  options.wait_when_busy = wait_when_busy;
  options.run_concurrency = config.concurrency;
  ApiService service(*rt, store, options);
  HttpServer server(service);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  spdlog::info("listening on {}:{}", host, port);
  server.listen(host, port);
  return 0;
}

int cmd_replay(const Common& common, const std::string& cassette, const std::string& case_path,
               const std::string& expect) {
  auto config = build_config(common);
  config.backend = BackendConfig{};
  config.backend.kind = "replay";
  config.backend.cassette = cassette;
  auto rt = make_runtime(config);
  auto c = read_case(case_path);
  auto arc = run_arc(rt->engine_ctx(), rt->judge_ctx(), c, run_options(config));
  auto masked = mask_timestamps(to_json(arc));
  if (!expect.empty()) {
    auto golden = mask_timestamps(Json::parse(read_file(expect)));
    if (golden.dump() != masked.dump()) {
      std::cerr << "replayed arc differs from " << expect << '\n';
      return 1;
    }
    std::cerr << "replayed arc matches " << expect << '\n';
  }
  std::cout << masked.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Longitudinal counseling dialogue engine"};
  app.require_subcommand(1);

  Common common;
  auto* simulate = app.add_subcommand("simulate", "Run simulated arcs over a case corpus");
  add_common(simulate, common);
  std::string corpus;
  int stratify = 0;
  std::uint64_t seed = 0;
  int concurrency = 0;
  simulate->add_option("--corpus", corpus, "Directory of case JSON files");
  simulate->add_option("--stratify", stratify, "Cases per category");
  simulate->add_option("--seed", seed, "Sampling seed");
  simulate->add_option("-j,--concurrency", concurrency, "Arcs in parallel");

  auto* evaluate = app.add_subcommand("evaluate", "Score stored arcs with the judge");
  add_common(evaluate, common);
  std::vector<std::string> arc_ids;
  std::string scores_out;
  evaluate->add_option("arcs", arc_ids, "Arc ids (default: all)");
  evaluate->add_option("-o,--out", scores_out, "Write scores JSON here");

  auto* report = app.add_subcommand("report", "Aggregate score files into a results table");
  std::vector<std::string> score_files;
  std::vector<std::string> labels;
  std::string report_json_out;
  report->add_option("scores", score_files, "Score files from 'evaluate'")->required();
  report->add_option("-l,--label", labels, "Row label per score file");
  report->add_option("--json", report_json_out, "Also write the table as JSON");

  auto* chat = app.add_subcommand("chat", "Talk to the counselor in the terminal");
  add_common(chat, common);
  std::string case_path;
  bool internals = false;
  chat->add_option("--case", case_path, "Case file")->required();
  chat->add_flag("--internals", internals, "Print perception and strategy after each reply");

  auto* serve = app.add_subcommand("serve", "Start the HTTP API");
  add_common(serve, common);
  std::string host = "127.0.0.1";
  int port = 8080;
  bool wait_busy = false;
  serve->add_option("--host", host);
  serve->add_option("-p,--port", port);
  serve->add_flag("--wait-when-busy", wait_busy, "Queue concurrent turns instead of answering 429");

  auto* replay = app.add_subcommand("replay", "Re-run an arc from a recorded cassette");
  add_common(replay, common);
  std::string cassette;
  std::string replay_case;
  std::string expect;
  replay->add_option("--cassette", cassette, "Cassette JSONL")->required();
  replay->add_option("--case", replay_case, "Case file")->required();
  replay->add_option("--expect", expect, "Golden arc JSON to compare against");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) return cmd_simulate(common, corpus, stratify, seed, concurrency);
    if (*evaluate) return cmd_evaluate(common, arc_ids, scores_out);
    if (*report) return cmd_report(score_files, labels, report_json_out);
    if (*chat) return cmd_chat(common, case_path, internals);
    if (*serve) return cmd_serve(common, host, port, wait_busy);
    if (*replay) return cmd_replay(common, cassette, replay_case, expect);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
