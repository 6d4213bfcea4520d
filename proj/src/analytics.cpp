#include <fmt/format.h>

#include "counsel/evaluation.hpp"

namespace counsel {

namespace {

void add(Distribution& d, const std::string& key) {
  ++d.counts[key];
  ++d.total;
}

Json distribution_json(const Distribution& d) {
  Json j;
  j["total"] = d.total;
  Json counts = Json::object();
  Json freq = Json::object();
  for (const auto& [key, n] : d.counts) {
    counts[key] = n;
    freq[key] = d.frequency(key);
  }
  j["counts"] = std::move(counts);
  j["frequencies"] = std::move(freq);
  return j;
}

// Quotes a CSV field when it contains a separator, quote or newline.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

double Distribution::frequency(const std::string& key) const {
  if (total == 0) return 0.0;
  auto it = counts.find(key);
  return it == counts.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(total);
}

std::map<std::string, double> Distribution::frequencies() const {
  std::map<std::string, double> out;
  for (const auto& [key, n] : counts) out[key] = frequency(key);
  return out;
}

Analytics analytics_extract(std::span<const ArcRecord> arcs) {
  Analytics a;
  for (const auto& arc : arcs) {
    for (const auto& session : arc.sessions) {
      for (const auto& turn : session.turns) {
        if (turn.role != Role::Counselor || !turn.annotations) continue;
        const auto& notes = *turn.annotations;
        add(a.emotions, std::string(to_string(notes.state.emotion)));
        if (notes.strategy) add(a.strategies, std::string(notes.strategy->name));
        if (notes.phase) add(a.phases_by_session[session.index], std::string(to_string(notes.phase->tag)));
        if (notes.state.attitude) {
          a.attitude_intensity.push_back({arc.case_id, session.index, turn.index,
                                          std::string(to_string(*notes.state.attitude)),
                                          notes.state.intensity.value()});
        }
      }
    }
  }
  return a;
}

Json to_json(const Analytics& a) {
  Json j;
  j["emotions"] = distribution_json(a.emotions);
  j["strategies"] = distribution_json(a.strategies);
  Json phases = Json::object();
  for (const auto& [session, d] : a.phases_by_session) phases[std::to_string(session)] = distribution_json(d);
  j["phases_by_session"] = std::move(phases);
  Json pairs = Json::array();
  for (const auto& p : a.attitude_intensity) {
    pairs.push_back({{"case_id", p.case_id},
                     {"session", p.session},
                     {"turn", p.turn},
                     {"attitude", p.attitude},
                     {"intensity", p.intensity}});
  }
  j["attitude_intensity"] = std::move(pairs);
  return j;
}

std::string emotions_csv(const Analytics& a) {
  std::string out = "emotion,count,frequency\n";
  for (const auto& [key, n] : a.emotions.counts) {
    out += fmt::format("{},{},{:.6f}\n", key, n, a.emotions.frequency(key));
  }
  return out;
}

std::string strategies_csv(const Analytics& a) {
  std::string out = "strategy,code,category,count,frequency\n";
  for (const auto& [key, n] : a.strategies.counts) {
    auto s = parse_strategy_name(key);
    out += fmt::format("{},{},{},{},{:.6f}\n", csv_field(key), s.code, to_string(s.category), n,
                       a.strategies.frequency(key));
  }
  return out;
}

std::string phases_csv(const Analytics& a) {
  std::string out = "session,phase,count,frequency\n";
  for (const auto& [session, d] : a.phases_by_session) {
    for (const auto& [key, n] : d.counts) out += fmt::format("{},{},{},{:.6f}\n", session, key, n, d.frequency(key));
  }
  return out;
}

std::string attitude_intensity_csv(const Analytics& a) {
  std::string out = "case_id,session,turn,attitude,intensity\n";
  for (const auto& p : a.attitude_intensity) {
    out += fmt::format("{},{},{},{},{:.1f}\n", csv_field(p.case_id), p.session, p.turn, p.attitude, p.intensity);
  }
  return out;
}

}  // namespace counsel
