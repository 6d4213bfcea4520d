#include "counsel/domain.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include <fmt/format.h>

#include "counsel/errors.hpp"
#include "counsel/text.hpp"

namespace counsel {

namespace {

constexpr std::array<std::string_view, 8> kEmotionNames = {
    "joy", "sadness", "anger", "fear", "disgust", "surprise", "trust", "anticipation"};

constexpr std::array<Strategy, 12> kStrategies = {{
    {"Interpretation", 'A', StrategyCategory::Challenging},
    {"Confrontation", 'B', StrategyCategory::Challenging},
    {"Invite to Take New Perspectives", 'C', StrategyCategory::Challenging},
    {"Invite to Explore New Actions", 'D', StrategyCategory::Challenging},
    {"Restatement", 'E', StrategyCategory::Supporting},
    {"Reflection of Feelings", 'F', StrategyCategory::Supporting},
    {"Self-disclosure", 'G', StrategyCategory::Supporting},
    {"Inquiring Subjective Information", 'H', StrategyCategory::Supporting},
    {"Inquiring Objective Information", 'I', StrategyCategory::Supporting},
    {"Affirmation and Reassurance", 'J', StrategyCategory::Supporting},
    {"Minimal Encouragement", 'K', StrategyCategory::Supporting},
    {"Answer", 'L', StrategyCategory::Supporting},
}};

constexpr std::array<std::string_view, 10> kCategoryNames = {
    "Love", "Family", "Emotion", "Youth", "Social",
    "Stress", "Addiction", "Anxiety", "Self-growth", "Rare"};

bool is_quote_or_space(char c) {
  return std::isspace(static_cast<unsigned char>(c)) || c == '"' || c == '\'' || c == '`' ||
         c == '*';
}

std::string_view strip_decoration(std::string_view s) {
  while (!s.empty() && is_quote_or_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && (is_quote_or_space(s.back()) || s.back() == '.' || s.back() == ',')) {
    s.remove_suffix(1);
  }
  return s;
}

// Canonical comparison key: lowercase letters and digits only, single spaces
// between words, hyphens treated as spaces ("Self disclosure" matches).
std::string match_key(std::string_view s) {
  std::string key;
  bool pending_space = false;
  for (char c : s) {
    unsigned char u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) {
      if (pending_space && !key.empty()) key += ' ';
      pending_space = false;
      key += static_cast<char>(std::tolower(u));
    } else {
      pending_space = true;
    }
  }
  return key;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string_view to_string(Emotion e) { return kEmotionNames[static_cast<std::size_t>(e)]; }

std::optional<Emotion> try_parse_emotion(std::string_view raw) {
  auto s = strip_decoration(raw);
  for (std::size_t i = 0; i < kEmotionNames.size(); ++i) {
    if (text::iequals(s, kEmotionNames[i])) return static_cast<Emotion>(i);
  }
  return std::nullopt;
}

Emotion parse_emotion(std::string_view raw) {
  if (auto e = try_parse_emotion(raw)) return *e;
  throw ValidationError(fmt::format("'{}' is not one of the eight emotion labels", raw));
}

Intensity Intensity::from_tenths(int tenths) {
  if (tenths < 0 || tenths > 10) {
    throw ValidationError(fmt::format("intensity tenths {} outside [0, 10]", tenths));
  }
  return Intensity(tenths);
}

Intensity Intensity::exact(double value) {
  double scaled = value * 10.0;
  double nearest = std::round(scaled);
  if (!std::isfinite(value) || std::fabs(scaled - nearest) > 1e-9) {
    throw ValidationError(fmt::format("intensity {} must have exactly one fractional digit", value));
  }
  return from_tenths(static_cast<int>(nearest));
}

Intensity Intensity::round_from_text(std::string_view decimal) {
  auto s = strip_decoration(decimal);
  bool negative = false;
  if (!s.empty() && (s.front() == '+' || s.front() == '-')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  // Split mantissa and optional exponent, then work on the digit string so
  // the rounding decision sees the literal decimal digits.
  std::string_view mantissa = s;
  int exponent = 0;
  if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
    mantissa = s.substr(0, e);
    auto exp_part = s.substr(e + 1);
    if (!exp_part.empty() && exp_part.front() == '+') exp_part.remove_prefix(1);
    auto [p, ec] = std::from_chars(exp_part.data(), exp_part.data() + exp_part.size(), exponent);
    if (ec != std::errc{} || p != exp_part.data() + exp_part.size()) {
      throw ParseFailure(fmt::format("'{}' is not a decimal number", decimal));
    }
  }
  std::string digits;
  int point = -1;
  for (char c : mantissa) {
    if (c == '.' && point < 0) {
      point = static_cast<int>(digits.size());
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      digits += c;
    } else {
      throw ParseFailure(fmt::format("'{}' is not a decimal number", decimal));
    }
  }
  if (digits.empty()) throw ParseFailure(fmt::format("'{}' is not a decimal number", decimal));
  if (point < 0) point = static_cast<int>(digits.size());
  point += exponent;
  while (digits.size() > 1 && digits.front() == '0') {
    digits.erase(digits.begin());
    --point;
  }
  if (negative && digits != "0") return Intensity(0);
  if (point > 1) return Intensity(10);  // >= 10

  // value = 0.d0 d1 d2 ... * 10^point; tenths are the digits left of index
  // point + 1 and the digit at that index decides the rounding.
  const int keep = point + 1;
  long tenths = 0;
  for (int i = 0; i < keep; ++i) {
    tenths = tenths * 10 + (i < static_cast<int>(digits.size()) ? digits[static_cast<std::size_t>(i)] - '0' : 0);
  }
  if (keep >= 0 && keep < static_cast<int>(digits.size()) &&
      digits[static_cast<std::size_t>(keep)] >= '5') {
    ++tenths;
  }
  return Intensity(static_cast<int>(std::clamp<long>(tenths, 0, 10)));
}

std::string Intensity::to_string() const { return fmt::format("{}.{}", tenths_ / 10, tenths_ % 10); }

std::string_view to_string(Attitude a) {
  return a == Attitude::Cooperative ? "Cooperative" : "Resistant";
}

Attitude parse_attitude(std::string_view raw) {
  auto s = strip_decoration(raw);
  if (text::iequals(s, "cooperative") || text::iequals(s, "positive")) return Attitude::Cooperative;
  if (text::iequals(s, "resistant") || text::iequals(s, "negative")) return Attitude::Resistant;
  throw ValidationError(fmt::format("unknown attitude '{}'", raw));
}

// ---------------------------------------------------------------------------

std::string_view to_string(StrategyCategory c) {
  return c == StrategyCategory::Challenging ? "Challenging" : "Supporting";
}

std::span<const Strategy> all_strategies() { return kStrategies; }

const Strategy& strategy_by_code(char code) {
  char upper = static_cast<char>(std::toupper(static_cast<unsigned char>(code)));
  if (upper < 'A' || upper > 'L') {
    throw UnknownStrategy(fmt::format("no strategy with option letter '{}'", code));
  }
  return kStrategies[static_cast<std::size_t>(upper - 'A')];
}

Strategy parse_strategy_name(std::string_view raw) {
  std::string_view s = strip_decoration(raw);

  // Drop a parenthesized gloss and anything after it.
  std::string without_gloss(s);
  if (auto open = without_gloss.find('('); open != std::string::npos) {
    without_gloss.erase(open);
  }
  std::string_view body = strip_decoration(without_gloss);

  auto try_match = [](std::string_view candidate) -> std::optional<Strategy> {
    auto key = match_key(candidate);
    if (key.empty()) return std::nullopt;
    for (const auto& strategy : kStrategies) {
      if (key == match_key(strategy.name)) return strategy;
    }
    return std::nullopt;
  };

  if (auto hit = try_match(body)) return *hit;

  // A bare option letter.
  if (body.size() == 1) {
    char letter = static_cast<char>(std::toupper(static_cast<unsigned char>(body[0])));
    if (letter >= 'A' && letter <= 'L') return strategy_by_code(letter);
  }

  // Option prefix: a single letter A-L followed by '.', ')', ':' or '-'.
  if (body.size() >= 2 && std::isalpha(static_cast<unsigned char>(body[0]))) {
    std::size_t i = 1;
    while (i + 1 < body.size() && body[i] == ' ') ++i;
    if (body[i] == '.' || body[i] == ')' || body[i] == ':' || body[i] == '-') {
      char letter = static_cast<char>(std::toupper(static_cast<unsigned char>(body[0])));
      auto rest = strip_decoration(body.substr(i + 1));
      if (letter >= 'A' && letter <= 'L') {
        if (rest.empty()) return strategy_by_code(letter);
        if (auto hit = try_match(rest)) return *hit;
      }
    }
  }
  // "(A) Interpretation" style.
  if (s.size() >= 3 && s[0] == '(' && s[2] == ')') {
    if (auto hit = try_match(s.substr(3))) return *hit;
  }
  throw UnknownStrategy(fmt::format("'{}' is not one of the twelve strategies", raw));
}

Attitude attitude_for(StrategyCategory category) {
  return category == StrategyCategory::Challenging ? Attitude::Cooperative : Attitude::Resistant;
}

// ---------------------------------------------------------------------------

TherapyPlan TherapyPlan::create(std::vector<std::string> methods, std::string rationale) {
  if (methods.empty() || methods.size() > 2) {
    throw ValidationError(
        fmt::format("a therapy plan needs one or two methods, got {}", methods.size()));
  }
  for (auto& m : methods) {
    m = std::string(text::trim(m));
    if (m.empty()) throw ValidationError("therapy method names must be non-empty");
  }
  TherapyPlan plan;
  plan.methods_ = std::move(methods);
  plan.rationale_ = std::move(rationale);
  return plan;
}

TherapyPlan TherapyPlan::parse(std::string_view rendered, std::string rationale) {
  return create(text::split(text::trim(rendered), kSeparator), std::move(rationale));
}

std::string TherapyPlan::render() const { return text::join(methods_, kSeparator); }

bool TherapyPlan::same_methods(const TherapyPlan& other) const {
  if (methods_.size() != other.methods_.size()) return false;
  for (std::size_t i = 0; i < methods_.size(); ++i) {
    if (!text::iequals(methods_[i], other.methods_[i])) return false;
  }
  return true;
}

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::Engagement:
      return "Engagement";
    case Phase::Exploration:
      return "Exploration";
    case Phase::Integration:
      return "Integration";
  }
  return "Engagement";
}

Phase parse_phase(std::string_view raw) {
  auto s = strip_decoration(raw);
  for (auto p : {Phase::Engagement, Phase::Exploration, Phase::Integration}) {
    if (text::iequals(s, to_string(p))) return p;
  }
  throw ValidationError(fmt::format("unknown phase '{}'", raw));
}

MemorySummary MemorySummary::some(std::string text) {
  if (text::trim(text).empty()) throw ValidationError("a memory summary needs text");
  MemorySummary m;
  m.text = std::move(text);
  return m;
}

std::string_view to_string(Role r) { return r == Role::Patient ? "patient" : "counselor"; }

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::PatientClosed:
      return "PatientClosed";
    case Termination::TurnCapReached:
      return "TurnCapReached";
    case Termination::Aborted:
      return "Aborted";
  }
  return "Aborted";
}

int SessionRecord::patient_turns() const {
  return static_cast<int>(std::count_if(turns.begin(), turns.end(),
                                        [](const Turn& t) { return t.role == Role::Patient; }));
}

std::string_view to_string(DecisionKind d) {
  switch (d) {
    case DecisionKind::Initial:
      return "initial";
    case DecisionKind::Maintained:
      return "maintained";
    case DecisionKind::Switched:
      return "switched";
    case DecisionKind::Fallback:
      return "fallback";
  }
  return "initial";
}

DecisionKind parse_decision_kind(std::string_view raw) {
  for (auto d : {DecisionKind::Initial, DecisionKind::Maintained, DecisionKind::Switched,
                 DecisionKind::Fallback}) {
    if (raw == to_string(d)) return d;
  }
  throw ValidationError(fmt::format("unknown therapy decision '{}'", raw));
}

bool ArcRecord::complete() const {
  if (incomplete || static_cast<int>(sessions.size()) != planned_sessions) return false;
  return std::all_of(sessions.begin(), sessions.end(),
                     [](const SessionRecord& s) { return s.completed(); });
}

// ---------------------------------------------------------------------------

std::string_view to_string(CaseCategory c) { return kCategoryNames[static_cast<std::size_t>(c)]; }

std::optional<CaseCategory> try_parse_category(std::string_view raw) {
  auto s = text::trim(raw);
  for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
    if (text::iequals(s, kCategoryNames[i])) return static_cast<CaseCategory>(i);
  }
  return std::nullopt;
}

CaseFile validate_case(const Json& raw, std::string_view fallback_id) {
  if (!raw.is_object()) throw SchemaError("$", "case file must be a JSON object");

  auto field = [&](const char* key, bool required_non_empty) -> std::string {
    auto it = raw.find(key);
    if (it == raw.end()) throw SchemaError(key, "missing");
    if (!it->is_string()) throw SchemaError(key, "must be a string");
    auto value = it->get<std::string>();
    if (required_non_empty && text::trim(value).empty()) throw SchemaError(key, "must be non-empty");
    return value;
  };

  CaseFile c;
  c.title = field("title", false);
  auto category = field("category", true);
  auto parsed = try_parse_category(category);
  if (!parsed) {
    throw SchemaError("category", fmt::format("'{}' is not one of the ten categories", category));
  }
  c.category = *parsed;
  c.method = field("method", false);
  c.case_brief = field("case_brief", true);
  c.consultation_process = field("consultation_process", false);
  c.experience_thoughts = field("experience_thoughts", false);

  if (auto it = raw.find("id"); it != raw.end()) {
    if (!it->is_string() || it->get<std::string>().empty()) {
      throw SchemaError("id", "must be a non-empty string");
    }
    c.id = it->get<std::string>();
  } else if (!fallback_id.empty()) {
    c.id = std::string(fallback_id);
  } else {
    c.id = text::sha256_hex(raw.dump()).substr(0, 12);
  }
  return c;
}

void check_arc_invariants(const ArcRecord& arc) {
  auto fail = [&](const std::string& what) {
    throw ValidationError(fmt::format("arc '{}': {}", arc.case_id, what));
  };
  if (static_cast<int>(arc.sessions.size()) > arc.planned_sessions) fail("more sessions than planned");
  for (std::size_t s = 0; s < arc.sessions.size(); ++s) {
    const auto& session = arc.sessions[s];
    if (session.index != static_cast<int>(s) + 1) fail("session indices are not contiguous from 1");
    std::vector<Strategy> trace;
    for (std::size_t t = 0; t < session.turns.size(); ++t) {
      const auto& turn = session.turns[t];
      Role expected = t % 2 == 0 ? Role::Patient : Role::Counselor;
      if (turn.role != expected) fail(fmt::format("session {} breaks role alternation", session.index));
      if (turn.index != static_cast<int>(t)) fail(fmt::format("session {} turn index gap", session.index));
      if (turn.role == Role::Patient && turn.annotations) {
        fail(fmt::format("session {} has an annotated patient turn", session.index));
      }
      if (turn.role == Role::Counselor) {
        if (!turn.annotations) fail(fmt::format("session {} counselor turn lacks annotations", session.index));
        const auto& a = *turn.annotations;
        if (a.strategy) {
          trace.push_back(*a.strategy);
          bool challenging = a.strategy->category == StrategyCategory::Challenging;
          if (!a.state.attitude || challenging != (*a.state.attitude == Attitude::Cooperative)) {
            fail(fmt::format("session {} turn {} violates the attitude/strategy gate", session.index, t));
          }
        }
        if (session.index == 1 && a.memory.has_value()) {
          fail("session 1 carries a memory summary");
        }
      }
    }
    if (!session.turns.empty() && session.turns.back().role != Role::Counselor) {
      fail(fmt::format("session {} does not end on a counselor turn", session.index));
    }
    if (trace != session.strategy_trace) fail(fmt::format("session {} strategy trace mismatch", session.index));
  }
}

}  // namespace counsel
