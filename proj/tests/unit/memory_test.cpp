#include <gtest/gtest.h>

#include "../support/harness.hpp"
#include "../support/scripts.hpp"
#include "counsel/errors.hpp"
#include "counsel/memory.hpp"
#include "counsel/text.hpp"

using namespace counsel;
using namespace counsel::testing;

namespace {

SessionRecord session_with(int index, std::vector<std::string> lines) {
  SessionRecord s;
  s.index = index;
  s.opening = "Hello.";
  for (std::size_t i = 0; i < lines.size(); ++i) {
    Turn t;
    t.index = static_cast<int>(i);
    t.role = i % 2 == 0 ? Role::Patient : Role::Counselor;
    t.text = lines[i];
    s.turns.push_back(t);
  }
  s.termination = Termination::PatientClosed;
  return s;
}

}  // namespace

TEST(Flatten, TurnsAndSessions) {
  auto s1 = session_with(1, {"My ribs hurt.", "Tell me more."});
  auto s2 = session_with(2, {"Better today.", "Good to hear."});
  EXPECT_EQ(flatten_turns(s1.turns), "Patient: My ribs hurt.\nCounselor: Tell me more.");
  std::vector<SessionRecord> both = {s1, s2};
  EXPECT_EQ(flatten_history(both),
            "Session 1:\nPatient: My ribs hurt.\nCounselor: Tell me more.\n\n"
            "Session 2:\nPatient: Better today.\nCounselor: Good to hear.");
  EXPECT_EQ(flatten_history({}), "");
}

TEST(Memory, NoPriorSessionsMeansNoCall) {
  ScriptBuilder b;
  add_engine_defaults(b);
  Rig rig(b.str());
  auto m = recall_memory(rig.engine_ctx(), "Hello again.", {});
  EXPECT_FALSE(m.has_value());
  EXPECT_EQ(rig.audit->size(), 0u);
}

TEST(Memory, SentinelMeansNone) {
  ScriptBuilder b;
  b.add("judgment", {key::kMemory}, "No need to consider historical conversation memory.");
  Rig rig(b.str());
  std::vector<SessionRecord> prior = {session_with(1, {"a", "b"})};
  EXPECT_FALSE(recall_memory(rig.engine_ctx(), "Hi.", prior).has_value());
  EXPECT_EQ(rig.audit->count("memory"), 1u);
}

TEST(Memory, SummaryIsKeptAndSeesTheHistory) {
  ScriptBuilder b;
  b.add("judgment", {key::kMemory, "Session 1:\nPatient: My ribs hurt."}, "  She tied the rib pain to grief.  ");
  Rig rig(b.str());
  std::vector<SessionRecord> prior = {session_with(1, {"My ribs hurt.", "Tell me more."})};
  auto m = recall_memory(rig.engine_ctx(), "The pain is back.", prior);
  EXPECT_EQ(m.text, "She tied the rib pain to grief.");
}

TEST(Memory, LongSummaryIsCappedWithAWarning) {
  std::string longer;
  for (int i = 0; i < 75; ++i) longer += "word" + std::to_string(i) + " ";
  ScriptBuilder b;
  b.add("judgment", {key::kMemory}, longer);
  Rig rig(b.str());
  std::vector<SessionRecord> prior = {session_with(1, {"a", "b"})};
  auto m = recall_memory(rig.engine_ctx(), "x", prior);
  EXPECT_EQ(text::count_words(m.text), kMemoryWordCap);
  EXPECT_EQ(rig.diagnostics.count(Diagnostics::Kind::WordCap), 1u);
}

TEST(Memory, EmptyRepliesFailAfterOneRetry) {
  ScriptBuilder b;
  b.add("judgment", {key::kMemory}, "   ");
  Rig rig(b.str());
  std::vector<SessionRecord> prior = {session_with(1, {"a", "b"})};
  EXPECT_THROW(recall_memory(rig.engine_ctx(), "x", prior), MemoryError);
  EXPECT_EQ(rig.audit->count("memory"), 2u);
}

TEST(Memory, RejectsEmptyUtterance) {
  ScriptBuilder b;
  add_engine_defaults(b);
  Rig rig(b.str());
  EXPECT_THROW(recall_memory(rig.engine_ctx(), "  ", {}), PreconditionError);
}
