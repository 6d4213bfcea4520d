#include <gtest/gtest.h>

#include "counsel/text.hpp"

using namespace counsel;

TEST(Text, TrimSplitJoin) {
  EXPECT_EQ(text::trim("  a b \n"), "a b");
  EXPECT_EQ(text::trim(""), "");
  auto parts = text::split("A + B + C", " + ");
  ASSERT_EQ(parts.size(), 3u);
  EXPECT_EQ(parts[1], "B");
  EXPECT_EQ(text::split("solo", " + ").size(), 1u);
  EXPECT_EQ(text::join({"x", "y"}, ", "), "x, y");
  EXPECT_TRUE(text::iequals("Fear", "fEAR"));
  EXPECT_FALSE(text::iequals("Fear", "Fears"));
}

TEST(Text, CountsWhitespaceSeparatedWords) {
  EXPECT_EQ(text::count_words(""), 0u);
  EXPECT_EQ(text::count_words("   "), 0u);
  EXPECT_EQ(text::count_words("one"), 1u);
  EXPECT_EQ(text::count_words(" one  two\tthree\nfour "), 4u);
  EXPECT_EQ(text::count_words("don't stop-now, ok?"), 3u);
}

TEST(Text, CapKeepsLeadingWordsAndSpacing) {
  auto c = text::cap_words("one  two three four", 2);
  EXPECT_TRUE(c.truncated);
  EXPECT_EQ(c.text, "one  two");
  auto same = text::cap_words("one two", 2);
  EXPECT_FALSE(same.truncated);
  EXPECT_EQ(same.text, "one two");
  EXPECT_EQ(text::cap_words("a b c", 0).text, "");
}

TEST(Text, CapOutputNeverExceedsLimit) {
  std::string s;
  for (int i = 0; i < 100; ++i) s += "w" + std::to_string(i) + (i % 3 ? " " : "\n ");
  for (std::size_t n = 0; n <= 110; n += 7) {
    auto c = text::cap_words(s, n);
    EXPECT_EQ(text::count_words(c.text), std::min<std::size_t>(n, 100));
    EXPECT_EQ(c.truncated, n < 100);
    EXPECT_EQ(s.rfind(c.text, 0), 0u) << "cap must be a prefix";
  }
}

TEST(Text, Sha256KnownVectors) {
  EXPECT_EQ(text::sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(text::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Text, TimestampShape) {
  auto ts = text::utc_timestamp();
  ASSERT_EQ(ts.size(), 24u) << ts;
  EXPECT_EQ(ts[4], '-');
  EXPECT_EQ(ts[10], 'T');
  EXPECT_EQ(ts[19], '.');
  EXPECT_EQ(ts.back(), 'Z');
}
