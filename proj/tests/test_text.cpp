#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "arraykit/error.hpp"
#include "arraykit/matrix.hpp"
#include "arraykit/rng.hpp"
#include "arraykit/text.hpp"

using namespace arraykit;

TEST(Text, FormatDoubleRoundTripsBitwise) {
  auto rng = make_rng(1);
  for (int i = 0; i < 20000; ++i) {
    std::uint64_t bits = rng();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    if (!std::isfinite(v)) continue;
    const auto back = text::parse_double(text::format_double(v));
    ASSERT_TRUE(back);
    EXPECT_EQ(std::memcmp(&v, &*back, sizeof v), 0) << text::format_double(v);
  }
  EXPECT_EQ(text::format_double(0.1), "0.1");
  EXPECT_EQ(text::format_double(kMissing), "NA");
  EXPECT_TRUE(std::isnan(*text::parse_double("NA")));
}

TEST(Text, ParseRejectsGarbage) {
  EXPECT_FALSE(text::parse_double("1.5x"));
  EXPECT_FALSE(text::parse_double(""));
  EXPECT_FALSE(text::parse_int("3.0"));
  EXPECT_EQ(*text::parse_int(" -42 "), -42);
  EXPECT_EQ(*text::parse_double("+2.5"), 2.5);
}

TEST(Text, FormatSig) {
  EXPECT_EQ(text::format_sig(3.14159265, 6), "3.14159");
  EXPECT_EQ(text::format_sig(0.0), "0");
  EXPECT_EQ(text::format_sig(1234567.0, 3), "1.23e+06");
}

TEST(Text, SplitRecordHandlesQuotes) {
  auto r = text::split_record(R"(a,"b,c","d""e",)", ',');
  ASSERT_TRUE(r);
  EXPECT_EQ(*r, (std::vector<std::string>{"a", "b,c", "d\"e", ""}));
  EXPECT_FALSE(text::split_record(R"(a,"b)", ','));
  EXPECT_EQ(*text::split_record("x\ty", '\t'), (std::vector<std::string>{"x", "y"}));
}

TEST(Text, CsvDocumentRoundTrip) {
  auto rng = make_rng(2);
  const std::string alphabet = "ab,\" x1";
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t cols = 1 + uniform_index(rng, 4), rows = uniform_index(rng, 5);
    auto cell = [&] {
      std::string s;
      for (std::size_t k = uniform_index(rng, 6); k > 0; --k) s += alphabet[uniform_index(rng, alphabet.size())];
      return s;
    };
    std::vector<std::string> header;
    for (std::size_t c = 0; c < cols; ++c) header.push_back("h" + std::to_string(c));
    std::vector<std::vector<std::string>> body(rows);
    for (auto &r : body)
      for (std::size_t c = 0; c < cols; ++c) r.push_back(cell());
    const auto doc = text::csv_document(header, body);
    auto parsed = text::parse_csv(doc);
    ASSERT_EQ(parsed.size(), rows + 1);
    EXPECT_EQ(parsed[0], header);
    for (std::size_t r = 0; r < rows; ++r) EXPECT_EQ(parsed[r + 1], body[r]);
  }
}

TEST(Text, HtmlEscapes) {
  EXPECT_EQ(text::html_escape("<a&\"b\">"), "&lt;a&amp;&quot;b&quot;&gt;");
  const auto page = text::html_document("T<", {"x"}, {{"1&2"}});
  EXPECT_NE(page.find("T&lt;"), std::string::npos);
  EXPECT_NE(page.find("1&amp;2"), std::string::npos);
}

TEST(Text, LinesToleratesCrLf) {
  EXPECT_EQ(text::lines("a\r\nb\nc\n"), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(text::lines(""), std::vector<std::string>{});
}
