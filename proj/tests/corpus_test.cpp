#include <gtest/gtest.h>
#include <unistd.h>

#include <sstream>

#include "spancat/corpus_io.hpp"
#include "spancat/synthetic.hpp"
#include "test_util.hpp"

using namespace spancat;
using spancat::test::TempFile;

namespace {

const char* kThreeTokenLine =
    R"({"id":"x1","source":"t","text":"There is no","tokens":[{"s":0,"e":5},{"s":6,"e":8},{"s":9,"e":11}],)"
    R"("sentences":[[0,3]],"deps":null,"spans":[{"s":0,"e":2,"label":"DENY","annotator":"gold"}]})";

}  // namespace

TEST(ImportJsonl, EmptyFileGivesEmptyCorpus) {
  TempFile f("");
  EXPECT_TRUE(import_jsonl(f.path()).empty());
}

TEST(ImportJsonl, SingleExcerptFixture) {
  TempFile f(std::string(kThreeTokenLine) + "\n");
  Corpus c = import_jsonl(f.path());
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].token_count(), 3);
  EXPECT_EQ(c[0].tokens[2].surface, "no");
  EXPECT_EQ(tag_stats(c)[Label::Deny], 1u);
  EXPECT_EQ(tag_stats(c).total_spans, 1u);
}

TEST(ImportJsonl, SpanPastEndNamesExcerpt) {
  std::string line = kThreeTokenLine;
  line.replace(line.find("\"e\":2,\"label\""), 5, "\"e\":5");
  TempFile f(line + "\n");
  try {
    import_jsonl(f.path());
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("x1"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos) << e.what();
  }
}

TEST(ImportJsonl, ParseErrorReportsLineNumber) {
  TempFile f(std::string(kThreeTokenLine) + "\n{not json\n");
  try {
    import_jsonl(f.path());
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(ImportJsonl, DuplicateIdRejected) {
  TempFile f(std::string(kThreeTokenLine) + "\n" + kThreeTokenLine + "\n");
  EXPECT_THROW(import_jsonl(f.path()), DataError);
}

TEST(ImportJsonl, UnknownLabelStrictVersusLenient) {
  std::string line = kThreeTokenLine;
  line.replace(line.find("DENY"), 4, "HEDGE");
  std::istringstream a(line);
  EXPECT_THROW(read_jsonl(a), DataError);
  std::istringstream b(line);
  Corpus c = read_jsonl(b, {.strict_labels = false});
  ASSERT_EQ(c[0].spans.size(), 1u);
  EXPECT_EQ(c[0].spans[0].label, Label::Other);
  EXPECT_EQ(c[0].spans[0].label_text(), "HEDGE");
}

TEST(ImportJsonl, InvariantViolations) {
  auto reject = [](std::string line) {
    std::istringstream in(line);
    EXPECT_THROW(read_jsonl(in), DataError) << line;
  };
  std::string bad_sent = kThreeTokenLine;
  bad_sent.replace(bad_sent.find("[[0,3]]"), 7, "[[0,2]]");
  reject(bad_sent);
  std::string overlap = kThreeTokenLine;
  overlap.replace(overlap.find("{\"s\":6,\"e\":8}"), 13, "{\"s\":4,\"e\":8}");
  reject(overlap);
  std::string cyc = kThreeTokenLine;
  cyc.replace(cyc.find("\"deps\":null"), 11, R"("deps":[{"head":1},{"head":0},{"head":2}])");
  reject(cyc);
  std::string short_deps = kThreeTokenLine;
  short_deps.replace(short_deps.find("\"deps\":null"), 11, R"("deps":[{"head":0}])");
  reject(short_deps);
  std::string empty_label = kThreeTokenLine;
  empty_label.replace(empty_label.find("DENY"), 4, "EMPTY");
  reject(empty_label);
}

TEST(ImportJsonl, ContributionIsAnAliasForAttribution) {
  std::string line = kThreeTokenLine;
  line.replace(line.find("DENY"), 4, "CONTRIBUTION");
  std::istringstream in(line);
  EXPECT_EQ(read_jsonl(in)[0].spans[0].label, Label::Attribution);
}

TEST(ImportJsonl, RoundTripIsIdentity) {
  SyntheticConfig cfg;
  cfg.excerpts = 60;
  cfg.seed = 11;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    cfg.seed = seed;
    Corpus c = make_synthetic_corpus(cfg);
    c[0].deps.reset();
    std::stringstream ss;
    write_jsonl(ss, c);
    EXPECT_EQ(read_jsonl(ss), c);
  }
}

TEST(ImportTsv, ContiguousSpanId) {
  std::istringstream in("no\tDENY[1]\nevidence\tDENY[1]\nexists\t_\n");
  Corpus c = read_tsv(in);
  ASSERT_EQ(c.size(), 1u);
  ASSERT_EQ(c[0].spans.size(), 1u);
  EXPECT_EQ(c[0].spans[0], (SpanAnnotation{0, 2, Label::Deny, "gold", {}}));
  EXPECT_EQ(c[0].text, "no evidence exists");
}

TEST(ImportTsv, EquivalentToJsonl) {
  std::istringstream tsv("#id=x1\n#source=t\nThere\tDENY[4]\nis\tDENY[4]\nno\t_\n");
  std::istringstream jsonl(kThreeTokenLine);
  EXPECT_EQ(read_tsv(tsv), read_jsonl(jsonl));
}

TEST(ImportTsv, OnlyBlankLines) {
  std::istringstream in("\n\n   \n\n");
  EXPECT_TRUE(read_tsv(in).empty());
}

TEST(ImportTsv, NonContiguousSpanRejected) {
  std::istringstream in("a\tDENY[1]\nb\t_\nc\tDENY[1]\n");
  EXPECT_THROW(read_tsv(in), DataError);
}

TEST(ImportTsv, MalformedRowAndDanglingIds) {
  std::istringstream missing("a\n");
  EXPECT_THROW(read_tsv(missing), DataError);
  std::istringstream notation("a\tDENY[1\n");
  EXPECT_THROW(read_tsv(notation), DataError);
  std::istringstream reused("#id=a\nx\tDENY[1]\n#id=b\ny\tDENY[1]\n");
  EXPECT_THROW(read_tsv(reused), DataError);
}

TEST(ImportTsv, SentencesSpanIdsAndHeads) {
  TsvColumns cols;
  cols.surface = 1;
  cols.labels = 3;
  cols.span_id = 4;
  cols.head = 2;
  std::istringstream in(
      "1\tMight\t0\tENTERTAIN\t_\n2\twork\t1\t_\t_\n\n"
      "1\tHowever\t2\tCOUNTER|ATTRIBUTE\t_|7\n2\tSmith\t0\tATTRIBUTE\t7\n3\targues\t2\tATTRIBUTE\t7\n");
  Corpus c = read_tsv(in, cols);
  ASSERT_EQ(c.size(), 1u);
  const Excerpt& e = c[0];
  EXPECT_EQ(e.sentences, (std::vector<SentenceBounds>{{0, 2}, {2, 5}}));
  ASSERT_TRUE(e.deps);
  EXPECT_EQ((*e.deps)[0].head, 0);
  EXPECT_EQ((*e.deps)[1].head, 0);
  EXPECT_EQ((*e.deps)[2].head, 3);
  EXPECT_EQ((*e.deps)[3].head, 3);
  ASSERT_EQ(e.spans.size(), 3u);
  EXPECT_EQ(e.spans[0], (SpanAnnotation{0, 1, Label::Entertain, "gold", {}}));
  EXPECT_EQ(e.spans[1], (SpanAnnotation{2, 3, Label::Counter, "gold", {}}));
  EXPECT_EQ(e.spans[2], (SpanAnnotation{2, 5, Label::Attribute, "gold", {}}));
}

TEST(CollapseLabels, RawCategoriesFold) {
  using spancat::test::span;
  Corpus c{spancat::test::excerpt("a", {{"w", "x", "y", "z"}},
                                  {span(0, 1, Label::Concur), span(1, 2, Label::Pronounce),
                                   span(2, 3, Label::Endorse), span(3, 4, Label::Attribute),
                                   span(0, 4, Label::Deny)})};
  Corpus once = collapse_labels(c);
  TagStats st = tag_stats(once);
  EXPECT_EQ(st[Label::Proclaim], 2u);
  EXPECT_EQ(st[Label::Attribution], 2u);
  EXPECT_EQ(st[Label::Deny], 1u);
  for (Label raw : {Label::Concur, Label::Pronounce, Label::Endorse, Label::Attribute}) EXPECT_EQ(st[raw], 0u);
  EXPECT_EQ(collapse_labels(once), once);
  for (std::size_t i = 0; i < once[0].spans.size(); ++i) {
    EXPECT_TRUE(is_scheme_label(once[0].spans[i].label));
  }
}

TEST(CollapseLabels, SurjectiveOntoScheme) {
  std::set<Label> image;
  for (std::size_t i = 0; i < label_index(Label::Empty); ++i) image.insert(collapse(static_cast<Label>(i)));
  EXPECT_EQ(image.size(), kNumLabels);
  for (Label l : kSchemeLabels) EXPECT_TRUE(image.count(l));
}

TEST(TagStats, EmptyAndHandCount) {
  EXPECT_EQ(tag_stats({}), TagStats{});
  using spancat::test::span;
  Corpus c{spancat::test::excerpt("a", {{"a", "b", "c"}}, {span(0, 1, Label::Deny), span(1, 2, Label::Deny)}),
           spancat::test::excerpt("b", {{"d", "e"}}, {span(0, 2, Label::Counter)})};
  TagStats st = tag_stats(c);
  EXPECT_EQ(st[Label::Deny], 2u);
  EXPECT_EQ(st[Label::Counter], 1u);
  EXPECT_EQ(st.total_spans, 3u);
  EXPECT_EQ(st.total_tokens, 5u);
  EXPECT_EQ(st.total_excerpts, 2u);
}
