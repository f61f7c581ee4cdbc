#include <gtest/gtest.h>

#include "metric_oracle.hpp"
#include "test_util.hpp"

using namespace spancat;
using spancat::test::excerpt;
using spancat::test::span;

namespace {

AlignedPairs binary_table(int a, int b, int c, int d) {
  AlignedPairs pairs;
  auto add = [&](Label g, Label p, int n) {
    for (int i = 0; i < n; ++i) pairs.push_back({g, p});
  };
  add(Label::Deny, Label::Deny, a);
  add(Label::Deny, Label::Counter, b);
  add(Label::Counter, Label::Deny, c);
  add(Label::Counter, Label::Counter, d);
  return pairs;
}

}  // namespace

TEST(Align, RuleApplication) {
  auto pairs = align_spans({span(0, 2, Label::Deny)}, {span(0, 2, Label::Deny), span(3, 5, Label::Entertain)});
  EXPECT_EQ(pairs, (AlignedPairs{{Label::Deny, Label::Deny}, {Label::Empty, Label::Entertain}}));
  auto none = align_spans({span(0, 2, Label::Deny), span(1, 3, Label::Counter)}, {});
  EXPECT_EQ(none, (AlignedPairs{{Label::Deny, Label::Empty}, {Label::Counter, Label::Empty}}));
  auto sub = align_spans({span(0, 2, Label::Deny)}, {span(0, 2, Label::Counter)});
  EXPECT_EQ(sub, (AlignedPairs{{Label::Deny, Label::Counter}}));
}

TEST(Align, DuplicateBoundaryRejected) {
  EXPECT_THROW(align_spans({span(0, 2, Label::Deny), span(0, 2, Label::Counter)}, {}), DataError);
  EXPECT_THROW(align_spans({}, {span(0, 2, Label::Deny), span(0, 2, Label::Counter)}), DataError);
}

TEST(Align, LosslessOnRandomSets) {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<SpanAnnotation> g, p;
    std::set<std::pair<int, int>> gs, ps;
    for (int k = 0; k < 8; ++k) {
      int s = static_cast<int>(rng.below(6)), e = s + 1 + static_cast<int>(rng.below(3));
      if (gs.insert({s, e}).second) g.push_back(span(s, e, kSchemeLabels[rng.below(10)]));
      s = static_cast<int>(rng.below(6)), e = s + 1 + static_cast<int>(rng.below(3));
      if (ps.insert({s, e}).second) p.push_back(span(s, e, kSchemeLabels[rng.below(10)]));
    }
    std::size_t matched = 0;
    for (auto& b : gs) matched += ps.count(b);
    auto pairs = align_spans(g, p);
    EXPECT_EQ(pairs.size(), g.size() + p.size() - matched);
    for (const auto& x : pairs) EXPECT_FALSE(x.gold == Label::Empty && x.pred == Label::Empty);
  }
}

TEST(Report, HandExample) {
  auto r = score_report({{Label::Deny, Label::Deny}, {Label::Empty, Label::Entertain}});
  EXPECT_DOUBLE_EQ(r.find(Label::Deny)->f1, 1.0);
  EXPECT_DOUBLE_EQ(r.find(Label::Entertain)->f1, 0.0);
  EXPECT_DOUBLE_EQ(r.find(Label::Empty)->f1, 0.0);
  EXPECT_DOUBLE_EQ(r.macro_f1, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.macro_f1_no_empty, 0.5);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.5);
  EXPECT_FALSE(r.warnings.empty());
}

TEST(Report, PerfectAndEmpty) {
  auto r = score_report({{Label::Deny, Label::Deny}, {Label::Counter, Label::Counter}});
  EXPECT_DOUBLE_EQ(r.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(r.macro_f1, 1.0);
  EXPECT_DOUBLE_EQ(r.weighted_f1, 1.0);
  EXPECT_DOUBLE_EQ(r.kappa, 1.0);
  EXPECT_DOUBLE_EQ(r.mcc, 1.0);
  EXPECT_THROW(score_report({}), NoDataError);
}

TEST(Kappa, HandBinary) {
  AlignedPairs p = binary_table(45, 5, 15, 35);
  EXPECT_NEAR(cohen_kappa(p), 0.6, 1e-12);
  EXPECT_NEAR(mcc(p), 1500.0 / std::sqrt(60.0 * 40 * 50 * 50), 1e-12);
  EXPECT_NEAR(mcc(p), 0.61237, 1e-5);
}

TEST(Kappa, DegenerateChanceAgreement) {
  EXPECT_DOUBLE_EQ(cohen_kappa({{Label::Deny, Label::Deny}}), 1.0);
  EXPECT_DOUBLE_EQ(mcc({{Label::Deny, Label::Deny}}), 0.0);
  EXPECT_THROW(cohen_kappa({}), NoDataError);
}

TEST(Metrics, BinaryMccIsPearson) {
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    AlignedPairs p;
    std::vector<double> x, y;
    const int n = 5 + static_cast<int>(rng.below(40));
    for (int i = 0; i < n; ++i) {
      const bool a = rng.below(2), b = rng.below(2);
      p.push_back({a ? Label::Deny : Label::Counter, b ? Label::Deny : Label::Counter});
      x.push_back(a);
      y.push_back(b);
    }
    double mx = 0, my = 0;
    for (int i = 0; i < n; ++i) mx += x[i] / n, my += y[i] / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (int i = 0; i < n; ++i) {
      sxy += (x[i] - mx) * (y[i] - my);
      sxx += (x[i] - mx) * (x[i] - mx);
      syy += (y[i] - my) * (y[i] - my);
    }
    const double r = sxx > 0 && syy > 0 ? sxy / std::sqrt(sxx * syy) : 0.0;
    EXPECT_NEAR(mcc(p), r, 1e-10);
  }
}

TEST(Metrics, MatchBruteForceOracle) {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    AlignedPairs pairs = oracle::random_pairs(rng);
    auto want = oracle::brute_force(pairs);
    if (!want.kappa_defined) {
      EXPECT_THROW(score_report(pairs), NoDataError);
      continue;
    }
    auto got = score_report(pairs);
    EXPECT_NEAR(got.accuracy, want.accuracy, 1e-10);
    EXPECT_NEAR(got.macro_f1, want.macro_f1, 1e-10);
    EXPECT_NEAR(got.weighted_f1, want.weighted_f1, 1e-10);
    EXPECT_NEAR(got.kappa, want.kappa, 1e-10);
    EXPECT_NEAR(got.mcc, want.mcc, 1e-10);
    ASSERT_EQ(got.per_label.size(), want.f1.size());
    for (const auto& s : got.per_label) EXPECT_NEAR(s.f1, want.f1.at(s.label), 1e-10);
  }
}

TEST(Metrics, LabelPermutationInvariance) {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    AlignedPairs pairs = oracle::random_pairs(rng);
    std::vector<Label> perm;
    for (std::size_t l = 0; l < kNumLabelValues; ++l) perm.push_back(static_cast<Label>(l));
    rng.shuffle(perm);
    // keep EMPTY fixed so no (EMPTY, EMPTY) pair appears
    auto e = std::find(perm.begin(), perm.end(), Label::Empty);
    std::iter_swap(e, perm.begin() + static_cast<long>(label_index(Label::Empty)));
    AlignedPairs mapped;
    for (const auto& p : pairs) mapped.push_back({perm[label_index(p.gold)], perm[label_index(p.pred)]});
    if (!oracle::brute_force(pairs).kappa_defined) continue;
    EXPECT_NEAR(cohen_kappa(pairs), cohen_kappa(mapped), 1e-12);
    EXPECT_NEAR(mcc(pairs), mcc(mapped), 1e-12);
    EXPECT_NEAR(score_report(pairs).accuracy, score_report(mapped).accuracy, 1e-12);
  }
}

TEST(Agreement, CopyAndSymmetry) {
  Rng rng(6);
  Corpus c;
  for (int x = 0; x < 30; ++x) {
    Excerpt e = excerpt("e" + std::to_string(x), {{"a", "b", "c", "d", "e", "f"}});
    std::set<std::pair<int, int>> used_a, used_b;
    for (int k = 0; k < 4; ++k) {
      int s = static_cast<int>(rng.below(5)), t = s + 1 + static_cast<int>(rng.below(6 - s));
      if (used_a.insert({s, t}).second) e.spans.push_back(span(s, t, kSchemeLabels[rng.below(4)], "A"));
      if (rng.below(2)) {
        s = static_cast<int>(rng.below(5)), t = s + 1 + static_cast<int>(rng.below(6 - s));
      }
      if (used_b.insert({s, t}).second) e.spans.push_back(span(s, t, kSchemeLabels[rng.below(4)], "B"));
    }
    c.push_back(e);
  }
  auto ab = agreement(c, "A", "B"), ba = agreement(c, "B", "A");
  EXPECT_NEAR(ab.kappa, ba.kappa, 1e-12);
  EXPECT_NEAR(ab.mcc, ba.mcc, 1e-12);
  EXPECT_NEAR(ab.accuracy, ba.accuracy, 1e-12);
  EXPECT_NEAR(ab.macro_f1, ba.macro_f1, 1e-12);

  Corpus copy = c;
  for (auto& e : copy) {
    std::vector<SpanAnnotation> extra;
    for (const auto& s : e.spans)
      if (s.annotator == "A") extra.push_back(span(s.start, s.end, s.label, "C"));
    e.spans.insert(e.spans.end(), extra.begin(), extra.end());
  }
  auto same = agreement(copy, "A", "C");
  EXPECT_DOUBLE_EQ(same.kappa, 1.0);
  EXPECT_DOUBLE_EQ(same.mcc, 1.0);
  EXPECT_DOUBLE_EQ(same.accuracy, 1.0);
  EXPECT_THROW(agreement(c, "A", "Z"), DataError);
}

TEST(ReportFormat, RowOrder) {
  auto r = score_report({{Label::Deny, Label::Deny}, {Label::Empty, Label::Entertain}});
  auto rows = report_rows(r);
  ASSERT_EQ(rows.size(), 15u);
  EXPECT_EQ(rows[0].first, "ATTRIBUTION");
  EXPECT_EQ(rows[9].first, "SOURCES");
  EXPECT_EQ(rows[10].first, "Accuracy");
  EXPECT_EQ(rows[11].first, "macro avg F1");
  EXPECT_EQ(rows[12].first, "weighted avg F1");
  EXPECT_EQ(rows[13].first, "Cohen's Kappa");
  EXPECT_EQ(rows[14].first, "MCC");
  EXPECT_FALSE(rows[0].second);
  const std::string table = format_report(r);
  EXPECT_LT(table.find("SOURCES"), table.find("Accuracy"));
  EXPECT_LT(table.find("Cohen's Kappa"), table.find("MCC"));
  auto j = report_to_json(r);
  EXPECT_DOUBLE_EQ(j["macro_f1"].get<double>(), 1.0 / 3.0);
}
