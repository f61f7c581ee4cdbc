#pragma once

// Span-level evaluation. Gold and predicted spans are aligned on exact
// boundaries; an unmatched span on either side pairs with EMPTY.

#include <array>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "spancat/corpus.hpp"
#include "spancat/error.hpp"
#include "spancat/labels.hpp"

namespace spancat {

struct LabelPair {
  Label gold = Label::Empty;
  Label pred = Label::Empty;
  bool operator==(const LabelPair&) const = default;
};

using AlignedPairs = std::vector<LabelPair>;

inline AlignedPairs align_spans(const std::vector<SpanAnnotation>& gold, const std::vector<SpanAnnotation>& pred) {
  std::map<std::pair<int, int>, LabelPair> slots;
  for (const auto& g : gold) {
    auto [it, fresh] = slots.emplace(std::pair{g.start, g.end}, LabelPair{g.label, Label::Empty});
    if (!fresh)
      throw DataError("align_spans: duplicate gold boundary (" + std::to_string(g.start) + "," +
                      std::to_string(g.end) + ")");
  }
  std::map<std::pair<int, int>, bool> seen_pred;
  for (const auto& p : pred) {
    if (!seen_pred.emplace(std::pair{p.start, p.end}, true).second)
      throw DataError("align_spans: duplicate predicted boundary (" + std::to_string(p.start) + "," +
                      std::to_string(p.end) + ")");
    auto [it, fresh] = slots.emplace(std::pair{p.start, p.end}, LabelPair{Label::Empty, p.label});
    if (!fresh) it->second.pred = p.label;
  }
  AlignedPairs out;
  out.reserve(slots.size());
  for (const auto& [k, v] : slots) out.push_back(v);
  return out;
}

using Confusion = std::array<std::array<std::size_t, kNumLabelValues>, kNumLabelValues>;

inline Confusion confusion(const AlignedPairs& pairs) {
  Confusion c{};
  for (const auto& p : pairs) ++c[label_index(p.gold)][label_index(p.pred)];
  return c;
}

namespace detail {
struct Marginals {
  std::array<double, kNumLabelValues> gold{};
  std::array<double, kNumLabelValues> pred{};
  double agree = 0.0;
  double total = 0.0;
};

inline Marginals marginals(const Confusion& c) {
  Marginals m;
  for (std::size_t g = 0; g < kNumLabelValues; ++g)
    for (std::size_t p = 0; p < kNumLabelValues; ++p) {
      const double v = static_cast<double>(c[g][p]);
      m.gold[g] += v;
      m.pred[p] += v;
      m.total += v;
      if (g == p) m.agree += v;
    }
  return m;
}
}  // namespace detail

inline double cohen_kappa(const AlignedPairs& pairs) {
  if (pairs.empty()) throw NoDataError("cohen_kappa: no pairs");
  const auto m = detail::marginals(confusion(pairs));
  const double po = m.agree / m.total;
  double pe = 0.0;
  for (std::size_t l = 0; l < kNumLabelValues; ++l) pe += m.gold[l] * m.pred[l];
  pe /= m.total * m.total;
  if (pe >= 1.0) {
    if (po >= 1.0) return 1.0;
    throw NoDataError("cohen_kappa: chance agreement is 1 with imperfect observed agreement");
  }
  return (po - pe) / (1.0 - pe);
}

// Multiclass MCC in covariance form; 0 when a denominator factor vanishes.
inline double mcc(const AlignedPairs& pairs) {
  if (pairs.empty()) throw NoDataError("mcc: no pairs");
  const auto m = detail::marginals(confusion(pairs));
  const double s = m.total;
  double pt = 0.0, pp = 0.0, tt = 0.0;
  for (std::size_t l = 0; l < kNumLabelValues; ++l) {
    pt += m.pred[l] * m.gold[l];
    pp += m.pred[l] * m.pred[l];
    tt += m.gold[l] * m.gold[l];
  }
  const double den_a = s * s - pp;
  const double den_b = s * s - tt;
  if (den_a <= 0.0 || den_b <= 0.0) return 0.0;
  return (m.agree * s - pt) / std::sqrt(den_a * den_b);
}

struct LabelScore {
  Label label = Label::Empty;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;    // gold-side count
  std::size_t predicted = 0;  // prediction-side count
};

struct EvalReport {
  std::vector<LabelScore> per_label;  // every label seen on either side, enum order
  double accuracy = 0.0;
  double macro_f1 = 0.0;           // includes EMPTY
  double macro_f1_no_empty = 0.0;  // excludes EMPTY, for comparison with other work
  double weighted_f1 = 0.0;
  double kappa = 0.0;
  double mcc = 0.0;
  std::size_t pairs = 0;
  std::vector<std::string> warnings;

  const LabelScore* find(Label l) const {
    for (const auto& s : per_label)
      if (s.label == l) return &s;
    return nullptr;
  }
};

inline EvalReport score_report(const AlignedPairs& pairs) {
  if (pairs.empty()) throw NoDataError("score_report: no aligned pairs");
  const Confusion c = confusion(pairs);
  const auto m = detail::marginals(c);
  EvalReport r;
  r.pairs = pairs.size();
  double macro = 0.0, macro_ne = 0.0, weighted = 0.0;
  std::size_t n_labels = 0, n_ne = 0;
  for (std::size_t l = 0; l < kNumLabelValues; ++l) {
    if (m.gold[l] == 0.0 && m.pred[l] == 0.0) continue;
    LabelScore s;
    s.label = static_cast<Label>(l);
    s.support = static_cast<std::size_t>(m.gold[l]);
    s.predicted = static_cast<std::size_t>(m.pred[l]);
    const double tp = static_cast<double>(c[l][l]);
    s.precision = m.pred[l] > 0.0 ? tp / m.pred[l] : 0.0;
    s.recall = m.gold[l] > 0.0 ? tp / m.gold[l] : 0.0;
    s.f1 = (s.precision + s.recall) > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    if (m.pred[l] == 0.0) r.warnings.push_back(std::string(label_name(s.label)) + ": precision undefined, set to 0");
    if (m.gold[l] == 0.0) r.warnings.push_back(std::string(label_name(s.label)) + ": recall undefined, set to 0");
    macro += s.f1;
    ++n_labels;
    if (s.label != Label::Empty) {
      macro_ne += s.f1;
      ++n_ne;
    }
    weighted += s.f1 * m.gold[l];
    r.per_label.push_back(s);
  }
  r.accuracy = m.agree / m.total;
  r.macro_f1 = macro / static_cast<double>(n_labels);
  r.macro_f1_no_empty = n_ne ? macro_ne / static_cast<double>(n_ne) : 0.0;
  r.weighted_f1 = weighted / m.total;
  r.kappa = cohen_kappa(pairs);
  r.mcc = mcc(pairs);
  return r;
}

// Pairs for every excerpt, concatenated in corpus order.
inline AlignedPairs align_corpus(const Corpus& gold, const std::vector<std::vector<SpanAnnotation>>& predicted,
                                 const std::string& gold_annotator = "") {
  if (gold.size() != predicted.size()) throw DataError("align_corpus: prediction count mismatch");
  AlignedPairs out;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    auto p = align_spans(gold[i].spans_by(gold_annotator), predicted[i]);
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

// Annotator `a` plays gold, `b` plays prediction.
inline EvalReport agreement(const Corpus& corpus, const std::string& a, const std::string& b) {
  bool has_a = false, has_b = false;
  for (const auto& e : corpus)
    for (const auto& s : e.spans) {
      has_a = has_a || s.annotator == a;
      has_b = has_b || s.annotator == b;
    }
  if (!has_a) throw DataError("annotator '" + a + "' has no spans in the corpus");
  if (!has_b) throw DataError("annotator '" + b + "' has no spans in the corpus");
  AlignedPairs pairs;
  for (const auto& e : corpus) {
    auto p = align_spans(e.spans_by(a), e.spans_by(b));
    pairs.insert(pairs.end(), p.begin(), p.end());
  }
  return score_report(pairs);
}

// ---------------------------------------------------------------- output

// Rows in report order: the ten scheme labels' F1, then Accuracy, macro avg
// F1, weighted avg F1, Cohen's Kappa, MCC. Labels absent from both sides are
// nullopt.
inline std::vector<std::pair<std::string, std::optional<double>>> report_rows(const EvalReport& r) {
  std::vector<std::pair<std::string, std::optional<double>>> rows;
  for (Label l : kSchemeLabels) {
    const LabelScore* s = r.find(l);
    rows.emplace_back(std::string(label_name(l)), s ? std::optional<double>(s->f1) : std::nullopt);
  }
  rows.emplace_back("Accuracy", r.accuracy);
  rows.emplace_back("macro avg F1", r.macro_f1);
  rows.emplace_back("weighted avg F1", r.weighted_f1);
  rows.emplace_back("Cohen's Kappa", r.kappa);
  rows.emplace_back("MCC", r.mcc);
  return rows;
}

using ReportColumn = std::pair<std::string, std::vector<std::optional<double>>>;

inline std::string render_table(const std::vector<std::string>& row_names, const std::vector<ReportColumn>& cols) {
  std::size_t w0 = 8;
  for (const auto& n : row_names) w0 = std::max(w0, n.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(w0)) << "Category";
  std::vector<std::size_t> widths;
  for (const auto& [name, _] : cols) {
    widths.push_back(std::max<std::size_t>(name.size(), 7));
    out << "  " << std::right << std::setw(static_cast<int>(widths.back())) << name;
  }
  out << '\n';
  for (std::size_t r = 0; r < row_names.size(); ++r) {
    out << std::left << std::setw(static_cast<int>(w0)) << row_names[r];
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const auto& v = cols[c].second[r];
      char buf[32];
      if (v) std::snprintf(buf, sizeof buf, "%.4f", *v);
      else std::snprintf(buf, sizeof buf, "-");
      out << "  " << std::right << std::setw(static_cast<int>(widths[c])) << buf;
    }
    out << '\n';
  }
  return out.str();
}

inline std::string format_report(const EvalReport& r, const std::string& column = "F1") {
  auto rows = report_rows(r);
  std::vector<std::string> names;
  ReportColumn col{column, {}};
  for (auto& [n, v] : rows) {
    names.push_back(n);
    col.second.push_back(v);
  }
  return render_table(names, {col});
}

inline nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json j;
  j["per_label"] = nlohmann::json::object();
  for (const auto& s : r.per_label)
    j["per_label"][std::string(label_name(s.label))] = {{"precision", s.precision},
                                                        {"recall", s.recall},
                                                        {"f1", s.f1},
                                                        {"support", s.support},
                                                        {"predicted", s.predicted}};
  j["accuracy"] = r.accuracy;
  j["macro_f1"] = r.macro_f1;
  j["macro_f1_no_empty"] = r.macro_f1_no_empty;
  j["weighted_f1"] = r.weighted_f1;
  j["kappa"] = r.kappa;
  j["mcc"] = r.mcc;
  j["pairs"] = r.pairs;
  return j;
}

}  // namespace spancat
