#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_set>
#include <vector>

#include "spancat/error.hpp"
#include "spancat/labels.hpp"

namespace spancat {

struct Token {
  std::string surface;
  std::size_t char_start = 0;  // byte offsets into Excerpt::text, half-open
  std::size_t char_end = 0;

  bool operator==(const Token&) const = default;
};

// A root token points at itself.
struct DepArc {
  int head = 0;
  std::string relation;

  bool operator==(const DepArc&) const = default;
};

struct SpanAnnotation {
  int start = 0;  // token indices, half-open
  int end = 0;
  Label label = Label::Other;
  std::string annotator;
  std::string other_label;  // original text when label == Label::Other

  int length() const { return end - start; }
  std::string label_text() const {
    return label == Label::Other ? other_label : std::string(label_name(label));
  }

  bool operator==(const SpanAnnotation&) const = default;
};

inline bool span_order(const SpanAnnotation& a, const SpanAnnotation& b) {
  return std::tie(a.start, a.end, a.label, a.annotator, a.other_label) <
         std::tie(b.start, b.end, b.label, b.annotator, b.other_label);
}

struct SentenceBounds {
  int start = 0;
  int end = 0;
  bool operator==(const SentenceBounds&) const = default;
};

struct Excerpt {
  std::string id;
  std::string source;
  std::string text;
  std::vector<Token> tokens;
  std::vector<SentenceBounds> sentences;
  std::optional<std::vector<DepArc>> deps;
  std::vector<SpanAnnotation> spans;

  int token_count() const { return static_cast<int>(tokens.size()); }

  // Index of the sentence holding token `t`.
  int sentence_of(int t) const {
    for (std::size_t s = 0; s < sentences.size(); ++s)
      if (t >= sentences[s].start && t < sentences[s].end) return static_cast<int>(s);
    return -1;
  }

  bool crosses_sentence(const SpanAnnotation& s) const {
    return sentence_of(s.start) != sentence_of(s.end - 1);
  }

  // Spans of one annotator; an empty id selects every span.
  std::vector<SpanAnnotation> spans_by(std::string_view annotator) const {
    std::vector<SpanAnnotation> out;
    for (const auto& s : spans)
      if (annotator.empty() || s.annotator == annotator) out.push_back(s);
    return out;
  }

  bool operator==(const Excerpt&) const = default;
};

using Corpus = std::vector<Excerpt>;

namespace detail {
[[noreturn]] inline void invalid(const Excerpt& e, std::string_view field, std::string_view what) {
  throw DataError("excerpt '" + e.id + "': " + std::string(field) + ": " + std::string(what));
}
}  // namespace detail

inline void validate(const Excerpt& e) {
  using detail::invalid;
  if (e.id.empty()) invalid(e, "id", "empty id");
  const int n = e.token_count();
  for (int i = 0; i < n; ++i) {
    const Token& t = e.tokens[i];
    if (t.char_start >= t.char_end) invalid(e, "tokens", "token " + std::to_string(i) + " is empty");
    if (t.char_end > e.text.size())
      invalid(e, "tokens", "token " + std::to_string(i) + " extends past text");
    if (i > 0 && t.char_start < e.tokens[i - 1].char_end)
      invalid(e, "tokens", "token " + std::to_string(i) + " overlaps its predecessor");
  }
  int expect = 0;
  for (const auto& s : e.sentences) {
    if (s.start != expect || s.end <= s.start)
      invalid(e, "sentences", "sentence bounds do not tile the tokens");
    expect = s.end;
  }
  if (expect != n) invalid(e, "sentences", "sentence bounds do not tile the tokens");

  if (e.deps) {
    const auto& deps = *e.deps;
    if (static_cast<int>(deps.size()) != n)
      invalid(e, "deps", "expected " + std::to_string(n) + " arcs, got " + std::to_string(deps.size()));
    for (int i = 0; i < n; ++i)
      if (deps[i].head < 0 || deps[i].head >= n)
        invalid(e, "deps", "head of token " + std::to_string(i) + " out of range");
    for (int i = 0; i < n; ++i) {
      int cur = i;
      int steps = 0;
      while (deps[cur].head != cur) {
        cur = deps[cur].head;
        if (++steps > n) invalid(e, "deps", "cycle through token " + std::to_string(i));
      }
    }
  }

  std::set<std::tuple<int, int, Label, std::string, std::string>> seen;
  for (const auto& s : e.spans) {
    if (s.start < 0 || s.start >= s.end || s.end > n)
      invalid(e, "spans",
              "span (" + std::to_string(s.start) + "," + std::to_string(s.end) +
                  ") outside 0.." + std::to_string(n));
    if (s.label == Label::Empty) invalid(e, "spans", "EMPTY is not a valid annotation label");
    if (!seen.emplace(s.start, s.end, s.label, s.annotator, s.other_label).second)
      invalid(e, "spans", "duplicate span (" + std::to_string(s.start) + "," +
                              std::to_string(s.end) + "," + s.label_text() + "," + s.annotator + ")");
  }
}

inline void validate(const Corpus& corpus) {
  std::unordered_set<std::string> ids;
  for (const auto& e : corpus) {
    validate(e);
    if (!ids.insert(e.id).second) throw DataError("duplicate excerpt id '" + e.id + "'");
  }
}

// Raw categories fold into the ten-label scheme; boundaries are untouched.
// Collapsing can create duplicate tuples (e.g. CONCUR and PRONOUNCE on the same
// interval by one annotator); those collapse to one span.
inline Corpus collapse_labels(Corpus corpus) {
  for (auto& e : corpus) {
    for (auto& s : e.spans) s.label = collapse(s.label);
    std::sort(e.spans.begin(), e.spans.end(), span_order);
    e.spans.erase(std::unique(e.spans.begin(), e.spans.end()), e.spans.end());
  }
  return corpus;
}

struct TagStats {
  std::array<std::size_t, kNumLabelValues> counts{};
  std::size_t total_spans = 0;
  std::size_t total_tokens = 0;
  std::size_t total_excerpts = 0;

  std::size_t operator[](Label l) const { return counts[label_index(l)]; }
  bool operator==(const TagStats&) const = default;
};

inline TagStats tag_stats(const Corpus& corpus) {
  TagStats st;
  for (const auto& e : corpus) {
    ++st.total_excerpts;
    st.total_tokens += e.tokens.size();
    for (const auto& s : e.spans) {
      ++st.counts[label_index(s.label)];
      ++st.total_spans;
    }
  }
  return st;
}

// Builds an excerpt from whitespace-joined tokens; sentence breaks are given
// as token counts per sentence. Used by importers and fixtures.
inline Excerpt make_excerpt(std::string id, const std::vector<std::vector<std::string>>& sentences,
                            std::string source = "") {
  Excerpt e;
  e.id = std::move(id);
  e.source = std::move(source);
  for (const auto& sent : sentences) {
    SentenceBounds b{e.token_count(), e.token_count()};
    for (const auto& w : sent) {
      if (!e.text.empty()) e.text += ' ';
      Token t{w, e.text.size(), e.text.size() + w.size()};
      e.text += w;
      e.tokens.push_back(std::move(t));
    }
    b.end = e.token_count();
    if (b.end > b.start) e.sentences.push_back(b);
  }
  return e;
}

}  // namespace spancat
