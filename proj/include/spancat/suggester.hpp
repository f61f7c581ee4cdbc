#pragma once

// Greedy candidate spans: n-grams plus contiguous dependency subtrees.

#include <algorithm>
#include <string>
#include <vector>

#include "spancat/corpus.hpp"
#include "spancat/error.hpp"

namespace spancat {

struct Interval {
  int start = 0;
  int end = 0;

  int length() const { return end - start; }
  auto operator<=>(const Interval&) const = default;
};

using CandidateSet = std::vector<Interval>;

struct SuggesterConfig {
  int max_ngram_len = 12;
  bool use_subtrees = true;
  bool restrict_ngrams_to_sentence = true;
};

namespace detail {
inline void normalize(CandidateSet& c) {
  std::sort(c.begin(), c.end());
  c.erase(std::unique(c.begin(), c.end()), c.end());
}

inline void add_ngrams(CandidateSet& out, int lo, int hi, int max_len) {
  for (int s = lo; s < hi; ++s)
    for (int n = 1; n <= max_len && s + n <= hi; ++n) out.push_back({s, s + n});
}
}  // namespace detail

inline CandidateSet ngram_spans(const Excerpt& e, const SuggesterConfig& cfg) {
  if (cfg.max_ngram_len < 1) throw DataError("max_ngram_len must be >= 1");
  CandidateSet out;
  if (cfg.restrict_ngrams_to_sentence) {
    for (const auto& b : e.sentences) detail::add_ngrams(out, b.start, b.end, cfg.max_ngram_len);
  } else {
    detail::add_ngrams(out, 0, e.token_count(), cfg.max_ngram_len);
  }
  detail::normalize(out);
  return out;
}

// Every token's subtree (itself plus transitive dependents) that covers a
// contiguous interval. Non-contiguous subtrees are skipped, not clipped.
inline CandidateSet subtree_spans(const Excerpt& e) {
  if (!e.deps)
    throw DataError("excerpt '" + e.id +
                    "' has no dependency parse; supply parses or disable subtree suggestions");
  const auto& deps = *e.deps;
  const int n = e.token_count();
  std::vector<std::vector<int>> children(n);
  for (int i = 0; i < n; ++i)
    if (deps[i].head != i) children[deps[i].head].push_back(i);

  CandidateSet out;
  std::vector<int> stack;
  for (int t = 0; t < n; ++t) {
    int lo = t, hi = t, size = 0;
    stack.assign(1, t);
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      ++size;
      lo = std::min(lo, u);
      hi = std::max(hi, u);
      for (int c : children[u]) stack.push_back(c);
    }
    if (hi - lo + 1 == size) out.push_back({lo, hi + 1});
  }
  detail::normalize(out);
  return out;
}

inline CandidateSet suggest_candidates(const Excerpt& e, const SuggesterConfig& cfg) {
  CandidateSet out = ngram_spans(e, cfg);
  if (cfg.use_subtrees) {
    CandidateSet sub = subtree_spans(e);
    out.insert(out.end(), sub.begin(), sub.end());
    detail::normalize(out);
  }
  return out;
}

struct RecallStats {
  std::size_t gold_spans = 0;
  std::size_t found = 0;
  std::size_t candidates = 0;
  std::size_t excerpts = 0;

  double recall() const {
    if (gold_spans == 0) throw NoDataError("suggester recall undefined: no gold spans");
    return static_cast<double>(found) / static_cast<double>(gold_spans);
  }
  double mean_candidates() const {
    return excerpts == 0 ? 0.0 : static_cast<double>(candidates) / static_cast<double>(excerpts);
  }
};

// Fraction of gold spans whose exact interval is suggested. `annotator`
// restricts the gold side; empty means every span.
inline RecallStats suggester_recall(const Corpus& corpus, const SuggesterConfig& cfg,
                                    const std::string& annotator = "") {
  RecallStats st;
  for (const auto& e : corpus) {
    const CandidateSet cand = suggest_candidates(e, cfg);
    ++st.excerpts;
    st.candidates += cand.size();
    for (const auto& s : e.spans) {
      if (!annotator.empty() && s.annotator != annotator) continue;
      ++st.gold_spans;
      if (std::binary_search(cand.begin(), cand.end(), Interval{s.start, s.end})) ++st.found;
    }
  }
  return st;
}

}  // namespace spancat
