#pragma once

// Corpus-wide convention queries. Findings are advisory and never modify the
// corpus.

#include <algorithm>
#include <cctype>
#include <string>
#include <tuple>
#include <vector>

#include "spancat/corpus.hpp"

namespace spancat {

enum class AuditCondition {
  SpanMustExcludePrefix,  // trigger must not match at the start of a span
  SpanCrossesSentence,    // span crosses a sentence boundary and contains the trigger
  LabelUnknown,           // span label outside the scheme and contains the trigger
};

// Each trigger element is a case-insensitive glob over one token surface
// (`*` any run of characters, `?` one character).
struct AuditRule {
  std::string id;
  std::vector<std::string> trigger;
  AuditCondition condition = AuditCondition::SpanMustExcludePrefix;
  std::vector<Label> target_labels;  // empty: every label
};

struct AuditFinding {
  std::string excerpt_id;
  SpanAnnotation span;
  std::string rule_id;

  bool operator==(const AuditFinding&) const = default;
};

inline bool glob_match(std::string_view pattern, std::string_view text) {
  std::size_t p = 0, t = 0, star = std::string_view::npos, mark = 0;
  auto eq = [](char a, char b) {
    return std::tolower(static_cast<unsigned char>(a)) == std::tolower(static_cast<unsigned char>(b));
  };
  while (t < text.size()) {
    if (p < pattern.size() && (pattern[p] == '?' || (pattern[p] != '*' && eq(pattern[p], text[t])))) {
      ++p;
      ++t;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = t;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      t = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

namespace detail {

inline bool trigger_at(const Excerpt& e, const std::vector<std::string>& trig, int pos, int limit) {
  if (pos + static_cast<int>(trig.size()) > limit) return false;
  for (std::size_t k = 0; k < trig.size(); ++k)
    if (!glob_match(trig[k], e.tokens[pos + k].surface)) return false;
  return true;
}

inline bool rule_applies(const AuditRule& r, const Excerpt& e, const SpanAnnotation& s) {
  if (!r.target_labels.empty() &&
      std::find(r.target_labels.begin(), r.target_labels.end(), s.label) == r.target_labels.end())
    return false;
  switch (r.condition) {
    case AuditCondition::SpanMustExcludePrefix:
      return trigger_at(e, r.trigger, s.start, s.end);
    case AuditCondition::SpanCrossesSentence:
    case AuditCondition::LabelUnknown: {
      if (r.condition == AuditCondition::SpanCrossesSentence ? !e.crosses_sentence(s)
                                                              : is_scheme_label(s.label))
        return false;
      for (int p = s.start; p < s.end; ++p)
        if (trigger_at(e, r.trigger, p, s.end)) return true;
      return false;
    }
  }
  return false;
}

}  // namespace detail

// Ordered by (excerpt id, span start), then span end and rule order.
inline std::vector<AuditFinding> audit_conventions(const Corpus& corpus,
                                                   const std::vector<AuditRule>& rules) {
  for (const auto& r : rules)
    if (r.trigger.empty()) throw DataError("audit rule '" + r.id + "' has an empty trigger");
  std::vector<std::tuple<std::string, int, int, std::size_t, AuditFinding>> keyed;
  for (const auto& e : corpus)
    for (const auto& s : e.spans)
      for (std::size_t ri = 0; ri < rules.size(); ++ri)
        if (detail::rule_applies(rules[ri], e, s))
          keyed.emplace_back(e.id, s.start, s.end, ri, AuditFinding{e.id, s, rules[ri].id});
  std::stable_sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
    return std::tie(std::get<0>(a), std::get<1>(a), std::get<2>(a), std::get<3>(a)) <
           std::tie(std::get<0>(b), std::get<1>(b), std::get<2>(b), std::get<3>(b));
  });
  std::vector<AuditFinding> out;
  out.reserve(keyed.size());
  for (auto& k : keyed) out.push_back(std::move(std::get<4>(k)));
  return out;
}

// The existential-negation convention keeps `there is` outside DENY spans.
inline std::vector<AuditRule> default_audit_rules() {
  return {
      {"there-is-no", {"there", "is", "no"}, AuditCondition::SpanMustExcludePrefix, {Label::Deny}},
      {"there-are-no", {"there", "are", "no"}, AuditCondition::SpanMustExcludePrefix, {Label::Deny}},
      {"crosses-sentence", {"*"}, AuditCondition::SpanCrossesSentence, {}},
      {"unknown-label", {"*"}, AuditCondition::LabelUnknown, {}},
  };
}

}  // namespace spancat
