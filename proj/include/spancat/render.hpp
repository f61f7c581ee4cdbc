#pragma once

// Highlighted rendering of labelled spans for terminals (ANSI SGR) and HTML.
// Overlapping spans split the text at every span edge; each segment carries
// the full set of spans active over it. Every span also gets one label badge
// after its last segment.

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "spancat/corpus.hpp"

namespace spancat {

struct RenderSegment {
  std::size_t begin = 0;  // byte range in the excerpt text
  std::size_t end = 0;
  std::string text;
  std::vector<std::size_t> spans;  // indices into the input span list
  std::vector<Label> labels;
  int depth() const { return static_cast<int>(spans.size()); }
};

enum class RenderFormat { Ansi, Html };

inline std::pair<std::size_t, std::size_t> span_chars(const Excerpt& e, const SpanAnnotation& s) {
  return {e.tokens[s.start].char_start, e.tokens[s.end - 1].char_end};
}

inline std::vector<RenderSegment> render_segments(const Excerpt& e, const std::vector<SpanAnnotation>& spans) {
  std::set<std::size_t> cuts{0, e.text.size()};
  for (const auto& s : spans) {
    auto [b, en] = span_chars(e, s);
    cuts.insert(b);
    cuts.insert(en);
  }
  std::vector<RenderSegment> out;
  for (auto it = cuts.begin(); std::next(it) != cuts.end(); ++it) {
    RenderSegment seg;
    seg.begin = *it;
    seg.end = *std::next(it);
    seg.text = e.text.substr(seg.begin, seg.end - seg.begin);
    for (std::size_t i = 0; i < spans.size(); ++i) {
      auto [b, en] = span_chars(e, spans[i]);
      if (b <= seg.begin && seg.end <= en) {
        seg.spans.push_back(i);
        seg.labels.push_back(spans[i].label);
      }
    }
    out.push_back(std::move(seg));
  }
  return out;
}

inline std::string html_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out += c;
    }
  }
  return out;
}

namespace detail {

inline std::string_view abbrev(Label l) { return is_scheme_label(l) ? kLabelAbbrev[label_index(l)] : "OTH"; }
inline std::string_view ansi_color(Label l) { return is_scheme_label(l) ? kLabelAnsi[label_index(l)] : "47"; }
inline std::string_view css_color(Label l) { return is_scheme_label(l) ? kLabelCss[label_index(l)] : "#eeeeee"; }

// The innermost active span (latest start, then shortest) picks the colour.
inline std::size_t innermost(const std::vector<SpanAnnotation>& spans, const RenderSegment& seg) {
  std::size_t best = seg.spans.front();
  for (auto i : seg.spans) {
    const auto& a = spans[i];
    const auto& b = spans[best];
    if (a.start > b.start || (a.start == b.start && a.end < b.end)) best = i;
  }
  return best;
}

}  // namespace detail

inline std::string render_highlights(const Excerpt& e, const std::vector<SpanAnnotation>& spans, RenderFormat fmt) {
  const auto segs = render_segments(e, spans);
  // Last segment index of each span, for badge placement.
  std::vector<std::size_t> last(spans.size(), 0);
  for (std::size_t k = 0; k < segs.size(); ++k)
    for (auto i : segs[k].spans) last[i] = k;

  std::string out;
  if (fmt == RenderFormat::Html) out += "<div class=\"spancat\">";
  for (std::size_t k = 0; k < segs.size(); ++k) {
    const auto& seg = segs[k];
    if (seg.spans.empty()) {
      out += fmt == RenderFormat::Html ? html_escape(seg.text) : seg.text;
      continue;
    }
    const Label colour = spans[detail::innermost(spans, seg)].label;
    if (fmt == RenderFormat::Ansi) {
      out += "\x1b[";
      out += detail::ansi_color(colour);
      if (seg.depth() > 1) out += ";4";
      out += 'm';
      out += seg.text;
      out += "\x1b[0m";
    } else {
      std::string labels, ids;
      for (std::size_t j = 0; j < seg.spans.size(); ++j) {
        if (j) {
          labels += ' ';
          ids += ' ';
        }
        labels += spans[seg.spans[j]].label_text();
        ids += std::to_string(seg.spans[j]);
      }
      out += "<mark data-labels=\"" + html_escape(labels) + "\" data-spans=\"" + ids + "\" data-depth=\"" +
             std::to_string(seg.depth()) + "\" style=\"background:" + std::string(detail::css_color(colour)) +
             "\">" + html_escape(seg.text) + "</mark>";
    }
    for (auto i : seg.spans) {
      if (last[i] != k) continue;
      if (fmt == RenderFormat::Ansi) {
        out += "\x1b[2m[";
        out += detail::abbrev(spans[i].label);
        out += "]\x1b[0m";
      } else {
        out += "<sub class=\"badge\" data-span=\"" + std::to_string(i) + "\">" + html_escape(spans[i].label_text()) +
               "</sub>";
      }
    }
  }
  if (fmt == RenderFormat::Html) out += "</div>";
  return out;
}

// Removes every marker inserted by render_highlights.
inline std::string strip_markers(std::string_view s, RenderFormat fmt) {
  std::string out;
  if (fmt == RenderFormat::Ansi) {
    for (std::size_t i = 0; i < s.size();) {
      if (s.compare(i, 4, "\x1b[2m") == 0) {
        i = s.find("\x1b[0m", i);
        i = i == std::string_view::npos ? s.size() : i + 4;
      } else if (s[i] == '\x1b' && i + 1 < s.size() && s[i + 1] == '[') {
        i = s.find('m', i);
        i = i == std::string_view::npos ? s.size() : i + 1;
      } else {
        out += s[i++];
      }
    }
    return out;
  }
  for (std::size_t i = 0; i < s.size();) {
    if (s.compare(i, 4, "<sub") == 0) {
      i = s.find("</sub>", i);
      i = i == std::string_view::npos ? s.size() : i + 6;
    } else if (s[i] == '<') {
      i = s.find('>', i);
      i = i == std::string_view::npos ? s.size() : i + 1;
    } else if (s[i] == '&') {
      static const std::pair<std::string_view, char> ents[] = {
          {"&amp;", '&'}, {"&lt;", '<'}, {"&gt;", '>'}, {"&quot;", '"'}, {"&#39;", '\''}};
      bool hit = false;
      for (auto [ent, ch] : ents)
        if (s.compare(i, ent.size(), ent) == 0) {
          out += ch;
          i += ent.size();
          hit = true;
          break;
        }
      if (!hit) out += s[i++];
    } else {
      out += s[i++];
    }
  }
  return out;
}

}  // namespace spancat
