#pragma once

// JSONL (canonical) and column-mapped TSV corpus readers/writers.

#include <fstream>
#include <istream>
#include <map>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "spancat/corpus.hpp"

namespace spancat {

struct ImportOptions {
  // Unknown labels: error when strict, Label::Other (an audit finding) when lenient.
  bool strict_labels = true;
};

namespace detail {

inline SpanAnnotation make_span(int start, int end, std::string_view label, std::string annotator,
                                const ImportOptions& opt, const std::string& where) {
  SpanAnnotation s;
  s.start = start;
  s.end = end;
  s.annotator = std::move(annotator);
  if (auto l = parse_label(label)) {
    s.label = *l;
  } else if (opt.strict_labels) {
    throw DataError(where + ": unknown label '" + std::string(label) + "'");
  } else {
    s.label = Label::Other;
    s.other_label = std::string(label);
  }
  return s;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return in;
}

}  // namespace detail

inline Excerpt excerpt_from_json(const nlohmann::json& j, const ImportOptions& opt = {}) {
  Excerpt e;
  e.id = j.at("id").get<std::string>();
  e.source = j.value("source", std::string{});
  e.text = j.at("text").get<std::string>();
  for (const auto& t : j.at("tokens")) {
    Token tok;
    const auto s = t.at("s").get<long long>();
    const auto en = t.at("e").get<long long>();
    if (s < 0 || en < s || static_cast<std::size_t>(en) > e.text.size())
      detail::invalid(e, "tokens", "offsets (" + std::to_string(s) + "," + std::to_string(en) +
                                       ") outside text");
    tok.char_start = static_cast<std::size_t>(s);
    tok.char_end = static_cast<std::size_t>(en);
    tok.surface = e.text.substr(tok.char_start, tok.char_end - tok.char_start);
    e.tokens.push_back(std::move(tok));
  }
  for (const auto& b : j.at("sentences")) e.sentences.push_back({b.at(0).get<int>(), b.at(1).get<int>()});
  if (auto it = j.find("deps"); it != j.end() && !it->is_null()) {
    std::vector<DepArc> deps;
    for (const auto& d : *it) deps.push_back({d.at("head").get<int>(), d.value("rel", std::string{})});
    e.deps = std::move(deps);
  }
  for (const auto& s : j.at("spans"))
    e.spans.push_back(detail::make_span(s.at("s").get<int>(), s.at("e").get<int>(),
                                        s.at("label").get<std::string>(),
                                        s.value("annotator", std::string{}), opt,
                                        "excerpt '" + e.id + "'"));
  validate(e);
  return e;
}

inline nlohmann::json excerpt_to_json(const Excerpt& e) {
  nlohmann::json j;
  j["id"] = e.id;
  j["source"] = e.source;
  j["text"] = e.text;
  j["tokens"] = nlohmann::json::array();
  for (const auto& t : e.tokens) j["tokens"].push_back({{"s", t.char_start}, {"e", t.char_end}});
  j["sentences"] = nlohmann::json::array();
  for (const auto& b : e.sentences) j["sentences"].push_back({b.start, b.end});
  if (e.deps) {
    j["deps"] = nlohmann::json::array();
    for (const auto& d : *e.deps) j["deps"].push_back({{"head", d.head}, {"rel", d.relation}});
  } else {
    j["deps"] = nullptr;
  }
  j["spans"] = nlohmann::json::array();
  for (const auto& s : e.spans)
    j["spans"].push_back(
        {{"s", s.start}, {"e", s.end}, {"label", s.label_text()}, {"annotator", s.annotator}});
  return j;
}

inline Corpus read_jsonl(std::istream& in, const ImportOptions& opt = {}) {
  Corpus corpus;
  std::string line;
  std::size_t lineno = 0;
  std::unordered_set<std::string> ids;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(lineno);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& ex) {
      throw DataError(where + ": " + ex.what());
    }
    try {
      corpus.push_back(excerpt_from_json(j, opt));
    } catch (const nlohmann::json::exception& ex) {
      throw DataError(where + ": schema: " + ex.what());
    } catch (const DataError& ex) {
      throw DataError(where + ": " + ex.what());
    }
    if (!ids.insert(corpus.back().id).second)
      throw DataError(where + ": duplicate excerpt id '" + corpus.back().id + "'");
  }
  return corpus;
}

inline Corpus import_jsonl(const std::string& path, const ImportOptions& opt = {}) {
  auto in = detail::open_in(path);
  return read_jsonl(in, opt);
}

inline void write_jsonl(std::ostream& out, const Corpus& corpus) {
  for (const auto& e : corpus) out << excerpt_to_json(e).dump() << '\n';
}

inline void export_jsonl(const std::string& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  write_jsonl(out, corpus);
}

// Token-per-row TSV. Blank lines break sentences; a `#id=<id>` line starts a
// new excerpt (`#source=<tag>` sets its source; other `#` lines are ignored).
// The label column holds `_` or `|`-separated entries of the form
// `LABEL[id]` (multi-token span) or `LABEL` (single-token span). When
// `span_id` is set, the label column holds bare labels and the id column the
// matching `|`-separated ids. An optional head column uses CoNLL numbering
// (1-based within the sentence, 0 = root).
struct TsvColumns {
  int surface = 0;
  int labels = 1;
  int span_id = -1;
  int head = -1;
  int relation = -1;
  std::string annotator = "gold";
  std::string source;
};

namespace detail {

struct TsvOpenSpan {
  std::string label;
  int start = 0;
  int last = 0;
};

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

class TsvBuilder {
 public:
  TsvBuilder(const TsvColumns& cols, const ImportOptions& opt) : cols_(cols), opt_(opt) {}

  void start_excerpt(std::string id) {
    flush();
    pending_id_ = std::move(id);
  }

  void set_source(std::string src) { source_ = std::move(src); }

  void sentence_break() {
    if (!cur_.empty()) {
      sentences_.push_back(std::move(cur_));
      cur_.clear();
    }
  }

  void row(const std::vector<std::string>& f, std::size_t lineno) {
    const std::string where = "line " + std::to_string(lineno);
    auto col = [&](int c) -> const std::string& {
      if (c < 0 || c >= static_cast<int>(f.size()))
        throw DataError(where + ": malformed row, missing column " + std::to_string(c));
      return f[c];
    };
    const int tok = token_count();
    const std::string& surface = col(cols_.surface);
    if (surface.empty()) throw DataError(where + ": malformed row, empty surface");
    cur_.push_back(surface);
    if (cols_.head >= 0) {
      const std::string& h = col(cols_.head);
      if (h == "_" || h.empty()) {
        heads_.push_back(std::nullopt);
      } else {
        try {
          heads_.push_back(std::stoi(h));
        } catch (const std::exception&) {
          throw DataError(where + ": malformed head '" + h + "'");
        }
      }
      rels_.push_back(cols_.relation >= 0 ? col(cols_.relation) : std::string{});
      sent_start_.push_back(sentence_start());
    }

    const std::string& lab = col(cols_.labels);
    if (lab.empty() || lab == "_") return;
    auto entries = split(lab, '|');
    std::vector<std::string> ids;
    if (cols_.span_id >= 0) {
      const std::string& idcol = col(cols_.span_id);
      ids = split(idcol, '|');
      if (ids.size() != entries.size())
        throw DataError(where + ": label and span-id columns disagree in arity");
    }
    for (std::size_t k = 0; k < entries.size(); ++k) {
      std::string label = entries[k];
      std::string id;
      if (cols_.span_id >= 0) {
        id = ids[k] == "_" ? std::string{} : ids[k];
      } else if (auto lb = label.find('['); lb != std::string::npos) {
        if (label.back() != ']') throw DataError(where + ": malformed span notation '" + label + "'");
        id = label.substr(lb + 1, label.size() - lb - 2);
        label = label.substr(0, lb);
      }
      if (label.empty()) throw DataError(where + ": span entry without a label");
      if (id.empty()) {
        singles_.push_back({label, tok, tok});
        continue;
      }
      if (closed_ids_.count(id))
        throw DataError(where + ": span id '" + id + "' reused after its excerpt ended");
      auto it = open_.find(id);
      if (it == open_.end()) {
        open_.emplace(id, TsvOpenSpan{label, tok, tok});
      } else {
        if (it->second.label != label)
          throw DataError(where + ": span id '" + id + "' changes label");
        if (it->second.last != tok - 1)
          throw DataError(where + ": span id '" + id + "' is non-contiguous");
        it->second.last = tok;
      }
    }
  }

  Corpus finish() {
    flush();
    return std::move(corpus_);
  }

 private:
  int token_count() const {
    int n = static_cast<int>(cur_.size());
    for (const auto& s : sentences_) n += static_cast<int>(s.size());
    return n;
  }

  int sentence_start() const {
    int n = 0;
    for (const auto& s : sentences_) n += static_cast<int>(s.size());
    return n;
  }

  void flush() {
    sentence_break();
    if (!sentences_.empty()) {
      std::string id = pending_id_.empty() ? "tsv-" + std::to_string(corpus_.size() + 1) : pending_id_;
      Excerpt e = make_excerpt(id, sentences_, source_.empty() ? cols_.source : source_);
      const std::string where = "excerpt '" + e.id + "'";
      for (auto& [id_, sp] : open_) {
        e.spans.push_back(make_span(sp.start, sp.last + 1, sp.label, cols_.annotator, opt_, where));
        closed_ids_.insert(id_);
      }
      for (auto& sp : singles_)
        e.spans.push_back(make_span(sp.start, sp.last + 1, sp.label, cols_.annotator, opt_, where));
      std::sort(e.spans.begin(), e.spans.end(), span_order);
      if (cols_.head >= 0) {
        const bool any = std::any_of(heads_.begin(), heads_.end(), [](auto& h) { return h.has_value(); });
        const bool all = std::all_of(heads_.begin(), heads_.end(), [](auto& h) { return h.has_value(); });
        if (any && !all) throw DataError(where + ": some tokens lack a head");
        if (all) {
          std::vector<DepArc> deps;
          for (std::size_t i = 0; i < heads_.size(); ++i) {
            const int h = *heads_[i];
            deps.push_back({h == 0 ? static_cast<int>(i) : sent_start_[i] + h - 1, rels_[i]});
          }
          e.deps = std::move(deps);
        }
      }
      validate(e);
      corpus_.push_back(std::move(e));
    } else if (!open_.empty() || !singles_.empty()) {
      throw DataError("dangling span annotations without tokens");
    }
    sentences_.clear();
    open_.clear();
    singles_.clear();
    heads_.clear();
    rels_.clear();
    sent_start_.clear();
    pending_id_.clear();
    source_.clear();
  }

  TsvColumns cols_;
  ImportOptions opt_;
  Corpus corpus_;
  std::vector<std::vector<std::string>> sentences_;
  std::vector<std::string> cur_;
  std::map<std::string, TsvOpenSpan> open_;
  std::vector<TsvOpenSpan> singles_;
  std::unordered_set<std::string> closed_ids_;
  std::vector<std::optional<int>> heads_;
  std::vector<std::string> rels_;
  std::vector<int> sent_start_;
  std::string pending_id_;
  std::string source_;
};

}  // namespace detail

inline Corpus read_tsv(std::istream& in, const TsvColumns& cols = {}, const ImportOptions& opt = {}) {
  detail::TsvBuilder b(cols, opt);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) {
      b.sentence_break();
    } else if (line.rfind("#id=", 0) == 0) {
      b.start_excerpt(line.substr(4));
    } else if (line.rfind("#source=", 0) == 0) {
      b.set_source(line.substr(8));
    } else if (line[0] == '#') {
      continue;
    } else {
      b.row(detail::split(line, '\t'), lineno);
    }
  }
  Corpus corpus = b.finish();
  validate(corpus);
  return corpus;
}

inline Corpus import_tsv(const std::string& path, const TsvColumns& cols = {},
                         const ImportOptions& opt = {}) {
  auto in = detail::open_in(path);
  return read_tsv(in, cols, opt);
}

}  // namespace spancat
