#pragma once

// Generator for cue-driven synthetic corpora: filler sentences with
// embedded label cue phrases whose exact extent is the gold span. Used by
// the test suites and the `synth` CLI command.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "spancat/corpus.hpp"
#include "spancat/rng.hpp"
#include "spancat/vectors.hpp"

namespace spancat {

struct SyntheticConfig {
  int excerpts = 2000;
  int min_sentences = 1;
  int max_sentences = 3;
  int min_filler = 4;
  int max_filler = 9;
  int max_cues_per_sentence = 2;
  std::vector<Label> labels{kSchemeLabels.begin(), kSchemeLabels.end()};
  std::uint64_t seed = 1;
  std::string annotator = "gold";
  std::string source = "synthetic";
};

namespace synth_detail {

// "@N" expands to a surname, "@Y" to a year, "@D" to a small number.
inline const std::vector<std::vector<std::string>>& cues(Label l) {
  static const std::array<std::vector<std::vector<std::string>>, kNumLabels> table = {{
      {{"according", "to", "@N"}, {"@N", "argues", "that"}, {"@N", "claims", "that"}},
      {{"however"}, {"although"}, {"nevertheless"}, {"but"}},
      {{"not"}, {"never"}, {"no", "longer"}},
      {{"might"}, {"may"}, {"perhaps"}, {"it", "seems", "that"}},
      {{"it", "is", "known"}, {"as", "is", "well", "established"}},
      {{"clearly"}, {"of", "course"}, {"indeed"}, {"it", "is", "evident", "that"}},
      {{"(", "@N", ",", "@Y", ")"}, {"@N", "(", "@Y", ")"}},
      {{"table", "@D"}, {"figure", "@D"}, {"section", "@D"}},
      {{"because"}, {"since"}, {"therefore"}, {"for", "this", "reason"}},
      {{"previous", "studies"}, {"the", "literature"}, {"researchers"}, {"the", "authors"}},
  }};
  return table[label_index(l)];
}

inline const std::vector<std::string>& surnames() {
  static const std::vector<std::string> v = {"Smith", "Garcia", "Tanaka", "Muller", "Okafor", "Rossi",
                                             "Novak", "Kim",    "Silva",  "Larsen", "Dubois", "Chen"};
  return v;
}

// Shares no word with any cue.
inline const std::vector<std::string>& filler() {
  static const std::vector<std::string> v = {
      "data",      "model",      "analysis",  "results",   "sample",     "method",    "approach",  "effect",
      "variable",  "group",      "students",  "writing",   "language",   "learners",  "corpus",    "text",
      "measure",   "score",      "test",      "task",      "performance", "use",      "patterns",  "features",
      "development", "context",  "study",     "framework", "structure",  "process",   "level",     "change",
      "shows",     "suggests",   "indicates", "reveals",   "affects",    "improves",  "reduces",   "increases",
      "examines",  "describes",  "supports",  "provides",  "requires",   "includes",  "produces",  "reflects",
      "significant", "important", "complex",  "academic",  "linguistic", "relevant",  "specific",  "general",
      "strong",    "limited",    "higher",    "lower",     "overall",    "different", "similar",   "new",
      "these",     "our",        "a",         "an",        "in",         "on",        "with",      "between",
      "across",    "within",     "and",       "or",        "by",
  };
  return v;
}

inline std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

}  // namespace synth_detail

inline Corpus make_synthetic_corpus(const SyntheticConfig& cfg) {
  using namespace synth_detail;
  Rng rng(cfg.seed);
  Corpus corpus;
  for (int x = 0; x < cfg.excerpts; ++x) {
    const int n_sent = cfg.min_sentences + static_cast<int>(rng.below(cfg.max_sentences - cfg.min_sentences + 1));
    std::vector<std::vector<std::string>> sentences;
    std::vector<SpanAnnotation> spans;
    std::vector<DepArc> deps;
    int offset = 0;
    for (int s = 0; s < n_sent; ++s) {
      const int n_fill = cfg.min_filler + static_cast<int>(rng.below(cfg.max_filler - cfg.min_filler + 1));
      const int n_cues = static_cast<int>(rng.below(cfg.max_cues_per_sentence + 1));
      // Slot k holds the cue inserted before filler word k.
      std::vector<int> cue_slot(n_fill + 1, -1);
      std::vector<Label> cue_label(n_fill + 1);
      for (int c = 0; c < n_cues; ++c) {
        const int slot = static_cast<int>(rng.below(n_fill + 1));
        cue_slot[slot] = static_cast<int>(rng.below(1u << 20));
        cue_label[slot] = rng.pick(cfg.labels);
      }
      std::vector<std::string> words;
      std::vector<DepArc> sdeps;
      auto add = [&](std::string w, int head_local, const char* rel) {
        words.push_back(std::move(w));
        sdeps.push_back({offset + head_local, rel});
      };
      for (int k = 0; k <= n_fill; ++k) {
        if (cue_slot[k] >= 0) {
          const auto& options = cues(cue_label[k]);
          const auto& cue = options[static_cast<std::size_t>(cue_slot[k]) % options.size()];
          const int start = static_cast<int>(words.size());
          for (std::size_t w = 0; w < cue.size(); ++w) {
            std::string tok = cue[w];
            if (tok == "@N") tok = rng.pick(surnames());
            else if (tok == "@Y") tok = std::to_string(1980 + rng.below(45));
            else if (tok == "@D") tok = std::to_string(1 + rng.below(9));
            add(std::move(tok), w == 0 ? 0 : start, w == 0 ? "advmod" : "fixed");
          }
          spans.push_back({offset + start, offset + static_cast<int>(words.size()), cue_label[k], cfg.annotator, {}});
        }
        if (k < n_fill) add(rng.pick(filler()), 0, "dep");
      }
      add(".", 0, "punct");
      words[0] = capitalize(words[0]);
      // The first token is the sentence root.
      sdeps[0] = {offset, "root"};
      offset += static_cast<int>(words.size());
      deps.insert(deps.end(), sdeps.begin(), sdeps.end());
      sentences.push_back(std::move(words));
    }
    Excerpt e = make_excerpt("syn-" + std::to_string(x), sentences, cfg.source);
    e.deps = std::move(deps);
    e.spans = std::move(spans);
    std::sort(e.spans.begin(), e.spans.end(), span_order);
    corpus.push_back(std::move(e));
  }
  return corpus;
}

// Fixed per-word vectors standing in for a frozen pretrained encoder.
inline ExternalVectors make_lookup_vectors(const Corpus& corpus, int dim, std::uint64_t seed = 7) {
  ExternalVectors out;
  for (const auto& e : corpus) {
    Matrix<float> m(e.token_count(), dim);
    for (int t = 0; t < e.token_count(); ++t) {
      std::string low = e.tokens[t].surface;
      for (auto& c : low) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      const std::uint64_t base = splitmix64(seed ^ fnv1a(low));
      for (int j = 0; j < dim; ++j)
        m(t, j) = static_cast<float>(2.0 * unit_from_bits(splitmix64(base + static_cast<std::uint64_t>(j))) - 1.0);
    }
    out.emplace(e.id, std::move(m));
  }
  return out;
}

}  // namespace spancat
