#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "spancat/corpus.hpp"
#include "spancat/error.hpp"
#include "spancat/rng.hpp"

namespace spancat {

struct Fold {
  std::vector<std::string> train;
  std::vector<std::string> dev;
  std::vector<std::string> test;

  bool operator==(const Fold&) const = default;
};

struct FoldSet {
  std::uint64_t seed = 0;
  std::vector<Fold> folds;

  bool operator==(const FoldSet&) const = default;
};

inline constexpr int kNumFolds = 5;
inline constexpr int kNumBlocks = 10;

// Shuffle excerpts by seed and cut them into ten near-equal contiguous
// blocks. Fold i tests on block i, develops on block i+1 and trains on the
// other eight, so the five test sets are disjoint.
inline FoldSet make_folds(const Corpus& corpus, std::uint64_t seed) {
  if (corpus.size() < static_cast<std::size_t>(kNumBlocks))
    throw DataError("make_folds needs at least 10 excerpts, got " + std::to_string(corpus.size()));
  std::vector<std::string> ids;
  ids.reserve(corpus.size());
  for (const auto& e : corpus) ids.push_back(e.id);
  Rng rng(seed);
  rng.shuffle(ids);

  const std::size_t n = ids.size();
  std::array<std::vector<std::string>, kNumBlocks> blocks;
  std::size_t pos = 0;
  for (int b = 0; b < kNumBlocks; ++b) {
    const std::size_t size = n / kNumBlocks + (static_cast<std::size_t>(b) < n % kNumBlocks ? 1 : 0);
    blocks[b].assign(ids.begin() + pos, ids.begin() + pos + size);
    pos += size;
  }

  FoldSet fs;
  fs.seed = seed;
  for (int i = 0; i < kNumFolds; ++i) {
    Fold f;
    const int dev_block = (i + 1) % kNumBlocks;
    f.test = blocks[i];
    f.dev = blocks[dev_block];
    for (int b = 0; b < kNumBlocks; ++b)
      if (b != i && b != dev_block) f.train.insert(f.train.end(), blocks[b].begin(), blocks[b].end());
    fs.folds.push_back(std::move(f));
  }
  return fs;
}

// Excerpts whose ids appear in `ids`, in the order of `ids`.
inline Corpus select(const Corpus& corpus, const std::vector<std::string>& ids) {
  std::unordered_map<std::string, const Excerpt*> by_id;
  for (const auto& e : corpus) by_id.emplace(e.id, &e);
  Corpus out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw DataError("fold manifest names unknown excerpt '" + id + "'");
    out.push_back(*it->second);
  }
  return out;
}

inline nlohmann::json fold_set_to_json(const FoldSet& fs) {
  nlohmann::json j;
  j["seed"] = fs.seed;
  j["folds"] = nlohmann::json::array();
  for (const auto& f : fs.folds) j["folds"].push_back({{"train", f.train}, {"dev", f.dev}, {"test", f.test}});
  return j;
}

inline FoldSet fold_set_from_json(const nlohmann::json& j) {
  FoldSet fs;
  fs.seed = j.value("seed", std::uint64_t{0});
  for (const auto& f : j.at("folds"))
    fs.folds.push_back({f.at("train").get<std::vector<std::string>>(),
                        f.at("dev").get<std::vector<std::string>>(),
                        f.at("test").get<std::vector<std::string>>()});
  return fs;
}

// Minority-label oversampling by whole-excerpt duplication. A label L with
// count c_L below alpha * c_max gets multiplier ceil(alpha * c_max / c_L);
// each excerpt is repeated by the largest multiplier among its labels.
// Copies follow their original directly, so output order is deterministic.
inline Corpus oversample_training(const Corpus& train, double alpha = 0.5) {
  if (train.empty()) throw DataError("oversample_training: empty training set");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DataError("oversample_training: alpha must be in (0, 1]");
  const TagStats st = tag_stats(train);
  std::size_t cmax = 0;
  for (auto c : st.counts) cmax = std::max(cmax, c);
  const double target = alpha * static_cast<double>(cmax);

  std::array<std::size_t, kNumLabelValues> mult{};
  mult.fill(1);
  for (std::size_t l = 0; l < kNumLabelValues; ++l) {
    const std::size_t c = st.counts[l];
    if (c > 0 && static_cast<double>(c) < target)
      mult[l] = static_cast<std::size_t>(std::ceil(target / static_cast<double>(c)));
  }

  Corpus out;
  for (const auto& e : train) {
    std::size_t copies = 1;
    for (const auto& s : e.spans) copies = std::max(copies, mult[label_index(s.label)]);
    for (std::size_t k = 0; k < copies; ++k) out.push_back(e);
  }
  return out;
}

}  // namespace spancat
