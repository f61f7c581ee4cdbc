#pragma once

// Brute-force metric evaluation straight from scratch counts. Shares no code
// with the library's confusion-matrix path; MCC is computed as the Pearson
// correlation of the one-hot label matrices.

#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "spancat/metrics.hpp"
#include "spancat/rng.hpp"

namespace spancat::oracle {

struct Scores {
  std::map<Label, double> f1;
  double accuracy = 0, macro_f1 = 0, weighted_f1 = 0, kappa = 0, mcc = 0;
  bool kappa_defined = true;
};

inline Scores brute_force(const AlignedPairs& pairs) {
  const double n = static_cast<double>(pairs.size());
  std::set<Label> labels;
  for (const auto& p : pairs) {
    labels.insert(p.gold);
    labels.insert(p.pred);
  }
  Scores s;
  double agree = 0;
  for (const auto& p : pairs) agree += p.gold == p.pred;
  s.accuracy = agree / n;

  double pe = 0;
  for (Label l : labels) {
    double tp = 0, fp = 0, fn = 0, gold_count = 0, pred_count = 0;
    for (const auto& p : pairs) {
      if (p.gold == l && p.pred == l) tp += 1;
      if (p.gold != l && p.pred == l) fp += 1;
      if (p.gold == l && p.pred != l) fn += 1;
      gold_count += p.gold == l;
      pred_count += p.pred == l;
    }
    const double prec = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double rec = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    const double f = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
    s.f1[l] = f;
    s.macro_f1 += f / static_cast<double>(labels.size());
    s.weighted_f1 += f * gold_count / n;
    pe += (gold_count / n) * (pred_count / n);
  }
  if (pe == 1.0) {
    s.kappa_defined = s.accuracy == 1.0;
    s.kappa = 1.0;
  } else {
    s.kappa = (s.accuracy - pe) / (1 - pe);
  }

  // Pearson correlation of one-hot matrices.
  std::vector<Label> ls(labels.begin(), labels.end());
  double cov_xy = 0, cov_xx = 0, cov_yy = 0;
  for (Label l : ls) {
    double mx = 0, my = 0;
    for (const auto& p : pairs) {
      mx += (p.gold == l) / n;
      my += (p.pred == l) / n;
    }
    for (const auto& p : pairs) {
      const double x = (p.gold == l) - mx, y = (p.pred == l) - my;
      cov_xy += x * y;
      cov_xx += x * x;
      cov_yy += y * y;
    }
  }
  s.mcc = cov_xx > 0 && cov_yy > 0 ? cov_xy / std::sqrt(cov_xx * cov_yy) : 0.0;
  return s;
}

// Up to `max_pairs` pairs over at most `max_labels` distinct values
// (EMPTY included), never (EMPTY, EMPTY).
inline AlignedPairs random_pairs(Rng& rng, std::size_t max_labels = 12, std::size_t max_pairs = 50) {
  std::vector<Label> pool;
  for (std::size_t l = 0; l < kNumLabelValues; ++l) pool.push_back(static_cast<Label>(l));
  rng.shuffle(pool);
  const std::size_t k = 2 + rng.below(max_labels - 1);
  pool.resize(k);
  const std::size_t n = 1 + rng.below(max_pairs);
  AlignedPairs out;
  while (out.size() < n) {
    LabelPair p{pool[rng.below(k)], pool[rng.below(k)]};
    if (rng.below(3) == 0) p.pred = p.gold;
    if (p.gold == Label::Empty && p.pred == Label::Empty) continue;
    out.push_back(p);
  }
  return out;
}

}  // namespace spancat::oracle
