#pragma once

// End-to-end span model: suggest -> encode -> pool -> FFN -> logistic.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "spancat/corpus.hpp"
#include "spancat/encoder.hpp"
#include "spancat/spanmodel.hpp"
#include "spancat/suggester.hpp"

namespace spancat {

struct ModelConfig {
  EncoderConfig encoder;
  ClassifierConfig classifier;
  SuggesterConfig suggester;
  std::vector<Label> labels{kSchemeLabels.begin(), kSchemeLabels.end()};
  double threshold = 0.5;
  std::uint64_t seed = 0;  // parameter initialisation

  void validate() const {
    encoder.validate();
    classifier.validate();
    if (suggester.max_ngram_len < 1) throw DataError("max_ngram_len must be >= 1");
    if (labels.empty()) throw DataError("label list must be non-empty");
  }
};

// Per-candidate independent label probabilities.
template <class T>
struct SpanScores {
  CandidateSet candidates;
  Matrix<T> probs;  // candidates x labels
};

// Candidate whose best label clears `threshold` becomes one span labelled
// with that argmax. Output is sorted by (start, end).
template <class T>
std::vector<SpanAnnotation> decide_spans(const SpanScores<T>& scores, const std::vector<Label>& labels,
                                         double threshold, const std::string& annotator = "pred") {
  std::vector<SpanAnnotation> out;
  for (std::size_t i = 0; i < scores.candidates.size(); ++i) {
    Eigen::Index best = 0;
    const T top = scores.probs.row(static_cast<Eigen::Index>(i)).maxCoeff(&best);
    if (static_cast<double>(top) >= threshold)
      out.push_back({scores.candidates[i].start, scores.candidates[i].end, labels[best], annotator, {}});
  }
  std::sort(out.begin(), out.end(), span_order);
  return out;
}

// One-hot rows for candidates that exactly match a gold span.
template <class T>
Matrix<T> span_targets(const CandidateSet& candidates, const std::vector<SpanAnnotation>& gold,
                       const std::vector<Label>& labels) {
  Matrix<T> t = Matrix<T>::Zero(static_cast<Eigen::Index>(candidates.size()), static_cast<Eigen::Index>(labels.size()));
  for (const auto& g : gold) {
    auto it = std::lower_bound(candidates.begin(), candidates.end(), Interval{g.start, g.end});
    if (it == candidates.end() || *it != Interval{g.start, g.end}) continue;
    auto li = std::find(labels.begin(), labels.end(), g.label);
    if (li == labels.end()) continue;
    t(it - candidates.begin(), li - labels.begin()) = T(1);
  }
  return t;
}

inline constexpr double kProbClamp = 1e-7;

// Sum of per-cell binary cross-entropy; optionally the gradient of that sum
// with respect to the logits (zero where the probability is clamped).
template <class T>
double bce_sum(const Matrix<T>& probs, const Matrix<T>& targets, Matrix<T>* d_logits = nullptr) {
  double total = 0.0;
  if (d_logits) d_logits->resize(probs.rows(), probs.cols());
  for (Eigen::Index k = 0; k < probs.size(); ++k) {
    const double p = static_cast<double>(probs.data()[k]);
    const double t = static_cast<double>(targets.data()[k]);
    const double pc = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
    total -= t * std::log(pc) + (1.0 - t) * std::log(1.0 - pc);
    if (d_logits) d_logits->data()[k] = (p == pc) ? static_cast<T>(p - t) : T(0);
  }
  return total;
}

// Mean over (candidate, label) cells.
template <class T>
double bce_loss(const Matrix<T>& probs, const Matrix<T>& targets) {
  if (probs.size() == 0) return 0.0;
  return bce_sum(probs, targets) / static_cast<double>(probs.size());
}

struct LossSum {
  double loss = 0.0;    // summed over cells
  std::size_t cells = 0;
};

template <class T>
class SpanModel {
 public:
  SpanModel() = default;
  explicit SpanModel(const ModelConfig& cfg) : cfg_(cfg), encoder_(cfg.encoder, cfg.seed) {
    cfg_.validate();
    Rng rng(splitmix64(cfg.seed ^ 0x7370616e636174ULL));
    classifier_ = SpanClassifier<T>(cfg_.classifier, encoder_.output_dim(), static_cast<int>(cfg_.labels.size()), rng);
  }

  const ModelConfig& config() const { return cfg_; }
  ModelConfig& mutable_config() { return cfg_; }
  const std::vector<Label>& labels() const { return cfg_.labels; }

  CandidateSet candidates(const Excerpt& e) const { return suggest_candidates(e, cfg_.suggester); }

  Matrix<T> encode(const Excerpt& e, const Matrix<float>* external) const { return encoder_.forward(e, external); }

  SpanScores<T> score(const Excerpt& e, const Matrix<float>* external) const {
    SpanScores<T> s;
    s.candidates = candidates(e);
    if (s.candidates.empty()) {
      s.probs.resize(0, static_cast<Eigen::Index>(cfg_.labels.size()));
      return s;
    }
    s.probs = sigmoid_matrix<T>(classifier_.logits(encode(e, external), s.candidates, nullptr));
    return s;
  }

  std::vector<SpanAnnotation> predict(const Excerpt& e, const Matrix<float>* external) const {
    return decide_spans(score(e, external), cfg_.labels, cfg_.threshold);
  }

  std::vector<SpanAnnotation> predict(const Excerpt& e, const Matrix<float>* external, double threshold) const {
    return decide_spans(score(e, external), cfg_.labels, threshold);
  }

  // Forward + backward on one excerpt. Gradients of `scale * bce_sum` are
  // added to the parameters; the unscaled sum and cell count are returned.
  LossSum accumulate(const Excerpt& e, const Matrix<float>* external, const std::vector<SpanAnnotation>& gold,
                     double scale, Rng* dropout_rng) {
    return accumulate_on(e, candidates(e), external, gold, scale, dropout_rng);
  }

  LossSum accumulate_on(const Excerpt& e, const CandidateSet& cands, const Matrix<float>* external,
                        const std::vector<SpanAnnotation>& gold, double scale, Rng* dropout_rng) {
    LossSum out;
    if (cands.empty()) return out;
    EncoderCache<T> enc_cache;
    ClassifierCache<T> cls_cache;
    Matrix<T> enc = encoder_.forward(e, external, &enc_cache);
    Matrix<T> z = classifier_.logits(enc, cands, dropout_rng, &cls_cache);
    Matrix<T> p = sigmoid_matrix<T>(z);
    Matrix<T> t = span_targets<T>(cands, gold, cfg_.labels);
    Matrix<T> d_z;
    out.loss = bce_sum(p, t, &d_z);
    out.cells = static_cast<std::size_t>(p.size());
    d_z *= static_cast<T>(scale);
    Matrix<T> d_enc = classifier_.backward(cls_cache, d_z);
    encoder_.backward(e, enc_cache, d_enc);
    return out;
  }

  std::vector<Param<T>*> parameters() {
    std::vector<Param<T>*> out;
    encoder_.collect(out);
    classifier_.collect(out);
    return out;
  }

  void zero_grad() {
    for (auto* p : parameters()) p->zero_grad();
  }

  Encoder<T>& encoder() { return encoder_; }
  const Encoder<T>& encoder() const { return encoder_; }
  SpanClassifier<T>& classifier() { return classifier_; }
  const SpanClassifier<T>& classifier() const { return classifier_; }

 private:
  ModelConfig cfg_;
  Encoder<T> encoder_;
  SpanClassifier<T> classifier_;
};

inline const Matrix<float>* vectors_for(const ExternalVectors* vecs, const Excerpt& e) {
  if (!vecs) return nullptr;
  auto it = vecs->find(e.id);
  return it == vecs->end() ? nullptr : &it->second;
}

}  // namespace spancat
