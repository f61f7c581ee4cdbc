#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spancat/corpus.hpp"
#include "spancat/error.hpp"
#include "spancat/folds.hpp"
#include "spancat/metrics.hpp"
#include "spancat/model.hpp"
#include "spancat/rng.hpp"

namespace spancat {

struct TrainConfig {
  double peak_lr = 6e-5;
  int warmup_steps = 1000;
  int max_steps = 20000;
  int patience_steps = 3000;  // optimizer steps since the best dev score
  int grad_accum = 4;
  int batch_words_max = 1000;
  int batch_words_start = 300;
  double batch_growth = 1.001;  // per optimizer step
  std::uint64_t seed = 0;
  int eval_every = 200;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double oversample_alpha = 0.5;  // 0 disables oversampling
  std::string gold_annotator;     // empty: every span is gold

  void validate() const {
    if (!(peak_lr > 0.0)) throw DataError("peak_lr must be positive");
    if (warmup_steps < 0 || warmup_steps >= max_steps) throw DataError("warmup_steps must be < max_steps");
    if (grad_accum < 1) throw DataError("grad_accum must be >= 1");
    if (batch_words_start < 1 || batch_words_start > batch_words_max)
      throw DataError("batch_words_start must be in [1, batch_words_max]");
    if (eval_every < 1) throw DataError("eval_every must be >= 1");
    if (patience_steps < 1) throw DataError("early_stop_patience_steps must be >= 1");
    if (oversample_alpha < 0.0 || oversample_alpha > 1.0) throw DataError("oversample_alpha must be in [0, 1]");
  }
};

// Linear warm-up to the peak, then linear decay to zero at max_steps.
inline double lr_at_step(int step, const TrainConfig& c) {
  if (step <= 0) return 0.0;
  if (step >= c.max_steps) return 0.0;
  if (step <= c.warmup_steps)
    return c.warmup_steps == 0 ? c.peak_lr : c.peak_lr * static_cast<double>(step) / c.warmup_steps;
  return std::max(0.0, c.peak_lr * static_cast<double>(c.max_steps - step) /
                           static_cast<double>(c.max_steps - c.warmup_steps));
}

struct AdamState {
  long long step = 0;
};

// Bias-corrected Adam with decoupled weight decay (-lr * wd * w).
template <class T>
void adamw_step(const std::vector<Param<T>*>& params, AdamState& state, double lr, const TrainConfig& c) {
  for (const auto* p : params)
    if (!p->grad.allFinite()) throw NumericError("non-finite gradient in tensor '" + p->name + "'");
  ++state.step;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  const T b1 = static_cast<T>(c.beta1), b2 = static_cast<T>(c.beta2);
  for (auto* p : params) {
    if (p->m.size() != p->value.size()) {
      p->m = Matrix<T>::Zero(p->value.rows(), p->value.cols());
      p->v = Matrix<T>::Zero(p->value.rows(), p->value.cols());
    }
    T* w = p->value.data();
    const T* g = p->grad.data();
    T* m = p->m.data();
    T* v = p->v.data();
    for (Eigen::Index k = 0; k < p->value.size(); ++k) {
      m[k] = b1 * m[k] + (T(1) - b1) * g[k];
      v[k] = b2 * v[k] + (T(1) - b2) * g[k] * g[k];
      const double mhat = static_cast<double>(m[k]) / bc1;
      const double vhat = static_cast<double>(v[k]) / bc2;
      const double wk = static_cast<double>(w[k]);
      w[k] = static_cast<T>(wk - lr * mhat / (std::sqrt(vhat) + c.eps) - lr * c.weight_decay * wk);
    }
  }
}

// Word budget at an optimizer step: grows geometrically from the start size
// up to the cap.
inline double batch_budget(int step, const TrainConfig& c) {
  return std::min(static_cast<double>(c.batch_words_max),
                  c.batch_words_start * std::pow(c.batch_growth, static_cast<double>(step)));
}

// Greedy word-budget batching over `word_counts` (one entry per excerpt).
// The order is shuffled with `rng` when given; a single excerpt larger than
// the budget still forms its own batch.
inline std::vector<std::vector<std::size_t>> make_batches(const std::vector<std::size_t>& word_counts, int step,
                                                          const TrainConfig& c, Rng* rng) {
  std::vector<std::size_t> order(word_counts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  if (rng) rng->shuffle(order);
  const double budget = batch_budget(step, c);
  std::vector<std::vector<std::size_t>> batches;
  std::vector<std::size_t> cur;
  double words = 0.0;
  for (auto i : order) {
    const double w = static_cast<double>(word_counts[i]);
    if (!cur.empty() && words + w > budget) {
      batches.push_back(std::move(cur));
      cur.clear();
      words = 0.0;
    }
    cur.push_back(i);
    words += w;
  }
  if (!cur.empty()) batches.push_back(std::move(cur));
  return batches;
}

inline std::vector<std::size_t> word_counts(const Corpus& corpus) {
  std::vector<std::size_t> out;
  out.reserve(corpus.size());
  for (const auto& e : corpus) out.push_back(e.tokens.size());
  return out;
}

// ---------------------------------------------------------------- evaluation

template <class T>
std::vector<std::vector<SpanAnnotation>> predict_corpus(const SpanModel<T>& model, const Corpus& corpus,
                                                        const ExternalVectors* vecs) {
  std::vector<std::vector<SpanAnnotation>> out;
  out.reserve(corpus.size());
  for (const auto& e : corpus) out.push_back(model.predict(e, vectors_for(vecs, e)));
  return out;
}

// End-to-end span evaluation; nullopt when neither side has any span.
template <class T>
std::optional<EvalReport> evaluate(const SpanModel<T>& model, const Corpus& corpus, const ExternalVectors* vecs,
                                   const std::string& gold_annotator = "") {
  const AlignedPairs pairs = align_corpus(corpus, predict_corpus(model, corpus, vecs), gold_annotator);
  if (pairs.empty()) return std::nullopt;
  return score_report(pairs);
}

// ---------------------------------------------------------------- training loop

struct TrainLogEntry {
  int step = 0;
  double loss = 0.0;
  double lr = 0.0;
  std::optional<EvalReport> dev;
};

struct TrainResult {
  SpanModel<float> model;  // best-dev checkpoint
  int best_step = 0;
  double best_dev_f1 = -1.0;
  std::optional<EvalReport> best_dev;
  std::vector<double> step_losses;  // one per optimizer step
  std::vector<TrainLogEntry> log;   // one per evaluation
  int steps_run = 0;
  bool early_stopped = false;
};

using LogCallback = std::function<void(const TrainLogEntry&)>;

// `train_split` should already be oversampled; `dev` is only evaluated.
inline TrainResult train(const Corpus& train_split, const Corpus& dev, const ModelConfig& model_cfg,
                  const TrainConfig& cfg, const ExternalVectors* vecs = nullptr, const LogCallback& on_log = {}) {
  cfg.validate();
  if (train_split.empty()) throw DataError("train: empty training split");

  SpanModel<float> model(model_cfg);
  std::vector<CandidateSet> candidates;
  std::vector<std::vector<SpanAnnotation>> gold;
  candidates.reserve(train_split.size());
  for (const auto& e : train_split) {
    candidates.push_back(model.candidates(e));
    gold.push_back(e.spans_by(cfg.gold_annotator));
  }
  const auto words = word_counts(train_split);

  Rng shuffle_rng(cfg.seed);
  Rng dropout_rng(splitmix64(cfg.seed + 1));
  AdamState adam;
  TrainResult result;
  result.model = model;

  std::vector<std::vector<std::size_t>> epoch;
  std::size_t next_batch = 0;
  auto take_batch = [&](int step) -> const std::vector<std::size_t>& {
    if (next_batch >= epoch.size()) {
      epoch = make_batches(words, step, cfg, &shuffle_rng);
      next_batch = 0;
    }
    return epoch[next_batch++];
  };

  auto run_eval = [&](int step, double loss, double lr) {
    TrainLogEntry entry{step, loss, lr, std::nullopt};
    if (!dev.empty()) entry.dev = evaluate(model, dev, vecs, cfg.gold_annotator);
    const double score = entry.dev ? entry.dev->macro_f1 : 0.0;
    if (score > result.best_dev_f1) {
      result.best_dev_f1 = score;
      result.best_step = step;
      result.best_dev = entry.dev;
      result.model = model;
    }
    result.log.push_back(entry);
    if (on_log) on_log(entry);
  };

  for (int step = 0; step < cfg.max_steps;) {
    model.zero_grad();
    double step_loss = 0.0;
    for (int a = 0; a < cfg.grad_accum; ++a) {
      const auto& batch = take_batch(step);
      std::size_t cells = 0;
      for (auto i : batch) cells += candidates[i].size() * model.labels().size();
      if (cells == 0) continue;
      const double scale = 1.0 / (static_cast<double>(cells) * cfg.grad_accum);
      double batch_loss = 0.0;
      for (auto i : batch)
        batch_loss += model.accumulate_on(train_split[i], candidates[i], vectors_for(vecs, train_split[i]), gold[i],
                                          scale, &dropout_rng)
                          .loss;
      step_loss += batch_loss / static_cast<double>(cells) / cfg.grad_accum;
    }
    ++step;
    if (!std::isfinite(step_loss)) throw NumericError("non-finite loss at step " + std::to_string(step));
    const double lr = lr_at_step(step, cfg);
    adamw_step(model.parameters(), adam, lr, cfg);
    result.step_losses.push_back(step_loss);
    result.steps_run = step;

    if (step % cfg.eval_every == 0 || step == cfg.max_steps) {
      run_eval(step, step_loss, lr);
      if (step - result.best_step >= cfg.patience_steps) {
        result.early_stopped = step < cfg.max_steps;
        break;
      }
    }
  }
  return result;
}

// Oversamples the training split (when enabled) and trains.
inline TrainResult train_split_pipeline(const Corpus& corpus, const Fold& fold, const ModelConfig& model_cfg,
                                        const TrainConfig& cfg, const ExternalVectors* vecs = nullptr,
                                        const LogCallback& on_log = {}) {
  Corpus tr = select(corpus, fold.train);
  if (cfg.oversample_alpha > 0.0) tr = oversample_training(tr, cfg.oversample_alpha);
  return train(tr, select(corpus, fold.dev), model_cfg, cfg, vecs, on_log);
}

// ---------------------------------------------------------------- cross-validation

struct MetricSummary {
  std::string name;
  std::optional<double> mean;
  std::optional<double> min;
};

struct CvResult {
  std::vector<EvalReport> fold_reports;  // test-set reports
  std::vector<int> best_steps;
  std::vector<MetricSummary> summary;    // report-row order
};

inline std::vector<MetricSummary> summarize(const std::vector<EvalReport>& reports) {
  std::vector<MetricSummary> out;
  if (reports.empty()) return out;
  const auto names = report_rows(reports.front());
  for (std::size_t r = 0; r < names.size(); ++r) {
    MetricSummary s{names[r].first, std::nullopt, std::nullopt};
    double sum = 0.0;
    int n = 0;
    for (const auto& rep : reports) {
      const auto v = report_rows(rep)[r].second;
      if (!v) continue;
      sum += *v;
      ++n;
      s.min = s.min ? std::min(*s.min, *v) : *v;
    }
    if (n) s.mean = sum / n;
    out.push_back(s);
  }
  return out;
}

inline std::vector<ReportColumn> summary_columns(const std::vector<MetricSummary>& s, const std::string& prefix = "") {
  ReportColumn m{prefix + "M", {}}, mn{prefix + "Min", {}};
  for (const auto& x : s) {
    m.second.push_back(x.mean);
    mn.second.push_back(x.min);
  }
  return {m, mn};
}

inline CvResult cross_validate(const Corpus& corpus, const FoldSet& folds, const ModelConfig& model_cfg,
                               const TrainConfig& cfg, const ExternalVectors* vecs = nullptr,
                               const std::function<void(int, const EvalReport&)>& on_fold = {}) {
  CvResult out;
  for (std::size_t f = 0; f < folds.folds.size(); ++f) {
    const Fold& fold = folds.folds[f];
    TrainResult tr = train_split_pipeline(corpus, fold, model_cfg, cfg, vecs);
    auto rep = evaluate(tr.model, select(corpus, fold.test), vecs, cfg.gold_annotator);
    if (!rep) throw NoDataError("fold " + std::to_string(f) + ": test split has no spans on either side");
    out.fold_reports.push_back(*rep);
    out.best_steps.push_back(tr.best_step);
    if (on_fold) on_fold(static_cast<int>(f), *rep);
  }
  out.summary = summarize(out.fold_reports);
  return out;
}

// ---------------------------------------------------------------- random search

// Architectures: "baseline" (single encoder), "lstm" (+ Bi-LSTM) and "dual"
// (trainable hashed encoder beside a frozen external one, + Bi-LSTM).
// Encoder sources: "hashed" or the name of an external vector set.
struct SearchSpace {
  std::vector<std::string> architectures{"baseline", "lstm", "dual"};
  std::vector<std::string> encoder_sources{"hashed"};
  std::vector<Activation> activations{Activation::Maxout, Activation::Mish, Activation::DualMish};
  std::vector<int> hidden_sizes{128, 256, 384};
  std::vector<double> dropouts{0.0, 0.2, 0.3, 0.4};
  std::vector<int> depths{1, 2};
  double lr_min = 2e-5;
  double lr_max = 6e-5;
  std::vector<std::uint64_t> seeds{0, 808, 1993, 1234, 2023};
  std::vector<int> grad_accums{4, 8};
  std::vector<int> batch_starts{300, 500, 900};

  void validate() const {
    if (architectures.empty() || encoder_sources.empty() || activations.empty() || hidden_sizes.empty() ||
        dropouts.empty() || depths.empty() || seeds.empty() || grad_accums.empty() || batch_starts.empty())
      throw DataError("search space: every domain must be non-empty");
    if (!(lr_min > 0.0 && lr_min <= lr_max)) throw DataError("search space: need 0 < lr_min <= lr_max");
    for (const auto& a : architectures)
      if (a != "baseline" && a != "lstm" && a != "dual") throw DataError("search space: unknown architecture " + a);
  }
};

struct TrialConfig {
  std::string architecture;
  std::string encoder_source;
  ModelConfig model;
  TrainConfig train;
};

using VectorSets = std::map<std::string, ExternalVectors>;

// Draws `trials` configurations. `base_model` / `base_train` supply every
// field the space does not cover (dims, step counts, ...). `external_dim`
// is the dimension of the named vector sets.
inline std::vector<TrialConfig> sample_trials(const SearchSpace& space, int trials, std::uint64_t seed,
                                              const ModelConfig& base_model, const TrainConfig& base_train,
                                              int external_dim = 0) {
  space.validate();
  if (trials < 1) throw DataError("random search needs at least one trial");
  std::vector<std::string> external_sources;
  for (const auto& s : space.encoder_sources)
    if (s != "hashed") external_sources.push_back(s);

  Rng rng(seed);
  std::vector<TrialConfig> out;
  for (int t = 0; t < trials; ++t) {
    TrialConfig tc;
    tc.architecture = rng.pick(space.architectures);
    tc.encoder_source = rng.pick(space.encoder_sources);
    tc.model = base_model;
    tc.train = base_train;
    tc.model.classifier.activation = rng.pick(space.activations);
    tc.model.classifier.hidden = rng.pick(space.hidden_sizes);
    tc.model.classifier.dropout = rng.pick(space.dropouts);
    tc.model.classifier.depth = rng.pick(space.depths);
    tc.train.peak_lr = rng.uniform(space.lr_min, space.lr_max);
    tc.train.seed = rng.pick(space.seeds);
    tc.model.seed = tc.train.seed;
    tc.train.grad_accum = rng.pick(space.grad_accums);
    tc.train.batch_words_start = std::min(rng.pick(space.batch_starts), tc.train.batch_words_max);

    auto& enc = tc.model.encoder;
    if (tc.architecture == "dual") {
      if (external_sources.empty())
        throw DataError("search space: dual architecture needs an external encoder source");
      if (tc.encoder_source == "hashed") tc.encoder_source = external_sources.front();
      enc.source = EncoderSource::Dual;
      enc.use_lstm = true;
    } else {
      enc.source = tc.encoder_source == "hashed" ? EncoderSource::Hashed : EncoderSource::External;
      enc.use_lstm = tc.architecture == "lstm";
    }
    if (enc.uses_external()) enc.external_dim = external_dim;
    out.push_back(std::move(tc));
  }
  return out;
}

struct TrialResult {
  int index = 0;
  TrialConfig config;
  double dev_macro_f1 = 0.0;
  std::optional<EvalReport> dev;
  int best_step = 0;
};

// Trains every sampled trial on one fixed train/dev split and ranks by dev
// macro F1 (ties keep sampling order).
inline std::vector<TrialResult> random_search(const Corpus& corpus, const Fold& split, const SearchSpace& space,
                                              int trials, std::uint64_t seed, const ModelConfig& base_model,
                                              const TrainConfig& base_train, const VectorSets& vector_sets = {},
                                              const std::function<void(const TrialResult&)>& on_trial = {}) {
  int external_dim = 0;
  for (const auto& [name, vs] : vector_sets)
    if (!vs.empty()) {
      external_dim = static_cast<int>(vs.begin()->second.cols());
      break;
    }
  const auto configs = sample_trials(space, trials, seed, base_model, base_train, external_dim);
  std::vector<TrialResult> out;
  for (std::size_t t = 0; t < configs.size(); ++t) {
    const auto& tc = configs[t];
    const ExternalVectors* vecs = nullptr;
    if (tc.model.encoder.uses_external()) {
      auto it = vector_sets.find(tc.encoder_source);
      if (it == vector_sets.end()) throw DataError("no vector set named '" + tc.encoder_source + "'");
      vecs = &it->second;
    }
    TrainResult tr = train_split_pipeline(corpus, split, tc.model, tc.train, vecs);
    TrialResult r{static_cast<int>(t), tc, std::max(0.0, tr.best_dev_f1), tr.best_dev, tr.best_step};
    if (on_trial) on_trial(r);
    out.push_back(std::move(r));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const TrialResult& a, const TrialResult& b) { return a.dev_macro_f1 > b.dev_macro_f1; });
  return out;
}

}  // namespace spancat
