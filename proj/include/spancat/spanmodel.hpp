#pragma once

// Span classifier: pooled span representation -> feed-forward block ->
// per-label logistic output.

#include <Eigen/Core>
#include <string>
#include <vector>

#include "spancat/error.hpp"
#include "spancat/labels.hpp"
#include "spancat/suggester.hpp"
#include "spancat/tensor.hpp"

namespace spancat {

enum class PoolOp { Mean, Max, First, Last };
using PoolingSpec = std::vector<PoolOp>;

inline PoolingSpec default_pooling() { return {PoolOp::Mean, PoolOp::Max, PoolOp::First, PoolOp::Last}; }

enum class Activation { Maxout, Mish, DualMish };

inline constexpr int kMaxoutPieces = 3;

struct ClassifierConfig {
  Activation activation = Activation::Maxout;
  int hidden = 128;
  int depth = 1;
  double dropout = 0.0;
  PoolingSpec pooling = default_pooling();

  int ffn_output_dim() const { return activation == Activation::DualMish ? 2 * hidden : hidden; }

  void validate() const {
    if (pooling.empty()) throw DataError("pooling selection must be non-empty");
    if (hidden < 1) throw DataError("FFN hidden size must be >= 1");
    if (depth < 1 || depth > 2) throw DataError("FFN depth must be 1 or 2");
    if (dropout < 0.0 || dropout >= 1.0) throw DataError("dropout must be in [0, 1)");
  }
};

// ---------------------------------------------------------------- pooling

struct PoolCache {
  std::vector<Interval> spans;
  Eigen::MatrixXi argmax;  // N x d, absolute token row of each max
  Eigen::Index rows = 0;
};

template <class T>
Matrix<T> pool_spans(const Matrix<T>& enc, const CandidateSet& spans, const PoolingSpec& spec,
                     PoolCache* cache = nullptr) {
  if (spec.empty()) throw DataError("pooling selection must be non-empty");
  const Eigen::Index d = enc.cols();
  const auto n = static_cast<Eigen::Index>(spans.size());
  Matrix<T> out(n, d * static_cast<Eigen::Index>(spec.size()));
  Eigen::MatrixXi argmax;
  const bool need_max = std::find(spec.begin(), spec.end(), PoolOp::Max) != spec.end();
  if (need_max) argmax.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Interval& s = spans[i];
    if (s.start >= s.end) throw DataError("cannot pool an empty span");
    if (s.start < 0 || s.end > enc.rows()) throw DataError("span outside encoding");
    for (std::size_t k = 0; k < spec.size(); ++k) {
      auto seg = out.block(i, static_cast<Eigen::Index>(k) * d, 1, d);
      switch (spec[k]) {
        case PoolOp::Mean:
          seg = enc.middleRows(s.start, s.length()).colwise().sum() / static_cast<T>(s.length());
          break;
        case PoolOp::Max:
          for (Eigen::Index j = 0; j < d; ++j) {
            int best = s.start;
            for (int t = s.start + 1; t < s.end; ++t)
              if (enc(t, j) > enc(best, j)) best = t;
            argmax(i, j) = best;
            seg(0, j) = enc(best, j);
          }
          break;
        case PoolOp::First:
          seg = enc.row(s.start);
          break;
        case PoolOp::Last:
          seg = enc.row(s.end - 1);
          break;
      }
    }
  }
  if (cache) {
    cache->spans = spans;
    cache->argmax = std::move(argmax);
    cache->rows = enc.rows();
  }
  return out;
}

template <class T>
RowVector<T> pool_span(const Matrix<T>& enc, Interval span, const PoolingSpec& spec = default_pooling()) {
  return pool_spans(enc, CandidateSet{span}, spec).row(0);
}

template <class T>
Matrix<T> pool_backward(const PoolCache& cache, const PoolingSpec& spec, const Matrix<T>& d_pooled) {
  const Eigen::Index d = d_pooled.cols() / static_cast<Eigen::Index>(spec.size());
  Matrix<T> d_enc = Matrix<T>::Zero(cache.rows, d);
  for (std::size_t i = 0; i < cache.spans.size(); ++i) {
    const Interval& s = cache.spans[i];
    for (std::size_t k = 0; k < spec.size(); ++k) {
      auto g = d_pooled.block(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k) * d, 1, d);
      switch (spec[k]) {
        case PoolOp::Mean: {
          RowVector<T> share = g / static_cast<T>(s.length());
          for (int t = s.start; t < s.end; ++t) d_enc.row(t) += share;
          break;
        }
        case PoolOp::Max:
          for (Eigen::Index j = 0; j < d; ++j) d_enc(cache.argmax(static_cast<Eigen::Index>(i), j), j) += g(0, j);
          break;
        case PoolOp::First:
          d_enc.row(s.start) += g;
          break;
        case PoolOp::Last:
          d_enc.row(s.end - 1) += g;
          break;
      }
    }
  }
  return d_enc;
}

// ---------------------------------------------------------------- FFN

template <class T>
T mish(T z) {
  return z * std::tanh(softplus(z));
}

template <class T>
T mish_grad(T z) {
  const T sp = softplus(z);
  const T th = std::tanh(sp);
  return th + z * (T(1) - th * th) * sigmoid(z);
}

template <class T>
struct LayerCache {
  Matrix<T> x;
  Matrix<T> z;                // mish pre-activation
  Eigen::MatrixXi piece;      // maxout winning piece
  Matrix<T> mask;             // dropout scale per output, empty when inactive
};

// One affine layer followed by maxout (3 pieces per unit) or mish, then
// inverted dropout in training mode.
template <class T>
class FfnLayer {
 public:
  FfnLayer() = default;
  FfnLayer(const std::string& prefix, Activation act, int in, int out, double dropout)
      : w(prefix + ".W", (act == Activation::Maxout ? kMaxoutPieces : 1) * out, in),
        b(prefix + ".b", 1, (act == Activation::Maxout ? kMaxoutPieces : 1) * out),
        act_(act == Activation::Maxout ? Activation::Maxout : Activation::Mish),
        out_(out),
        dropout_(dropout) {}

  void init(Rng& rng) {
    init_fan_in(w, rng, w.value.cols());
    b.value.setZero();
  }

  int input_dim() const { return static_cast<int>(w.value.cols()); }
  int output_dim() const { return out_; }

  Matrix<T> forward(const Matrix<T>& x, Rng* dropout_rng, LayerCache<T>* cache) const {
    if (x.cols() != w.value.cols())
      throw DataError("ffn: input dim " + std::to_string(x.cols()) + ", expected " +
                      std::to_string(w.value.cols()));
    Matrix<T> z = x * w.value.transpose();
    z.rowwise() += b.value.row(0);
    Matrix<T> y(x.rows(), out_);
    Eigen::MatrixXi piece;
    if (act_ == Activation::Maxout) {
      piece.resize(x.rows(), out_);
      for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (int j = 0; j < out_; ++j) {
          int best = 0;
          for (int p = 1; p < kMaxoutPieces; ++p)
            if (z(i, j * kMaxoutPieces + p) > z(i, j * kMaxoutPieces + best)) best = p;
          piece(i, j) = best;
          y(i, j) = z(i, j * kMaxoutPieces + best);
        }
    } else {
      y = z.unaryExpr([](T v) { return mish(v); });
    }
    Matrix<T> mask;
    if (dropout_rng && dropout_ > 0.0) {
      mask.resize(y.rows(), y.cols());
      const T keep_scale = T(1) / static_cast<T>(1.0 - dropout_);
      for (Eigen::Index k = 0; k < mask.size(); ++k)
        mask.data()[k] = dropout_rng->uniform() < dropout_ ? T(0) : keep_scale;
      y = y.cwiseProduct(mask);
    }
    if (cache) {
      cache->x = x;
      cache->z = std::move(z);
      cache->piece = std::move(piece);
      cache->mask = std::move(mask);
    }
    return y;
  }

  Matrix<T> backward(const LayerCache<T>& cache, const Matrix<T>& d_y_in) {
    Matrix<T> d_y = cache.mask.size() ? Matrix<T>(d_y_in.cwiseProduct(cache.mask)) : d_y_in;
    Matrix<T> d_z;
    if (act_ == Activation::Maxout) {
      d_z = Matrix<T>::Zero(d_y.rows(), w.value.rows());
      for (Eigen::Index i = 0; i < d_y.rows(); ++i)
        for (int j = 0; j < out_; ++j) d_z(i, j * kMaxoutPieces + cache.piece(i, j)) = d_y(i, j);
    } else {
      d_z = d_y.cwiseProduct(cache.z.unaryExpr([](T v) { return mish_grad(v); }));
    }
    w.grad.noalias() += d_z.transpose() * cache.x;
    b.grad.row(0) += d_z.colwise().sum();
    return d_z * w.value;
  }

  void collect(std::vector<Param<T>*>& out) {
    out.push_back(&w);
    out.push_back(&b);
  }

  Param<T> w, b;

 private:
  Activation act_ = Activation::Maxout;
  int out_ = 0;
  double dropout_ = 0.0;
};

template <class T>
struct FfnCache {
  std::vector<std::vector<LayerCache<T>>> stacks;
};

// One stack for maxout/mish; two independent mish stacks, outputs
// concatenated, for dual-mish.
template <class T>
class FeedForward {
 public:
  FeedForward() = default;
  FeedForward(const ClassifierConfig& cfg, int input_dim) : cfg_(cfg) {
    const int n_stacks = cfg.activation == Activation::DualMish ? 2 : 1;
    for (int s = 0; s < n_stacks; ++s) {
      std::vector<FfnLayer<T>> stack;
      int in = input_dim;
      for (int l = 0; l < cfg.depth; ++l) {
        stack.emplace_back("ffn" + std::to_string(s) + ".l" + std::to_string(l), cfg.activation, in,
                           cfg.hidden, cfg.dropout);
        in = cfg.hidden;
      }
      stacks_.push_back(std::move(stack));
    }
  }

  void init(Rng& rng) {
    for (auto& st : stacks_)
      for (auto& l : st) l.init(rng);
  }

  int output_dim() const { return cfg_.ffn_output_dim(); }

  // `dropout_rng` null means inference (dropout is the identity).
  Matrix<T> forward(const Matrix<T>& x, Rng* dropout_rng, FfnCache<T>* cache) const {
    if (cache) cache->stacks.assign(stacks_.size(), {});
    Matrix<T> out(x.rows(), output_dim());
    for (std::size_t s = 0; s < stacks_.size(); ++s) {
      Matrix<T> h = x;
      if (cache) cache->stacks[s].resize(stacks_[s].size());
      for (std::size_t l = 0; l < stacks_[s].size(); ++l)
        h = stacks_[s][l].forward(h, dropout_rng, cache ? &cache->stacks[s][l] : nullptr);
      out.middleCols(static_cast<Eigen::Index>(s) * cfg_.hidden, cfg_.hidden) = h;
    }
    return out;
  }

  Matrix<T> backward(const FfnCache<T>& cache, const Matrix<T>& d_out) {
    Matrix<T> d_x;
    for (std::size_t s = 0; s < stacks_.size(); ++s) {
      Matrix<T> g = d_out.middleCols(static_cast<Eigen::Index>(s) * cfg_.hidden, cfg_.hidden);
      for (std::size_t l = stacks_[s].size(); l-- > 0;) g = stacks_[s][l].backward(cache.stacks[s][l], g);
      if (d_x.size() == 0) d_x = std::move(g);
      else d_x += g;
    }
    return d_x;
  }

  void collect(std::vector<Param<T>*>& out) {
    for (auto& st : stacks_)
      for (auto& l : st) l.collect(out);
  }

  std::vector<std::vector<FfnLayer<T>>>& stacks() { return stacks_; }

 private:
  ClassifierConfig cfg_;
  std::vector<std::vector<FfnLayer<T>>> stacks_;
};

// ---------------------------------------------------------------- classifier

template <class T>
struct ClassifierCache {
  PoolCache pool;
  FfnCache<T> ffn;
  Matrix<T> hidden;
};

template <class T>
class SpanClassifier {
 public:
  SpanClassifier() = default;
  SpanClassifier(const ClassifierConfig& cfg, int encoding_dim, int n_labels, Rng& rng)
      : out_w("out.W", n_labels, cfg.ffn_output_dim()),
        out_b("out.b", 1, n_labels),
        cfg_(cfg),
        encoding_dim_(encoding_dim),
        ffn_(cfg, encoding_dim * static_cast<int>(cfg.pooling.size())) {
    cfg_.validate();
    ffn_.init(rng);
    init_fan_in(out_w, rng, out_w.value.cols());
  }

  const ClassifierConfig& config() const { return cfg_; }
  int encoding_dim() const { return encoding_dim_; }
  int n_labels() const { return static_cast<int>(out_w.value.rows()); }

  Matrix<T> logits(const Matrix<T>& enc, const CandidateSet& spans, Rng* dropout_rng,
                   ClassifierCache<T>* cache = nullptr) const {
    if (enc.cols() != encoding_dim_)
      throw DataError("classifier: encoding dim " + std::to_string(enc.cols()) + ", expected " +
                      std::to_string(encoding_dim_));
    Matrix<T> pooled = pool_spans(enc, spans, cfg_.pooling, cache ? &cache->pool : nullptr);
    Matrix<T> h = ffn_.forward(pooled, dropout_rng, cache ? &cache->ffn : nullptr);
    Matrix<T> z = h * out_w.value.transpose();
    z.rowwise() += out_b.value.row(0);
    if (cache) cache->hidden = std::move(h);
    return z;
  }

  Matrix<T> backward(const ClassifierCache<T>& cache, const Matrix<T>& d_logits) {
    out_w.grad.noalias() += d_logits.transpose() * cache.hidden;
    out_b.grad.row(0) += d_logits.colwise().sum();
    Matrix<T> d_h = d_logits * out_w.value;
    Matrix<T> d_pooled = ffn_.backward(cache.ffn, d_h);
    return pool_backward(cache.pool, cfg_.pooling, d_pooled);
  }

  void collect(std::vector<Param<T>*>& out) {
    ffn_.collect(out);
    out.push_back(&out_w);
    out.push_back(&out_b);
  }

  FeedForward<T>& ffn() { return ffn_; }
  const FeedForward<T>& ffn() const { return ffn_; }

  Param<T> out_w, out_b;

 private:
  ClassifierConfig cfg_;
  int encoding_dim_ = 0;
  FeedForward<T> ffn_;
};

template <class T>
Matrix<T> sigmoid_matrix(const Matrix<T>& z) {
  return z.unaryExpr([](T v) { return sigmoid(v); });
}

}  // namespace spancat
