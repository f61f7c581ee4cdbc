#pragma once

// Token encoder stack: hashed embedder, external (frozen) vectors, or both
// side by side, optionally followed by a Bi-LSTM.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spancat/corpus.hpp"
#include "spancat/embedder.hpp"
#include "spancat/error.hpp"
#include "spancat/lstm.hpp"
#include "spancat/vectors.hpp"

namespace spancat {

enum class EncoderSource { Hashed, External, Dual };

struct EncoderConfig {
  int embed_dim = 96;
  int lstm_hidden = 200;
  std::uint32_t hash_buckets = 1u << 20;
  EncoderSource source = EncoderSource::Hashed;
  bool use_lstm = false;
  int external_dim = 0;

  bool uses_hashed() const { return source != EncoderSource::External; }
  bool uses_external() const { return source != EncoderSource::Hashed; }

  int base_dim() const {
    return (uses_hashed() ? embed_dim : 0) + (uses_external() ? external_dim : 0);
  }
  int output_dim() const { return use_lstm ? 2 * lstm_hidden : base_dim(); }

  void validate() const {
    if (embed_dim < 1 || lstm_hidden < 1) throw DataError("encoder dims must be >= 1");
    if (hash_buckets < 1 || hash_buckets > (1u << 24))
      throw DataError("hash_buckets must be in [1, 2^24]");
    if (uses_external() && external_dim < 1)
      throw DataError("external/dual encoder mode requires external_dim >= 1");
  }
};

inline std::string encoder_mode_name(const EncoderConfig& c) {
  std::string s = c.source == EncoderSource::Hashed ? "hashed"
                  : c.source == EncoderSource::External ? "external"
                                                        : "dual";
  return c.use_lstm ? s + "+lstm" : s;
}

// Accepts hashed, external, dual, each optionally suffixed with +lstm.
inline void set_encoder_mode(EncoderConfig& c, std::string_view mode) {
  const std::string_view suffix = "+lstm";
  c.use_lstm = mode.size() > suffix.size() && mode.substr(mode.size() - suffix.size()) == suffix;
  if (c.use_lstm) mode.remove_suffix(suffix.size());
  if (mode == "hashed") c.source = EncoderSource::Hashed;
  else if (mode == "external") c.source = EncoderSource::External;
  else if (mode == "dual") c.source = EncoderSource::Dual;
  else throw DataError("unknown encoder mode '" + std::string(mode) + "'");
}

template <class T>
Matrix<T> concat_columns(const Matrix<T>& a, const Matrix<T>& b) {
  Matrix<T> out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

// Per-token [trainable ; frozen]. The frozen half carries no parameters, so
// nothing upstream of it receives gradient.
template <class T>
Matrix<T> dual_encode(const Excerpt& e, const HashedEmbedder<T>& trainable, const Matrix<float>* frozen) {
  if (!frozen) throw DataError("no frozen vectors for excerpt '" + e.id + "'");
  if (frozen->rows() != e.token_count())
    throw DataError("frozen vectors for excerpt '" + e.id + "' do not match its token count");
  return concat_columns<T>(trainable.forward(e.tokens), frozen->template cast<T>());
}

template <class T>
struct EncoderCache {
  BiLstmCache<T> lstm;
};

template <class T>
class Encoder {
 public:
  Encoder() = default;
  Encoder(const EncoderConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(splitmix64(seed ^ 0x656e636f646572ULL));
    if (cfg_.uses_hashed())
      embedder_ = HashedEmbedder<T>(cfg_.embed_dim, cfg_.hash_buckets, rng.next(),
                                    1.0 / std::sqrt(static_cast<double>(cfg_.embed_dim)));
    if (cfg_.use_lstm) {
      lstm_ = BiLstm<T>(cfg_.base_dim(), cfg_.lstm_hidden);
      lstm_->init(rng);
    }
  }

  const EncoderConfig& config() const { return cfg_; }
  int output_dim() const { return cfg_.output_dim(); }

  Matrix<T> base(const Excerpt& e, const Matrix<float>* external) const {
    switch (cfg_.source) {
      case EncoderSource::Hashed:
        return embedder_.forward(e.tokens);
      case EncoderSource::External:
        if (!external) throw DataError("no external vectors for excerpt '" + e.id + "'");
        if (external->rows() != e.token_count() || external->cols() != cfg_.external_dim)
          throw DataError("external vectors for excerpt '" + e.id + "' have the wrong shape");
        return external->template cast<T>();
      case EncoderSource::Dual:
        if (external && external->cols() != cfg_.external_dim)
          throw DataError("frozen vectors for excerpt '" + e.id + "' have the wrong dimension");
        return dual_encode(e, embedder_, external);
    }
    return {};
  }

  Matrix<T> forward(const Excerpt& e, const Matrix<float>* external, EncoderCache<T>* cache = nullptr) const {
    Matrix<T> x = base(e, external);
    if (!lstm_) return x;
    return lstm_->forward(x, cache ? &cache->lstm : nullptr);
  }

  void backward(const Excerpt& e, const EncoderCache<T>& cache, const Matrix<T>& d_out) {
    Matrix<T> d_base = lstm_ ? lstm_->backward(cache.lstm, d_out) : d_out;
    if (cfg_.uses_hashed()) embedder_.backward(e.tokens, d_base.leftCols(cfg_.embed_dim));
  }

  void collect(std::vector<Param<T>*>& out) {
    if (cfg_.uses_hashed()) embedder_.collect(out);
    if (lstm_) lstm_->collect(out);
  }

  HashedEmbedder<T>& embedder() { return embedder_; }
  const HashedEmbedder<T>& embedder() const { return embedder_; }
  std::optional<BiLstm<T>>& lstm() { return lstm_; }

 private:
  EncoderConfig cfg_;
  HashedEmbedder<T> embedder_;
  std::optional<BiLstm<T>> lstm_;
};

}  // namespace spancat
