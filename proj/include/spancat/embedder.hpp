#pragma once

// Trainable hashed token embedder. Each token sums four bucket rows: its
// lowercased form, 3-character prefix, 3-character suffix and shape
// signature. The table is conceptually dense (`buckets` x `dim`) but rows are
// materialised only once they receive a gradient; untouched rows are derived
// from (seed, bucket) so forward passes stay pure.

#include <array>
#include <cctype>
#include <cstdint>
#include <deque>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "spancat/corpus.hpp"
#include "spancat/tensor.hpp"

namespace spancat {

namespace detail {

inline std::size_t utf8_len(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xe) return 3;
  if ((lead >> 3) == 0x1e) return 4;
  return 1;
}

inline std::vector<std::string_view> utf8_chars(std::string_view s) {
  std::vector<std::string_view> out;
  for (std::size_t i = 0; i < s.size();) {
    std::size_t n = std::min(utf8_len(static_cast<unsigned char>(s[i])), s.size() - i);
    out.push_back(s.substr(i, n));
    i += n;
  }
  return out;
}

}  // namespace detail

inline std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Xxxx / dd / x.x style signature; runs longer than four collapse.
inline std::string word_shape(std::string_view s) {
  std::string out;
  char last = 0;
  int run = 0;
  for (auto ch : detail::utf8_chars(s)) {
    char c;
    if (ch.size() > 1) {
      c = 'x';
    } else {
      const auto u = static_cast<unsigned char>(ch[0]);
      c = std::isupper(u) ? 'X' : std::islower(u) ? 'x' : std::isdigit(u) ? 'd' : ch[0];
    }
    run = (c == last) ? run + 1 : 1;
    last = c;
    if (run <= 4) out += c;
  }
  return out;
}

inline std::array<std::uint32_t, 4> token_features(std::string_view surface, std::uint32_t buckets) {
  const std::string low = lower_ascii(surface);
  const auto chars = detail::utf8_chars(low);
  std::string prefix, suffix;
  for (std::size_t i = 0; i < chars.size() && i < 3; ++i) prefix += chars[i];
  for (std::size_t i = chars.size() > 3 ? chars.size() - 3 : 0; i < chars.size(); ++i) suffix += chars[i];
  const std::array<std::string, 4> keys = {"L=" + low, "P=" + prefix, "S=" + suffix,
                                           "H=" + word_shape(surface)};
  std::array<std::uint32_t, 4> out{};
  for (std::size_t k = 0; k < 4; ++k) out[k] = static_cast<std::uint32_t>(fnv1a(keys[k]) % buckets);
  return out;
}

template <class T>
class HashedEmbedder {
 public:
  HashedEmbedder() = default;
  HashedEmbedder(int dim, std::uint32_t buckets, std::uint64_t seed, double init_bound)
      : dim_(dim), buckets_(buckets), seed_(seed), init_bound_(init_bound) {}

  int dim() const { return dim_; }
  std::uint32_t buckets() const { return buckets_; }
  double init_bound() const { return init_bound_; }

  RowVector<T> row(std::uint32_t bucket) const {
    if (auto it = index_.find(bucket); it != index_.end()) return rows_[it->second].value.row(0);
    return init_row(bucket);
  }

  Matrix<T> forward(const std::vector<Token>& tokens) const {
    Matrix<T> out = Matrix<T>::Zero(static_cast<Eigen::Index>(tokens.size()), dim_);
    for (std::size_t t = 0; t < tokens.size(); ++t)
      for (auto b : token_features(tokens[t].surface, buckets_)) out.row(t) += row(b);
    return out;
  }

  void backward(const std::vector<Token>& tokens, const Matrix<T>& d_out) {
    for (std::size_t t = 0; t < tokens.size(); ++t)
      for (auto b : token_features(tokens[t].surface, buckets_)) materialize(b).grad.row(0) += d_out.row(t);
  }

  void collect(std::vector<Param<T>*>& out) {
    for (auto& p : rows_) out.push_back(&p);
  }

  // Materialised rows in creation order; used by checkpointing.
  std::vector<std::uint32_t> materialized_buckets() const {
    std::vector<std::uint32_t> out(rows_.size());
    for (const auto& [b, i] : index_) out[i] = b;
    return out;
  }

  Param<T>& materialize(std::uint32_t bucket) {
    auto [it, inserted] = index_.emplace(bucket, rows_.size());
    if (inserted) {
      rows_.emplace_back("embed." + std::to_string(bucket), 1, dim_);
      rows_.back().value.row(0) = init_row(bucket);
    }
    return rows_[it->second];
  }

 private:
  RowVector<T> init_row(std::uint32_t bucket) const {
    RowVector<T> r(dim_);
    if (init_bound_ == 0.0) return r.setZero();
    const std::uint64_t base = splitmix64(seed_ ^ splitmix64(bucket));
    for (int j = 0; j < dim_; ++j) {
      const double u = unit_from_bits(splitmix64(base + static_cast<std::uint64_t>(j)));
      r(j) = static_cast<T>((2.0 * u - 1.0) * init_bound_);
    }
    return r;
  }

  int dim_ = 0;
  std::uint32_t buckets_ = 1;
  std::uint64_t seed_ = 0;
  double init_bound_ = 0.0;
  std::unordered_map<std::uint32_t, std::size_t> index_;
  std::deque<Param<T>> rows_;
};

}  // namespace spancat
