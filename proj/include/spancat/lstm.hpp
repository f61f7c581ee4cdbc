#pragma once

// Single-layer bidirectional LSTM with hand-written backpropagation.
// Gate order within the 4H pre-activation is input, forget, cell, output.

#include <string>
#include <vector>

#include "spancat/error.hpp"
#include "spancat/tensor.hpp"

namespace spancat {

template <class T>
struct LstmCache {
  Matrix<T> x;       // T x D (in processing order)
  Matrix<T> gates;   // T x 4H, post-activation
  Matrix<T> c;       // T x H
  Matrix<T> tanh_c;  // T x H
  Matrix<T> h;       // T x H
};

template <class T>
class LstmDirection {
 public:
  LstmDirection() = default;
  LstmDirection(const std::string& prefix, int input_dim, int hidden)
      : wx(prefix + ".Wx", 4 * hidden, input_dim),
        wh(prefix + ".Wh", 4 * hidden, hidden),
        b(prefix + ".b", 1, 4 * hidden),
        hidden_(hidden) {}

  void init(Rng& rng) {
    const Eigen::Index fan_in = wx.value.cols() + wh.value.cols();
    init_fan_in(wx, rng, fan_in);
    init_fan_in(wh, rng, fan_in);
    b.value.setZero();
    b.value.block(0, hidden_, 1, hidden_).setOnes();
  }

  int hidden() const { return hidden_; }
  int input_dim() const { return static_cast<int>(wx.value.cols()); }

  // `x` rows are processed top to bottom.
  Matrix<T> forward(const Matrix<T>& x, LstmCache<T>* cache) const {
    const Eigen::Index n = x.rows();
    const int H = hidden_;
    Matrix<T> pre = x * wx.value.transpose();
    pre.rowwise() += b.value.row(0);
    Matrix<T> gates(n, 4 * H), c(n, H), tc(n, H), h(n, H);
    RowVector<T> h_prev = RowVector<T>::Zero(H), c_prev = RowVector<T>::Zero(H);
    for (Eigen::Index t = 0; t < n; ++t) {
      RowVector<T> z = pre.row(t) + h_prev * wh.value.transpose();
      for (int j = 0; j < H; ++j) {
        gates(t, j) = sigmoid(z(j));
        gates(t, H + j) = sigmoid(z(H + j));
        gates(t, 2 * H + j) = std::tanh(z(2 * H + j));
        gates(t, 3 * H + j) = sigmoid(z(3 * H + j));
        c(t, j) = gates(t, H + j) * c_prev(j) + gates(t, j) * gates(t, 2 * H + j);
        tc(t, j) = std::tanh(c(t, j));
        h(t, j) = gates(t, 3 * H + j) * tc(t, j);
      }
      h_prev = h.row(t);
      c_prev = c.row(t);
    }
    if (cache) {
      cache->x = x;
      cache->gates = std::move(gates);
      cache->c = std::move(c);
      cache->tanh_c = std::move(tc);
      cache->h = h;
    }
    return h;
  }

  // Accumulates parameter gradients; returns dL/dx.
  Matrix<T> backward(const LstmCache<T>& cache, const Matrix<T>& d_h) {
    const Eigen::Index n = cache.x.rows();
    const int H = hidden_;
    Matrix<T> dz(n, 4 * H);
    RowVector<T> dh_next = RowVector<T>::Zero(H), dc_next = RowVector<T>::Zero(H);
    for (Eigen::Index t = n - 1; t >= 0; --t) {
      RowVector<T> dh = d_h.row(t) + dh_next;
      for (int j = 0; j < H; ++j) {
        const T i = cache.gates(t, j), f = cache.gates(t, H + j), g = cache.gates(t, 2 * H + j),
                o = cache.gates(t, 3 * H + j), tc = cache.tanh_c(t, j);
        const T c_prev = t > 0 ? cache.c(t - 1, j) : T(0);
        const T dc = dh(j) * o * (T(1) - tc * tc) + dc_next(j);
        dz(t, j) = dc * g * i * (T(1) - i);
        dz(t, H + j) = dc * c_prev * f * (T(1) - f);
        dz(t, 2 * H + j) = dc * i * (T(1) - g * g);
        dz(t, 3 * H + j) = dh(j) * tc * o * (T(1) - o);
        dc_next(j) = dc * f;
      }
      dh_next = dz.row(t) * wh.value;
    }
    wx.grad.noalias() += dz.transpose() * cache.x;
    if (n > 1) wh.grad.noalias() += dz.bottomRows(n - 1).transpose() * cache.h.topRows(n - 1);
    b.grad.row(0) += dz.colwise().sum();
    return dz * wx.value;
  }

  void collect(std::vector<Param<T>*>& out) {
    out.push_back(&wx);
    out.push_back(&wh);
    out.push_back(&b);
  }

  Param<T> wx, wh, b;

 private:
  int hidden_ = 0;
};

template <class T>
struct BiLstmCache {
  LstmCache<T> fwd;
  LstmCache<T> bwd;
};

template <class T>
class BiLstm {
 public:
  BiLstm() = default;
  BiLstm(int input_dim, int hidden) : fwd_("lstm.fwd", input_dim, hidden), bwd_("lstm.bwd", input_dim, hidden) {}

  void init(Rng& rng) {
    fwd_.init(rng);
    bwd_.init(rng);
  }

  int output_dim() const { return 2 * fwd_.hidden(); }
  int input_dim() const { return fwd_.input_dim(); }

  // (T x D) -> (T x 2H): [left-to-right ; right-to-left] per token.
  Matrix<T> forward(const Matrix<T>& x, BiLstmCache<T>* cache = nullptr) const {
    if (x.cols() != input_dim())
      throw DataError("bilstm: input dim " + std::to_string(x.cols()) + ", expected " +
                      std::to_string(input_dim()));
    const Eigen::Index n = x.rows();
    const int H = fwd_.hidden();
    Matrix<T> out(n, 2 * H);
    if (n == 0) return out;
    out.leftCols(H) = fwd_.forward(x, cache ? &cache->fwd : nullptr);
    Matrix<T> rev = x.colwise().reverse();
    out.rightCols(H) = bwd_.forward(rev, cache ? &cache->bwd : nullptr).colwise().reverse();
    return out;
  }

  Matrix<T> backward(const BiLstmCache<T>& cache, const Matrix<T>& d_out) {
    const Eigen::Index n = d_out.rows();
    const int H = fwd_.hidden();
    if (n == 0) return Matrix<T>(0, input_dim());
    Matrix<T> dx = fwd_.backward(cache.fwd, d_out.leftCols(H));
    Matrix<T> d_rev = d_out.rightCols(H).colwise().reverse();
    dx += bwd_.backward(cache.bwd, d_rev).colwise().reverse();
    return dx;
  }

  void collect(std::vector<Param<T>*>& out) {
    fwd_.collect(out);
    bwd_.collect(out);
  }

  LstmDirection<T>& forward_direction() { return fwd_; }
  LstmDirection<T>& backward_direction() { return bwd_; }

 private:
  LstmDirection<T> fwd_, bwd_;
};

}  // namespace spancat
