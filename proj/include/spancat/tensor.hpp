#pragma once

#include <Eigen/Core>
#include <cmath>
#include <string>
#include <vector>

#include "spancat/rng.hpp"

namespace spancat {

template <class T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class T>
using RowVector = Eigen::Matrix<T, 1, Eigen::Dynamic>;

// A trainable tensor with its gradient and AdamW moments.
template <class T>
struct Param {
  std::string name;
  Matrix<T> value;
  Matrix<T> grad;
  Matrix<T> m;
  Matrix<T> v;

  Param() = default;
  Param(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)),
        value(Matrix<T>::Zero(rows, cols)),
        grad(Matrix<T>::Zero(rows, cols)),
        m(Matrix<T>::Zero(rows, cols)),
        v(Matrix<T>::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }
};

// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in))
template <class T>
void init_fan_in(Param<T>& p, Rng& rng, Eigen::Index fan_in) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (Eigen::Index i = 0; i < p.value.size(); ++i)
    p.value.data()[i] = static_cast<T>(rng.uniform(-bound, bound));
}

template <class T>
T sigmoid(T x) {
  return x >= T(0) ? T(1) / (T(1) + std::exp(-x)) : std::exp(x) / (T(1) + std::exp(x));
}

template <class T>
T softplus(T x) {
  return x > T(20) ? x : std::log1p(std::exp(x));
}

template <class T>
bool all_finite(const Matrix<T>& m) {
  return m.allFinite();
}

}  // namespace spancat
