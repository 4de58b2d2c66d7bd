#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "holoflow/errors.hpp"

namespace holoflow {

/// Dense real tensor with `Rank` slots, each running over the same dimension n.
/// Row-major storage: the last index is fastest.
template <int Rank>
class Tensor {
  static_assert(Rank >= 1 && Rank <= 8);

 public:
  Tensor() = default;
  explicit Tensor(int n) : n_(n), a_(sizeFor(n), 0.0) {}

  int dim() const { return n_; }
  std::size_t size() const { return a_.size(); }

  template <class... I>
  double& operator()(I... idx) {
    static_assert(sizeof...(I) == Rank);
    return a_[flatten(idx...)];
  }
  template <class... I>
  double operator()(I... idx) const {
    static_assert(sizeof...(I) == Rank);
    return a_[flatten(idx...)];
  }

  double& flat(std::size_t k) { return a_[k]; }
  double flat(std::size_t k) const { return a_[k]; }

  Tensor& operator+=(const Tensor& o) {
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
    return *this;
  }
  Tensor& operator-=(const Tensor& o) {
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
    return *this;
  }
  Tensor& operator*=(double s) {
    for (double& v : a_) v *= s;
    return *this;
  }
  friend Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
  friend Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
  friend Tensor operator*(double s, Tensor a) { return a *= s; }

  void setZero() { std::fill(a_.begin(), a_.end(), 0.0); }

  double maxAbs() const {
    double m = 0.0;
    for (double v : a_) m = std::max(m, std::abs(v));
    return m;
  }
  double normSq() const {
    double s = 0.0;
    for (double v : a_) s += v * v;
    return s;
  }
  double norm() const { return std::sqrt(normSq()); }

 private:
  static std::size_t sizeFor(int n) {
    std::size_t s = 1;
    for (int r = 0; r < Rank; ++r) s *= static_cast<std::size_t>(n);
    return s;
  }
  template <class... I>
  std::size_t flatten(I... idx) const {
    std::size_t f = 0;
    ((f = f * static_cast<std::size_t>(n_) + static_cast<std::size_t>(idx)), ...);
    return f;
  }

  int n_ = 0;
  std::vector<double> a_;
};

/// Copy of the sub-tensor at first index = i (contiguous block).
template <int R>
Tensor<R - 1> sliceFirst(const Tensor<R>& t, int i) {
  Tensor<R - 1> out(t.dim());
  const std::size_t b = out.size();
  for (std::size_t k = 0; k < b; ++k) out.flat(k) = t.flat(i * b + k);
  return out;
}

template <int R>
void setSliceFirst(Tensor<R>& t, int i, const Tensor<R - 1>& s) {
  const std::size_t b = s.size();
  for (std::size_t k = 0; k < b; ++k) t.flat(i * b + k) = s.flat(k);
}

using Tensor2 = Tensor<2>;
using Tensor3 = Tensor<3>;
using Tensor4 = Tensor<4>;
using Tensor5 = Tensor<5>;
using Tensor6 = Tensor<6>;
using Tensor7 = Tensor<7>;

}  // namespace holoflow
