// Copyright 2026 The egoasl Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <algorithm>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "asl/common.hpp"

namespace asl {

// Dense row-major n-d array. Rank is small (<= 4 in practice: batch,
// planes, height, width). Arithmetic precision is a template parameter so
// the gradient-check suites can run the same kernels at 64 bit.
template <class T>
class TensorT {
 public:
  TensorT() = default;

  explicit TensorT(std::vector<int> dims) : dims_(std::move(dims)) {
    v_.assign(numel_of(dims_), T(0));
  }

  TensorT(std::vector<int> dims, std::vector<T> values)
      : dims_(std::move(dims)), v_(std::move(values)) {
    if (static_cast<size_t>(numel_of(dims_)) != v_.size())
      throw ShapeError("tensor: value count does not match dims");
  }

  static TensorT scalar(T value) { return TensorT({1}, {value}); }

  int rank() const { return static_cast<int>(dims_.size()); }
  const std::vector<int>& dims() const { return dims_; }
  int dim(int i) const { return dims_[static_cast<size_t>(i)]; }
  int64_t numel() const { return static_cast<int64_t>(v_.size()); }
  bool empty() const { return v_.empty(); }

  T* data() { return v_.data(); }
  const T* data() const { return v_.data(); }
  std::vector<T>& values() { return v_; }
  const std::vector<T>& values() const { return v_; }

  T& operator[](int64_t i) { return v_[static_cast<size_t>(i)]; }
  T operator[](int64_t i) const { return v_[static_cast<size_t>(i)]; }

  // 2d/3d/4d accessors; no bounds checks in release builds.
  T& at2(int i, int j) { return v_[size_t(i) * dims_[1] + j]; }
  T at2(int i, int j) const { return v_[size_t(i) * dims_[1] + j]; }
  T& at3(int p, int i, int j) {
    return v_[(size_t(p) * dims_[1] + i) * dims_[2] + j];
  }
  T at3(int p, int i, int j) const {
    return v_[(size_t(p) * dims_[1] + i) * dims_[2] + j];
  }
  T& at4(int n, int p, int i, int j) {
    return v_[((size_t(n) * dims_[1] + p) * dims_[2] + i) * dims_[3] + j];
  }
  T at4(int n, int p, int i, int j) const {
    return v_[((size_t(n) * dims_[1] + p) * dims_[2] + i) * dims_[3] + j];
  }

  void fill(T value) { std::fill(v_.begin(), v_.end(), value); }

  TensorT reshaped(std::vector<int> new_dims) const {
    if (numel_of(new_dims) != numel())
      throw ShapeError("reshape: element count mismatch (" + shape_str() +
                       " -> " + shape_str_of(new_dims) + ")");
    return TensorT(std::move(new_dims), v_);
  }

  bool same_shape(const TensorT& o) const { return dims_ == o.dims_; }

  bool all_finite() const {
    for (T x : v_)
      if (!std::isfinite(static_cast<double>(x))) return false;
    return true;
  }

  std::string shape_str() const { return shape_str_of(dims_); }

  static std::string shape_str_of(const std::vector<int>& d) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < d.size(); ++i) os << (i ? "," : "") << d[i];
    os << "]";
    return os.str();
  }

  static int64_t numel_of(const std::vector<int>& d) {
    int64_t n = 1;
    for (int x : d) {
      if (x < 0) throw ShapeError("tensor: negative dimension");
      n *= x;
    }
    return n;
  }

  template <class U>
  TensorT<U> cast() const {
    std::vector<U> out(v_.size());
    for (size_t i = 0; i < v_.size(); ++i) out[i] = static_cast<U>(v_[i]);
    return TensorT<U>(dims_, std::move(out));
  }

 private:
  std::vector<int> dims_;
  std::vector<T> v_;
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

}  // namespace asl
