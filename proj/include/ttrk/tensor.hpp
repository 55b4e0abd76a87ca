#pragma once

#include <cassert>
#include <cstddef>
#include <numeric>
#include <vector>

namespace ttrk {

// Dense row-major tensor, rank 1 or 2.
template <class T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> data;

  Tensor() = default;

  static Tensor zeros(std::vector<int> shape) {
    Tensor t;
    t.shape = std::move(shape);
    t.data.assign(t.size_from_shape(), T(0));
    return t;
  }
  static Tensor vector(std::vector<T> values) {
    Tensor t;
    t.shape = {static_cast<int>(values.size())};
    t.data = std::move(values);
    return t;
  }
  static Tensor matrix(int rows, int cols, std::vector<T> values) {
    Tensor t;
    t.shape = {rows, cols};
    t.data = std::move(values);
    assert(t.data.size() == static_cast<std::size_t>(rows) * cols);
    return t;
  }

  std::size_t size_from_shape() const {
    std::size_t s = 1;
    for (int d : shape) s *= static_cast<std::size_t>(d);
    return s;
  }
  std::size_t size() const { return data.size(); }

  int rows() const { return shape.empty() ? 0 : shape[0]; }
  int cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  T& operator()(int i) { return data[static_cast<std::size_t>(i)]; }
  T operator()(int i) const { return data[static_cast<std::size_t>(i)]; }
  T& operator()(int i, int j) {
    return data[static_cast<std::size_t>(i) * cols() + j];
  }
  T operator()(int i, int j) const {
    return data[static_cast<std::size_t>(i) * cols() + j];
  }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }

  template <class U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.shape = shape;
    out.data.reserve(data.size());
    for (T v : data) out.data.push_back(static_cast<U>(v));
    return out;
  }
};

}  // namespace ttrk
