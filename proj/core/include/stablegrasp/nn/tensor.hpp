#pragma once

#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace sg::nn {

/// Dense row-major float32 tensor. Value semantics, shape fixed at
/// construction (reshape produces a new view-copy of the same data).
struct Tensor {
  std::vector<int> shape;
  std::vector<float> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(static_cast<size_t>(count(shape)), 0.0f);
  }
  Tensor(std::vector<int> s, std::vector<float> d) : shape(std::move(s)), data(std::move(d)) {
    if (static_cast<size_t>(count(shape)) != data.size())
      throw std::invalid_argument("Tensor: shape " + shape_str(shape) + " does not match " +
                                  std::to_string(data.size()) + " values");
  }

  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
  static Tensor full(std::vector<int> s, float v) {
    Tensor t(std::move(s));
    for (auto& x : t.data) x = v;
    return t;
  }

  int numel() const { return count(shape); }
  int dim(int i) const { return shape.at(static_cast<size_t>(i)); }
  int ndim() const { return static_cast<int>(shape.size()); }
  /// Number of rows when viewed as a 2-D matrix [rows, last_dim].
  int rows() const { return numel() / cols(); }
  /// Size of the last dimension.
  int cols() const {
    if (shape.empty()) throw std::invalid_argument("Tensor: cols() on rank-0 tensor");
    return shape.back();
  }

  float* ptr() { return data.data(); }
  const float* ptr() const { return data.data(); }

  Tensor reshaped(std::vector<int> s) const {
    if (count(s) != numel())
      throw std::invalid_argument("Tensor: cannot reshape " + shape_str(shape) + " to " +
                                  shape_str(s));
    return Tensor(std::move(s), data);
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  bool all_finite() const;

  static int count(const std::vector<int>& s) {
    int n = 1;
    for (int d : s) {
      if (d <= 0) throw std::invalid_argument("Tensor: non-positive extent in " + shape_str(s));
      n *= d;
    }
    return n;
  }
  static std::string shape_str(const std::vector<int>& s);
};

}  // namespace sg::nn
