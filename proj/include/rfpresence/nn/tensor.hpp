#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

namespace rfpresence::nn {

/// Row-major f64 tensor. Batched activations are N x H x W x C or N x F.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s, double fill = 0.0)
      : shape(std::move(s)), data(Count(shape), fill) {}

  static std::size_t Count(const std::vector<std::size_t> &s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
  }

  [[nodiscard]] std::size_t size() const { return data.size(); }
  [[nodiscard]] std::size_t rank() const { return shape.size(); }
  [[nodiscard]] std::size_t dim(std::size_t axis) const { return shape[axis]; }
  /// Product of all dims after the first.
  [[nodiscard]] std::size_t PerSample() const { return shape.empty() ? 0 : size() / shape[0]; }
  [[nodiscard]] bool SameShape(const Tensor &o) const { return shape == o.shape; }

  void Fill(double v) { std::fill(data.begin(), data.end(), v); }

  bool operator==(const Tensor &) const = default;
};

std::string ShapeString(const std::vector<std::size_t> &shape);

/// Trainable tensor with its gradient accumulator.
struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
  bool l2{false};  // included in the weight penalty
};

} // namespace rfpresence::nn
