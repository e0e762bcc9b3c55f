#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vsrprune {

/// Raised when two tensors or layers disagree on extents. No broadcasting
/// exists anywhere in the library, so every mismatch ends up here.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rank-4 extents. Feature maps use (batch, channels, height, width); kernels
/// reuse the same slots as (out, in, kh, kw).
struct Shape {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

/// Dense float tensor, row-major with channels-major inside each batch item.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f);
  Tensor(Shape shape, std::vector<float> data);

  static Tensor zeros(Shape shape) { return Tensor(shape, 0.0f); }
  /// 1×C×1×1 tensor holding a per-channel vector.
  static Tensor vector(std::vector<float> values);
  static Tensor scalar(float value) { return Tensor(Shape{1, 1, 1, 1}, value); }

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  std::span<float> span() { return data_; }
  std::span<const float> span() const { return data_; }
  const std::vector<float>& values() const { return data_; }

  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  std::size_t offset(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) *
               shape_.w +
           x;
  }
  float& at(int n, int c, int y, int x) { return data_[offset(n, c, y, x)]; }
  float at(int n, int c, int y, int x) const {
    return data_[offset(n, c, y, x)];
  }

  /// Pointer to the H×W plane of (n, c).
  float* plane(int n, int c) { return data_.data() + offset(n, c, 0, 0); }
  const float* plane(int n, int c) const {
    return data_.data() + offset(n, c, 0, 0);
  }

  /// Same data, different extents; element count must match.
  Tensor reshaped(Shape shape) const;

  bool all_finite() const;
  bool bitwise_equal(const Tensor& other) const;

 private:
  Shape shape_{0, 0, 0, 0};
  std::vector<float> data_;
};

/// Convolution weights (C_out, C_in, K_h, K_w) with an optional bias.
struct Kernel {
  Tensor weight;
  std::optional<Tensor> bias;

  int out_channels() const { return weight.shape().n; }
  int in_channels() const { return weight.shape().c; }
  int kernel_h() const { return weight.shape().h; }
  int kernel_w() const { return weight.shape().w; }
  std::size_t parameter_count() const {
    return weight.size() + (bias ? bias->size() : 0);
  }
};

float max_abs_diff(const Tensor& a, const Tensor& b);
double sum(const Tensor& t);

}  // namespace vsrprune
