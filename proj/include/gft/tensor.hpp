#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace gft {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

/// Dense row-major array of 64-bit reals with a dynamic shape.
///
/// Physics fields are rank 3 (levels x rows x cols); latents are rank 2
/// (features x tokens). The last axis is always contiguous.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double v) { return Tensor({1}, std::vector<double>{v}); }
  static Tensor from(std::initializer_list<double> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  std::vector<double>& storage() noexcept { return data_; }
  const std::vector<double>& storage() const noexcept { return data_; }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
  double& at(std::size_t k, std::size_t i, std::size_t j) { return data_[(k * shape_[1] + i) * shape_[2] + j]; }
  double at(std::size_t k, std::size_t i, std::size_t j) const {
    return data_[(k * shape_[1] + i) * shape_[2] + j];
  }

  /// Same data, new shape with equal element count.
  Tensor reshaped(Shape shape) const;

  bool same_shape(const Tensor& other) const noexcept { return shape_ == other.shape_; }
  bool all_finite() const noexcept;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// Elementwise kernels shared by the plain and taped execution paths so both
/// produce bit-identical values.
namespace tensor {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor neg(const Tensor& a);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor exp(const Tensor& a);

double max_abs(const Tensor& a);
double max_abs_diff(const Tensor& a, const Tensor& b);
double sum(const Tensor& a);
double mean(const Tensor& a);

/// Y = W X + b for W (out x in), X (in x n), b (out).
Tensor affine(const Tensor& w, const Tensor& b, const Tensor& x);

}  // namespace tensor
}  // namespace gft
