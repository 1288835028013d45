#include "gft/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gft/error.hpp"

namespace gft {

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_size(shape_)) {
    throw ValidationError("tensor data size " + std::to_string(data_.size()) + " does not match shape " +
                          shape_to_string(shape_));
  }
}

Tensor Tensor::from(std::initializer_list<double> values) {
  return Tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_size(shape) != data_.size()) {
    throw ValidationError("cannot reshape " + shape_to_string(shape_) + " to " + shape_to_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

namespace tensor {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ValidationError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                          shape_to_string(b.shape()));
  }
}

namespace {

template <class F>
Tensor binary(const Tensor& a, const Tensor& b, const char* name, F f) {
  require_same_shape(a, b, name);
  Tensor out(a.shape());
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  for (std::size_t i = 0, n = a.size(); i < n; ++i) po[i] = f(pa[i], pb[i]);
  return out;
}

template <class F>
Tensor unary(const Tensor& a, F f) {
  Tensor out(a.shape());
  const double* pa = a.data();
  double* po = out.data();
  for (std::size_t i = 0, n = a.size(); i < n; ++i) po[i] = f(pa[i]);
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(a, b, "add", [](double x, double y) { return x + y; });
}
Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(a, b, "sub", [](double x, double y) { return x - y; });
}
Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(a, b, "mul", [](double x, double y) { return x * y; });
}
Tensor div(const Tensor& a, const Tensor& b) {
  return binary(a, b, "div", [](double x, double y) { return x / y; });
}
Tensor neg(const Tensor& a) {
  return unary(a, [](double x) { return -x; });
}
Tensor scale(const Tensor& a, double s) {
  return unary(a, [s](double x) { return x * s; });
}
Tensor add_scalar(const Tensor& a, double s) {
  return unary(a, [s](double x) { return x + s; });
}
Tensor exp(const Tensor& a) {
  return unary(a, [](double x) { return std::exp(x); });
}

double max_abs(const Tensor& a) {
  double m = 0.0;
  for (double v : a.values()) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  return s;
}

double mean(const Tensor& a) { return a.empty() ? 0.0 : sum(a) / static_cast<double>(a.size()); }

Tensor affine(const Tensor& w, const Tensor& b, const Tensor& x) {
  if (w.rank() != 2 || x.rank() != 2 || b.rank() != 1 || w.dim(1) != x.dim(0) || b.dim(0) != w.dim(0)) {
    throw ValidationError("affine: incompatible shapes W" + shape_to_string(w.shape()) + " b" +
                          shape_to_string(b.shape()) + " X" + shape_to_string(x.shape()));
  }
  const std::size_t out_dim = w.dim(0), in_dim = w.dim(1), n = x.dim(1);
  Tensor y({out_dim, n});
  for (std::size_t o = 0; o < out_dim; ++o) {
    double* yr = y.data() + o * n;
    std::fill(yr, yr + n, b[o]);
    for (std::size_t i = 0; i < in_dim; ++i) {
      const double wi = w.at(o, i);
      if (wi == 0.0) continue;
      const double* xr = x.data() + i * n;
      for (std::size_t t = 0; t < n; ++t) yr[t] += wi * xr[t];
    }
  }
  return y;
}

}  // namespace tensor
}  // namespace gft
