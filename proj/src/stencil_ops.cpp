#include "gft/stencil_ops.hpp"

#include <algorithm>
#include <string>

#include "gft/error.hpp"

namespace gft {

Stencil5 Stencil5::for_axis(Axis axis) {
  if (axis == Axis::x) return Stencil5{{1.0, -8.0, 0.0, 8.0, -1.0}, 12.0, axis};
  return Stencil5{{-1.0, 8.0, 0.0, -8.0, 1.0}, 12.0, axis};
}

CumulativeIntegralMatrix::CumulativeIntegralMatrix(std::size_t n) : n_(n), weights_(n, 1.0) {}

CumulativeIntegralMatrix::CumulativeIntegralMatrix(std::size_t n, std::vector<double> weights)
    : n_(n), weights_(std::move(weights)) {
  if (weights_.size() != n_) throw ValidationError("integral weights must match the axis length");
}

Tensor CumulativeIntegralMatrix::dense() const {
  Tensor m({n_, n_});
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = i; j < n_; ++j) m.at(i, j) = weights_[i];
  }
  return m;
}

Tensor CumulativeIntegralMatrix::right_multiply(const Tensor& x) const {
  if (x.rank() != 2 || x.dim(1) != n_) throw ValidationError("right_multiply: expected m x " + std::to_string(n_));
  Tensor out(x.shape());
  for (std::size_t r = 0; r < x.dim(0); ++r) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
      acc += weights_[j] * x.at(r, j);
      out.at(r, j) = acc;
    }
  }
  return out;
}

Tensor CumulativeIntegralMatrix::left_multiply(const Tensor& x) const {
  if (x.rank() != 2 || x.dim(0) != n_) throw ValidationError("left_multiply: expected " + std::to_string(n_) + " x m");
  const std::size_t m = x.dim(1);
  Tensor out(x.shape());
  std::vector<double> acc(m, 0.0);
  for (std::size_t i = n_; i-- > 0;) {
    for (std::size_t c = 0; c < m; ++c) {
      acc[c] += weights_[i] * x.at(i, c);
      out.at(i, c) = acc[c];
    }
  }
  return out;
}

namespace {

struct Dims {
  std::size_t n, rows, cols;
};

Dims planar_dims(const Tensor& field, const GridGeometry& geom, const char* op) {
  Dims d{};
  if (field.rank() == 2) {
    d = {1, field.dim(0), field.dim(1)};
  } else if (field.rank() == 3) {
    d = {field.dim(0), field.dim(1), field.dim(2)};
  } else {
    throw ValidationError(std::string(op) + ": expected a rank-2 or rank-3 field, got " +
                          shape_to_string(field.shape()));
  }
  if (d.rows != geom.rows || d.cols != geom.cols) {
    throw ValidationError(std::string(op) + ": field " + shape_to_string(field.shape()) + " does not match a " +
                          std::to_string(geom.rows) + "x" + std::to_string(geom.cols) + " geometry");
  }
  return d;
}

void require_levels(const Tensor& field, const GridGeometry& geom, const char* op) {
  if (field.rank() != 3) throw ValidationError(std::string(op) + ": expected a P x H x W field");
  if (field.dim(0) != geom.levels()) {
    throw ValidationError(std::string(op) + ": field has " + std::to_string(field.dim(0)) +
                          " levels, geometry has " + std::to_string(geom.levels()));
  }
  if (field.dim(1) != geom.rows || field.dim(2) != geom.cols) {
    throw ValidationError(std::string(op) + ": field does not match geometry");
  }
}

// Signed spacing of level k in the orientation of the y/p kernel, which
// differentiates toward decreasing index (decreasing pressure).
double p_divisor(const GridGeometry& geom, std::size_t k) { return -geom.level_spacing[k]; }

// Three-point Lagrange first-derivative weights for P in {3, 4}.
struct ThreePoint {
  std::size_t first;
  std::array<double, 3> w;
};

std::vector<ThreePoint> three_point_weights(const GridGeometry& geom) {
  const std::size_t p = geom.levels();
  std::vector<double> pos(p);
  for (std::size_t k = 0; k < p; ++k) {
    pos[k] = geom.unit_spacing ? static_cast<double>(k) : geom.pressure_hpa[k] * 100.0;
  }
  std::vector<ThreePoint> out(p);
  for (std::size_t k = 0; k < p; ++k) {
    const std::size_t first = k == 0 ? 0 : (k + 1 == p ? p - 3 : k - 1);
    const double a = pos[first], b = pos[first + 1], c = pos[first + 2], x = pos[k];
    out[k].first = first;
    const double w0 = ((x - b) + (x - c)) / ((a - b) * (a - c));
    const double w2 = ((x - a) + (x - b)) / ((c - a) * (c - b));
    out[k].w = {w0, -(w0 + w2), w2};
  }
  return out;
}

Tensor diff_p_low_order(const Tensor& field, const GridGeometry& geom) {
  const auto weights = three_point_weights(geom);
  const std::size_t plane = field.dim(1) * field.dim(2);
  Tensor out(field.shape());
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const auto& tp = weights[k];
    double* o = out.data() + k * plane;
    // Differences against the middle slice keep constants exactly at zero.
    const double* f0 = field.data() + tp.first * plane;
    const double* f1 = f0 + plane;
    const double* f2 = f1 + plane;
    for (std::size_t i = 0; i < plane; ++i) o[i] = tp.w[0] * (f0[i] - f1[i]) + tp.w[2] * (f2[i] - f1[i]);
  }
  return out;
}

Tensor diff_p_low_order_adjoint(const Tensor& grad, const GridGeometry& geom) {
  const auto weights = three_point_weights(geom);
  const std::size_t plane = grad.dim(1) * grad.dim(2);
  Tensor out(grad.shape());
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const auto& tp = weights[k];
    const double* g = grad.data() + k * plane;
    for (std::size_t j = 0; j < 3; ++j) {
      double* dst = out.data() + (tp.first + j) * plane;
      for (std::size_t i = 0; i < plane; ++i) dst[i] += tp.w[j] * g[i];
    }
  }
  return out;
}

// The stencils are antisymmetric with a zero center, so pairing the taps
// makes constant inputs cancel exactly.
inline double apply5(const std::array<double, 5>& c, double a0, double a1, double a3, double a4) {
  return c[0] * (a0 - a4) + c[1] * (a1 - a3);
}

// Source index in the unpadded axis for padded position `q` under two-block
// edge padding [x0, x1, x..., x_{n-2}, x_{n-1}].
std::size_t edge_block_source(std::size_t q, std::size_t n) {
  if (q < 2) return q;
  if (q < n + 2) return q - 2;
  return q - 4;
}

}  // namespace

Tensor diff_x(const Tensor& field, const GridGeometry& geom) {
  const Dims d = planar_dims(field, geom, "diff_x");
  if (d.cols < 5) throw ValidationError("diff_x needs at least 5 columns");
  const auto k = Stencil5::for_axis(Axis::x);
  const std::size_t wp = d.cols + 4;
  std::vector<double> padded(wp);
  Tensor out(field.shape());
  for (std::size_t s = 0; s < d.n; ++s) {
    for (std::size_t r = 0; r < d.rows; ++r) {
      const double* row = field.data() + (s * d.rows + r) * d.cols;
      std::copy(row + d.cols - 2, row + d.cols, padded.begin());
      std::copy(row, row + d.cols, padded.begin() + 2);
      std::copy(row, row + 2, padded.begin() + 2 + d.cols);
      double* o = out.data() + (s * d.rows + r) * d.cols;
      const double px = geom.pixel_x[r];
      for (std::size_t j = 0; j < d.cols; ++j) {
        const double acc = apply5(k.coeffs, padded[j], padded[j + 1], padded[j + 3], padded[j + 4]);
        o[j] = acc / k.divisor / px;
      }
    }
  }
  return out;
}

Tensor diff_y(const Tensor& field, const GridGeometry& geom) {
  const Dims d = planar_dims(field, geom, "diff_y");
  if (d.rows < 5) throw ValidationError("diff_y needs at least 5 rows");
  const auto k = Stencil5::for_axis(Axis::y);
  const std::size_t plane = d.rows * d.cols;
  std::vector<double> padded((d.rows + 4) * d.cols);
  Tensor out(field.shape());
  for (std::size_t s = 0; s < d.n; ++s) {
    const double* src = field.data() + s * plane;
    std::copy(src, src + 2 * d.cols, padded.begin());
    std::copy(src, src + plane, padded.begin() + 2 * d.cols);
    std::copy(src + plane - 2 * d.cols, src + plane, padded.begin() + 2 * d.cols + plane);
    double* o = out.data() + s * plane;
    for (std::size_t r = 0; r < d.rows; ++r) {
      for (std::size_t c = 0; c < d.cols; ++c) {
        const auto at = [&](std::size_t t) { return padded[(r + t) * d.cols + c]; };
        const double acc = apply5(k.coeffs, at(0), at(1), at(3), at(4));
        o[r * d.cols + c] = acc / k.divisor / geom.pixel_y;
      }
    }
  }
  return out;
}

Tensor diff_p(const Tensor& field, const GridGeometry& geom) {
  require_levels(field, geom, "diff_p");
  const std::size_t p = field.dim(0);
  if (p < 3) throw ValidationError("diff_p needs at least 3 levels");
  if (p < 5) return diff_p_low_order(field, geom);
  const auto k = Stencil5::for_axis(Axis::p);
  const std::size_t plane = field.dim(1) * field.dim(2);
  std::vector<double> padded((p + 4) * plane);
  const double* src = field.data();
  std::copy(src, src + 2 * plane, padded.begin());
  std::copy(src, src + p * plane, padded.begin() + 2 * plane);
  std::copy(src + (p - 2) * plane, src + p * plane, padded.begin() + (p + 2) * plane);
  Tensor out(field.shape());
  for (std::size_t lev = 0; lev < p; ++lev) {
    double* o = out.data() + lev * plane;
    const double dp = p_divisor(geom, lev);
    for (std::size_t i = 0; i < plane; ++i) {
      const auto at = [&](std::size_t t) { return padded[(lev + t) * plane + i]; };
      const double acc = apply5(k.coeffs, at(0), at(1), at(3), at(4));
      o[i] = acc / k.divisor / dp;
    }
  }
  return out;
}

Tensor integrate_p(const Tensor& field, const GridGeometry& geom, IntegralMode mode) {
  require_levels(field, geom, "integrate_p");
  const std::size_t p = field.dim(0);
  const CumulativeIntegralMatrix m = mode == IntegralMode::unit
                                         ? CumulativeIntegralMatrix(p)
                                         : CumulativeIntegralMatrix(p, geom.level_spacing);
  return m.left_multiply(field.reshaped({p, field.dim(1) * field.dim(2)})).reshaped(field.shape());
}

Tensor diff_x_adjoint(const Tensor& grad, const GridGeometry& geom) {
  const Dims d = planar_dims(grad, geom, "diff_x_adjoint");
  const auto k = Stencil5::for_axis(Axis::x);
  Tensor out(grad.shape());
  for (std::size_t s = 0; s < d.n; ++s) {
    for (std::size_t r = 0; r < d.rows; ++r) {
      const double* g = grad.data() + (s * d.rows + r) * d.cols;
      double* o = out.data() + (s * d.rows + r) * d.cols;
      const double inv = 1.0 / (k.divisor * geom.pixel_x[r]);
      for (std::size_t j = 0; j < d.cols; ++j) {
        const double gj = g[j] * inv;
        for (std::size_t t = 0; t < 5; ++t) o[(j + t + d.cols - 2) % d.cols] += k.coeffs[t] * gj;
      }
    }
  }
  return out;
}

Tensor diff_y_adjoint(const Tensor& grad, const GridGeometry& geom) {
  const Dims d = planar_dims(grad, geom, "diff_y_adjoint");
  const auto k = Stencil5::for_axis(Axis::y);
  const double inv = 1.0 / (k.divisor * geom.pixel_y);
  const std::size_t plane = d.rows * d.cols;
  Tensor out(grad.shape());
  for (std::size_t s = 0; s < d.n; ++s) {
    for (std::size_t r = 0; r < d.rows; ++r) {
      for (std::size_t t = 0; t < 5; ++t) {
        const std::size_t src = edge_block_source(r + t, d.rows);
        const double coeff = k.coeffs[t] * inv;
        const double* g = grad.data() + s * plane + r * d.cols;
        double* o = out.data() + s * plane + src * d.cols;
        for (std::size_t c = 0; c < d.cols; ++c) o[c] += coeff * g[c];
      }
    }
  }
  return out;
}

Tensor diff_p_adjoint(const Tensor& grad, const GridGeometry& geom) {
  require_levels(grad, geom, "diff_p_adjoint");
  const std::size_t p = grad.dim(0);
  if (p < 5) return diff_p_low_order_adjoint(grad, geom);
  const auto k = Stencil5::for_axis(Axis::p);
  const std::size_t plane = grad.dim(1) * grad.dim(2);
  Tensor out(grad.shape());
  for (std::size_t lev = 0; lev < p; ++lev) {
    const double inv = 1.0 / (k.divisor * p_divisor(geom, lev));
    const double* g = grad.data() + lev * plane;
    for (std::size_t t = 0; t < 5; ++t) {
      double* o = out.data() + edge_block_source(lev + t, p) * plane;
      const double coeff = k.coeffs[t] * inv;
      for (std::size_t i = 0; i < plane; ++i) o[i] += coeff * g[i];
    }
  }
  return out;
}

Tensor integrate_p_adjoint(const Tensor& grad, const GridGeometry& geom, IntegralMode mode) {
  require_levels(grad, geom, "integrate_p_adjoint");
  const std::size_t p = grad.dim(0);
  const std::size_t plane = grad.dim(1) * grad.dim(2);
  Tensor out(grad.shape());
  std::vector<double> acc(plane, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    const double* g = grad.data() + j * plane;
    const double w = mode == IntegralMode::unit ? 1.0 : geom.level_spacing[j];
    double* o = out.data() + j * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      acc[i] += g[i];
      o[i] = w * acc[i];
    }
  }
  return out;
}

Tensor naive_oracle_diff(const Tensor& field, Axis axis, const GridGeometry& geom) {
  const auto k = Stencil5::for_axis(axis);
  if (axis == Axis::p) {
    require_levels(field, geom, "naive_oracle_diff");
    if (field.dim(0) < 3) throw ValidationError("diff_p needs at least 3 levels");
    if (field.dim(0) < 5) return diff_p_low_order(field, geom);
  } else {
    planar_dims(field, geom, "naive_oracle_diff");
  }
  const std::size_t n = field.rank() == 2 ? 1 : field.dim(0);
  const std::size_t rows = geom.rows, cols = geom.cols;
  if (axis == Axis::x && cols < 5) throw ValidationError("diff_x needs at least 5 columns");
  if (axis == Axis::y && rows < 5) throw ValidationError("diff_y needs at least 5 rows");
  Tensor out(field.shape());
  auto value = [&](std::size_t s, std::size_t r, std::size_t c) { return field[(s * rows + r) * cols + c]; };
  auto clamp_block = [](long q, long len) -> long {
    // Positions before the start map to 0/1, after the end to len-2/len-1.
    if (q < 0) return q + 2;
    if (q >= len) return q - 2;
    return q;
  };
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        double acc = 0.0;
        for (long t = -2; t <= 2; ++t) {
          const double coeff = k.coeffs[static_cast<std::size_t>(t + 2)];
          double v = 0.0;
          switch (axis) {
            case Axis::x: {
              const long w = static_cast<long>(cols);
              v = value(s, r, static_cast<std::size_t>(((static_cast<long>(c) + t) % w + w) % w));
              break;
            }
            case Axis::y:
              v = value(s, static_cast<std::size_t>(clamp_block(static_cast<long>(r) + t, static_cast<long>(rows))), c);
              break;
            case Axis::p:
              v = value(static_cast<std::size_t>(clamp_block(static_cast<long>(s) + t, static_cast<long>(n))), r, c);
              break;
          }
          acc += coeff * v;
        }
        double spacing = 1.0;
        switch (axis) {
          case Axis::x: spacing = geom.pixel_x[r]; break;
          case Axis::y: spacing = geom.pixel_y; break;
          case Axis::p: spacing = -geom.level_spacing[s]; break;
        }
        out[(s * rows + r) * cols + c] = acc / 12.0 / spacing;
      }
    }
  }
  return out;
}

}  // namespace gft
