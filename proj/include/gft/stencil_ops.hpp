#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "gft/grid_state.hpp"
#include "gft/tensor.hpp"

namespace gft {

enum class Axis { x, y, p };

enum class IntegralMode {
  unit,      // plain cumulative sum, as in the reference code
  weighted,  // each term multiplied by its level spacing in Pa
};

/// Five-point fourth-order first-derivative stencil, applied as a correlation.
/// x uses [1, -8, 0, 8, -1]; y and p use the reference code's reversed
/// orientation [-1, 8, 0, -8, 1].
struct Stencil5 {
  std::array<double, 5> coeffs;
  double divisor = 12.0;
  Axis axis;

  static Stencil5 for_axis(Axis axis);
};

/// Upper-triangular ones matrix, optionally with per-position spacing
/// weights: entry (i, j) for i <= j is w[i] when right-multiplying and w[j]
/// when left-multiplying.
class CumulativeIntegralMatrix {
 public:
  explicit CumulativeIntegralMatrix(std::size_t n);
  CumulativeIntegralMatrix(std::size_t n, std::vector<double> weights);

  std::size_t size() const noexcept { return n_; }
  Tensor dense() const;

  /// x (m x n) times M: out[r][j] = sum_{i <= j} w[i] x[r][i].
  Tensor right_multiply(const Tensor& x) const;
  /// M times x (n x m): out[i][c] = sum_{j >= i} w[j] x[j][c].
  Tensor left_multiply(const Tensor& x) const;

 private:
  std::size_t n_;
  std::vector<double> weights_;
};

/// d/dx along columns with circular padding; field is H x W or N x H x W.
/// Divides by 12, then by pixel_x of each row.
Tensor diff_x(const Tensor& field, const GridGeometry& geom);
/// d/dy (northward) along rows with two-row edge-block padding.
Tensor diff_y(const Tensor& field, const GridGeometry& geom);
/// d/dp along levels of a P x H x W field with two-level edge-block padding.
/// P in {3, 4} falls back to second-order three-point differences.
Tensor diff_p(const Tensor& field, const GridGeometry& geom);
/// Cumulative integral from each level to the last (highest pressure) level.
Tensor integrate_p(const Tensor& field, const GridGeometry& geom, IntegralMode mode = IntegralMode::weighted);

// Transposes of the linear operators above, used by reverse-mode accumulation.
Tensor diff_x_adjoint(const Tensor& grad, const GridGeometry& geom);
Tensor diff_y_adjoint(const Tensor& grad, const GridGeometry& geom);
Tensor diff_p_adjoint(const Tensor& grad, const GridGeometry& geom);
Tensor integrate_p_adjoint(const Tensor& grad, const GridGeometry& geom, IntegralMode mode = IntegralMode::weighted);

/// Loop-based reference for diff_x/diff_y/diff_p: explicit index arithmetic,
/// no padded copies. Exists to cross-check the padded-correlation path.
Tensor naive_oracle_diff(const Tensor& field, Axis axis, const GridGeometry& geom);

}  // namespace gft
