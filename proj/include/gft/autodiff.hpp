#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "gft/grid_state.hpp"
#include "gft/stencil_ops.hpp"
#include "gft/tensor.hpp"

// Minimal tape-based reverse-mode accumulation over whole-tensor operations.
//
// Every operation records its value and a closure that pushes the incoming
// adjoint to its parents. `Tape::backward` walks the nodes in reverse
// creation order, which is a valid topological order by construction.
// Nodes that do not depend on any leaf with requires_grad are never visited.

namespace gft::ad {

struct Var {
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
  std::size_t id = npos;

  bool valid() const noexcept { return id != npos; }
};

class Tape;
using BackwardFn = std::function<void(Tape&, std::size_t self)>;

class Tape {
 public:
  Var leaf(Tensor value, bool requires_grad = true);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  /// Accumulated adjoint; a zero tensor if nothing reached the node.
  Tensor grad(Var v) const;

  /// Seeds d(output)/d(output) = 1; `output` must hold a single value.
  void backward(Var output);

  std::size_t size() const noexcept { return nodes_.size(); }

  /// Hash of every piecewise-constant branch decision taken during the
  /// forward pass (rectifier masks, condensation switch). Two forward passes
  /// with equal signatures are on the same smooth piece.
  std::uint64_t branch_signature() const noexcept { return branch_hash_; }
  void note_branch(std::span<const unsigned char> mask);

  // Used by operation implementations.
  Var record(Tensor value, std::initializer_list<Var> parents, BackwardFn backward);
  const Tensor& upstream(std::size_t self) const { return nodes_[self].grad; }
  void accumulate(Var target, const Tensor& g);
  Tensor& grad_slot(Var target);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
  std::uint64_t branch_hash_ = 1469598103934665603ull;
};

// Elementwise.
Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);
Var div(Tape& t, Var a, Var b);
Var neg(Tape& t, Var a);
Var scale(Tape& t, Var a, double s);
Var add_scalar(Tape& t, Var a, double s);
Var mul_const(Tape& t, Var a, const Tensor& c);
Var add_const(Tape& t, Var a, const Tensor& c);
Var exp(Tape& t, Var a);
Var sin(Tape& t, Var a);
Var cos(Tape& t, Var a);
Var relu(Tape& t, Var a);
Var gelu(Tape& t, Var a);

// Grid operators; `geom` must outlive the backward pass.
Var diff_x(Tape& t, Var a, const GridGeometry& geom);
Var diff_y(Tape& t, Var a, const GridGeometry& geom);
Var diff_p(Tape& t, Var a, const GridGeometry& geom);
Var integrate_p(Tape& t, Var a, const GridGeometry& geom, IntegralMode mode);

// Structure.
/// W (out x in) X (in x n) + b (out), b broadcast over columns.
Var affine(Tape& t, Var w, Var b, Var x);
/// Multiplies every entry of x by the single value held in s.
Var scale_by(Tape& t, Var s, Var x);
/// Single entry i of a as a size-1 tensor.
Var select(Tape& t, Var a, std::size_t i);
Var reshape(Tape& t, Var a, Shape shape);
/// out[i] = a[index[i]] for a flat index map; out has the given shape.
Var gather(Tape& t, Var a, std::vector<std::size_t> index, Shape shape);
/// Flat concatenation of all inputs (rank 1 result).
Var concat(Tape& t, const std::vector<Var>& parts);
/// Stack A (a x n) over B (b x n).
Var concat_rows(Tape& t, Var a, Var b);
/// Repeat a vector of length m into an m x n matrix.
Var broadcast_cols(Tape& t, Var v, std::size_t n);

// Reductions (size-1 results).
Var mean_square(Tape& t, Var a);
Var sum(Tape& t, Var a);

}  // namespace gft::ad
