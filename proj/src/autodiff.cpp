#include "gft/autodiff.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "gft/error.hpp"

namespace gft::ad {

Var Tape::leaf(Tensor value, bool requires_grad) {
  nodes_.push_back(Node{std::move(value), {}, {}, requires_grad});
  return Var{nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::initializer_list<Var> parents, BackwardFn backward) {
  bool needs = false;
  for (Var p : parents) needs = needs || nodes_.at(p.id).requires_grad;
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(backward) : BackwardFn{}, needs});
  return Var{nodes_.size() - 1};
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id);
  return n.grad.empty() ? Tensor(n.value.shape()) : n.grad;
}

Tensor& Tape::grad_slot(Var target) {
  Node& n = nodes_.at(target.id);
  if (n.grad.empty()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

void Tape::accumulate(Var target, const Tensor& g) {
  if (!nodes_.at(target.id).requires_grad) return;
  Tensor& slot = grad_slot(target);
  double* s = slot.data();
  const double* src = g.data();
  for (std::size_t i = 0, n = slot.size(); i < n; ++i) s[i] += src[i];
}

void Tape::backward(Var output) {
  if (nodes_.at(output.id).value.size() != 1) throw ValidationError("backward needs a scalar output");
  for (auto& n : nodes_) n.grad = Tensor();
  grad_slot(output)[0] = 1.0;
  for (std::size_t i = output.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.backward || n.grad.empty()) continue;
    n.backward(*this, i);
  }
}

void Tape::note_branch(std::span<const unsigned char> mask) {
  for (unsigned char m : mask) {
    branch_hash_ ^= m;
    branch_hash_ *= 1099511628211ull;
  }
}

namespace {

bool wants(const Tape& t, Var v) { return t.requires_grad(v); }

}  // namespace

Var add(Tape& t, Var a, Var b) {
  return t.record(tensor::add(t.value(a), t.value(b)), {a, b}, [a, b](Tape& tp, std::size_t self) {
    const Tensor& g = tp.upstream(self);
    tp.accumulate(a, g);
    tp.accumulate(b, g);
  });
}

Var sub(Tape& t, Var a, Var b) {
  return t.record(tensor::sub(t.value(a), t.value(b)), {a, b}, [a, b](Tape& tp, std::size_t self) {
    const Tensor& g = tp.upstream(self);
    tp.accumulate(a, g);
    if (wants(tp, b)) tp.accumulate(b, tensor::neg(g));
  });
}

Var mul(Tape& t, Var a, Var b) {
  return t.record(tensor::mul(t.value(a), t.value(b)), {a, b}, [a, b](Tape& tp, std::size_t self) {
    const Tensor& g = tp.upstream(self);
    if (wants(tp, a)) tp.accumulate(a, tensor::mul(g, tp.value(b)));
    if (wants(tp, b)) tp.accumulate(b, tensor::mul(g, tp.value(a)));
  });
}

Var div(Tape& t, Var a, Var b) {
  return t.record(tensor::div(t.value(a), t.value(b)), {a, b}, [a, b](Tape& tp, std::size_t self) {
    const Tensor& g = tp.upstream(self);
    const Tensor& vb = tp.value(b);
    if (wants(tp, a)) tp.accumulate(a, tensor::div(g, vb));
    if (wants(tp, b)) {
      // d(a/b)/db = -(a/b)/b
      const Tensor& q = tp.value(Var{self});
      Tensor gb(g.shape());
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] = -g[i] * q[i] / vb[i];
      tp.accumulate(b, gb);
    }
  });
}

Var neg(Tape& t, Var a) {
  return t.record(tensor::neg(t.value(a)), {a},
                  [a](Tape& tp, std::size_t self) { tp.accumulate(a, tensor::neg(tp.upstream(self))); });
}

Var scale(Tape& t, Var a, double s) {
  return t.record(tensor::scale(t.value(a), s), {a},
                  [a, s](Tape& tp, std::size_t self) { tp.accumulate(a, tensor::scale(tp.upstream(self), s)); });
}

Var add_scalar(Tape& t, Var a, double s) {
  return t.record(tensor::add_scalar(t.value(a), s), {a},
                  [a](Tape& tp, std::size_t self) { tp.accumulate(a, tp.upstream(self)); });
}

Var mul_const(Tape& t, Var a, const Tensor& c) {
  return t.record(tensor::mul(t.value(a), c), {a},
                  [a, c](Tape& tp, std::size_t self) { tp.accumulate(a, tensor::mul(tp.upstream(self), c)); });
}

Var add_const(Tape& t, Var a, const Tensor& c) {
  return t.record(tensor::add(t.value(a), c), {a},
                  [a](Tape& tp, std::size_t self) { tp.accumulate(a, tp.upstream(self)); });
}

Var exp(Tape& t, Var a) {
  return t.record(tensor::exp(t.value(a)), {a}, [a](Tape& tp, std::size_t self) {
    tp.accumulate(a, tensor::mul(tp.upstream(self), tp.value(Var{self})));
  });
}

Var sin(Tape& t, Var a) {
  const Tensor& x = t.value(a);
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::sin(x[i]);
  return t.record(std::move(y), {a}, [a](Tape& tp, std::size_t self) {
    const Tensor& g = tp.upstream(self);
    const Tensor& xv = tp.value(a);
    Tensor ga(g.shape());
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] * std::cos(xv[i]);
    tp.accumulate(a, ga);
  });
}

Var cos(Tape& t, Var a) {
  const Tensor& x = t.value(a);
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::cos(x[i]);
  return t.record(std::move(y), {a}, [a](Tape& tp, std::size_t self) {
    const Tensor& g = tp.upstream(self);
    const Tensor& xv = tp.value(a);
    Tensor ga(g.shape());
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] = -g[i] * std::sin(xv[i]);
    tp.accumulate(a, ga);
  });
}

Var relu(Tape& t, Var a) {
  const Tensor& x = t.value(a);
  Tensor y(x.shape());
  std::vector<unsigned char> mask(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mask[i] = x[i] > 0.0;
    y[i] = mask[i] ? x[i] : 0.0;
  }
  t.note_branch(mask);
  return t.record(std::move(y), {a}, [a](Tape& tp, std::size_t self) {
    const Tensor& g = tp.upstream(self);
    const Tensor& xv = tp.value(a);
    Tensor ga(g.shape());
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] = xv[i] > 0.0 ? g[i] : 0.0;
    tp.accumulate(a, ga);
  });
}

Var gelu(Tape& t, Var a) {
  const Tensor& x = t.value(a);
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = 0.5 * x[i] * (1.0 + std::erf(x[i] / std::numbers::sqrt2));
  return t.record(std::move(y), {a}, [a](Tape& tp, std::size_t self) {
    const Tensor& g = tp.upstream(self);
    const Tensor& xv = tp.value(a);
    const double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
    Tensor ga(g.shape());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double v = xv[i];
      const double d = 0.5 * (1.0 + std::erf(v / std::numbers::sqrt2)) + v * std::exp(-0.5 * v * v) * inv_sqrt_2pi;
      ga[i] = g[i] * d;
    }
    tp.accumulate(a, ga);
  });
}

Var diff_x(Tape& t, Var a, const GridGeometry& geom) {
  const GridGeometry* g = &geom;
  return t.record(gft::diff_x(t.value(a), geom), {a},
                  [a, g](Tape& tp, std::size_t self) { tp.accumulate(a, diff_x_adjoint(tp.upstream(self), *g)); });
}

Var diff_y(Tape& t, Var a, const GridGeometry& geom) {
  const GridGeometry* g = &geom;
  return t.record(gft::diff_y(t.value(a), geom), {a},
                  [a, g](Tape& tp, std::size_t self) { tp.accumulate(a, diff_y_adjoint(tp.upstream(self), *g)); });
}

Var diff_p(Tape& t, Var a, const GridGeometry& geom) {
  const GridGeometry* g = &geom;
  return t.record(gft::diff_p(t.value(a), geom), {a},
                  [a, g](Tape& tp, std::size_t self) { tp.accumulate(a, diff_p_adjoint(tp.upstream(self), *g)); });
}

Var integrate_p(Tape& t, Var a, const GridGeometry& geom, IntegralMode mode) {
  const GridGeometry* g = &geom;
  return t.record(gft::integrate_p(t.value(a), geom, mode), {a}, [a, g, mode](Tape& tp, std::size_t self) {
    tp.accumulate(a, integrate_p_adjoint(tp.upstream(self), *g, mode));
  });
}

Var affine(Tape& t, Var w, Var b, Var x) {
  return t.record(tensor::affine(t.value(w), t.value(b), t.value(x)), {w, b, x},
                  [w, b, x](Tape& tp, std::size_t self) {
                    const Tensor& g = tp.upstream(self);  // out x n
                    const Tensor& wv = tp.value(w);       // out x in
                    const Tensor& xv = tp.value(x);       // in x n
                    const std::size_t out_dim = wv.dim(0), in_dim = wv.dim(1), n = xv.dim(1);
                    if (wants(tp, w)) {
                      Tensor& gw = tp.grad_slot(w);
                      for (std::size_t o = 0; o < out_dim; ++o) {
                        const double* gr = g.data() + o * n;
                        for (std::size_t i = 0; i < in_dim; ++i) {
                          const double* xr = xv.data() + i * n;
                          double acc = 0.0;
                          for (std::size_t k = 0; k < n; ++k) acc += gr[k] * xr[k];
                          gw.at(o, i) += acc;
                        }
                      }
                    }
                    if (wants(tp, b)) {
                      Tensor& gb = tp.grad_slot(b);
                      for (std::size_t o = 0; o < out_dim; ++o) {
                        const double* gr = g.data() + o * n;
                        double acc = 0.0;
                        for (std::size_t k = 0; k < n; ++k) acc += gr[k];
                        gb[o] += acc;
                      }
                    }
                    if (wants(tp, x)) {
                      Tensor& gx = tp.grad_slot(x);
                      for (std::size_t o = 0; o < out_dim; ++o) {
                        const double* gr = g.data() + o * n;
                        for (std::size_t i = 0; i < in_dim; ++i) {
                          const double wi = wv.at(o, i);
                          double* xr = gx.data() + i * n;
                          for (std::size_t k = 0; k < n; ++k) xr[k] += wi * gr[k];
                        }
                      }
                    }
                  });
}

Var scale_by(Tape& t, Var s, Var x) {
  if (t.value(s).size() != 1) throw ValidationError("scale_by: scale must hold one value");
  return t.record(tensor::scale(t.value(x), t.value(s)[0]), {s, x}, [s, x](Tape& tp, std::size_t self) {
    const Tensor& g = tp.upstream(self);
    if (wants(tp, x)) tp.accumulate(x, tensor::scale(g, tp.value(s)[0]));
    if (wants(tp, s)) {
      const Tensor& xv = tp.value(x);
      double acc = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * xv[i];
      tp.grad_slot(s)[0] += acc;
    }
  });
}

Var select(Tape& t, Var a, std::size_t i) {
  if (i >= t.value(a).size()) throw ValidationError("select: index out of range");
  return t.record(Tensor::scalar(t.value(a)[i]), {a},
                  [a, i](Tape& tp, std::size_t self) { tp.grad_slot(a)[i] += tp.upstream(self)[0]; });
}

Var reshape(Tape& t, Var a, Shape shape) {
  return t.record(t.value(a).reshaped(shape), {a}, [a](Tape& tp, std::size_t self) {
    const Tensor& g = tp.upstream(self);
    Tensor& ga = tp.grad_slot(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var gather(Tape& t, Var a, std::vector<std::size_t> index, Shape shape) {
  const Tensor& x = t.value(a);
  if (index.size() != shape_size(shape)) throw ValidationError("gather: index count does not match shape");
  Tensor y(std::move(shape));
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= x.size()) throw ValidationError("gather: index out of range");
    y[i] = x[index[i]];
  }
  return t.record(std::move(y), {a}, [a, idx = std::move(index)](Tape& tp, std::size_t self) {
    const Tensor& g = tp.upstream(self);
    Tensor& ga = tp.grad_slot(a);
    for (std::size_t i = 0; i < idx.size(); ++i) ga[idx[i]] += g[i];
  });
}

Var concat(Tape& t, const std::vector<Var>& parts) {
  std::size_t total = 0;
  for (Var p : parts) total += t.value(p).size();
  Tensor y({total});
  std::size_t off = 0;
  bool needs = false;
  for (Var p : parts) {
    const Tensor& v = t.value(p);
    std::copy(v.data(), v.data() + v.size(), y.data() + off);
    off += v.size();
    needs = needs || t.requires_grad(p);
  }
  // record() takes a fixed parent list; fold the variable-length case by
  // checking requires_grad here and passing the first part as representative.
  auto fn = [parts](Tape& tp, std::size_t self) {
    const Tensor& g = tp.upstream(self);
    std::size_t o = 0;
    for (Var p : parts) {
      const std::size_t n = tp.value(p).size();
      if (tp.requires_grad(p)) {
        Tensor& gp = tp.grad_slot(p);
        for (std::size_t i = 0; i < n; ++i) gp[i] += g[o + i];
      }
      o += n;
    }
  };
  if (!needs) return t.constant(std::move(y));
  Var first_needed = parts.front();
  for (Var p : parts) {
    if (t.requires_grad(p)) {
      first_needed = p;
      break;
    }
  }
  return t.record(std::move(y), {first_needed}, fn);
}

Var concat_rows(Tape& t, Var a, Var b) {
  const Tensor& va = t.value(a);
  const Tensor& vb = t.value(b);
  if (va.rank() != 2 || vb.rank() != 2 || va.dim(1) != vb.dim(1)) {
    throw ValidationError("concat_rows: incompatible shapes " + shape_to_string(va.shape()) + " and " +
                          shape_to_string(vb.shape()));
  }
  Tensor y({va.dim(0) + vb.dim(0), va.dim(1)});
  std::copy(va.data(), va.data() + va.size(), y.data());
  std::copy(vb.data(), vb.data() + vb.size(), y.data() + va.size());
  const std::size_t split = va.size();
  return t.record(std::move(y), {a, b}, [a, b, split](Tape& tp, std::size_t self) {
    const Tensor& g = tp.upstream(self);
    if (wants(tp, a)) {
      Tensor& ga = tp.grad_slot(a);
      for (std::size_t i = 0; i < split; ++i) ga[i] += g[i];
    }
    if (wants(tp, b)) {
      Tensor& gb = tp.grad_slot(b);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[split + i];
    }
  });
}

Var broadcast_cols(Tape& t, Var v, std::size_t n) {
  const Tensor& x = t.value(v);
  const std::size_t m = x.size();
  Tensor y({m, n});
  for (std::size_t i = 0; i < m; ++i) std::fill(y.data() + i * n, y.data() + (i + 1) * n, x[i]);
  return t.record(std::move(y), {v}, [v, m, n](Tape& tp, std::size_t self) {
    const Tensor& g = tp.upstream(self);
    Tensor& gv = tp.grad_slot(v);
    for (std::size_t i = 0; i < m; ++i) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += g[i * n + k];
      gv[i] += acc;
    }
  });
}

Var mean_square(Tape& t, Var a) {
  const Tensor& x = t.value(a);
  double acc = 0.0;
  for (double v : x.values()) acc += v * v;
  const double n = static_cast<double>(x.size());
  return t.record(Tensor::scalar(acc / n), {a}, [a, n](Tape& tp, std::size_t self) {
    const double g = tp.upstream(self)[0];
    tp.accumulate(a, tensor::scale(tp.value(a), 2.0 * g / n));
  });
}

Var sum(Tape& t, Var a) {
  return t.record(Tensor::scalar(tensor::sum(t.value(a))), {a}, [a](Tape& tp, std::size_t self) {
    const double g = tp.upstream(self)[0];
    Tensor& ga = tp.grad_slot(a);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
  });
}

}  // namespace gft::ad
