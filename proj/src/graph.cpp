#include "ctxmatch/graph.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "ctxmatch/errors.hpp"
#include "ctxmatch/kernels.hpp"

namespace ctxmatch {

namespace k = kernels::parallel;

namespace {

void require(bool ok, const std::string& op, const std::string& what) {
  if (!ok) throw DimensionError(op + ": " + what);
}

std::string two(const Shape& a, const Shape& b) { return shape_str(a) + " vs " + shape_str(b); }

void add_into(std::vector<double>& dst, std::span<const double> src) {
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
}

}  // namespace

// ---------------------------------------------------------------------------
// plumbing

const Graph::Node& Graph::node(Var v) const {
  if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw UsageError("variable does not belong to this graph");
  }
  return nodes_[static_cast<std::size_t>(v.id)];
}

Graph::Node& Graph::node(Var v) {
  return const_cast<Node&>(static_cast<const Graph*>(this)->node(v));
}

std::vector<double>& Graph::grad_buf(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.empty()) n.grad.assign(val(n).size(), 0.0);
  return n.grad;
}

bool Graph::any_needs_grad(std::initializer_list<Var> vars) const {
  if (mode_ != Mode::training) return false;
  return std::any_of(vars.begin(), vars.end(), [&](Var v) { return node(v).needs_grad; });
}

Var Graph::push(const char* op, Tensor value, bool needs_grad,
                std::function<void(Graph&, Node&)> back) {
  if (!value.all_finite()) throw NumericError(std::string("non-finite value produced by ") + op);
  Node n;
  n.op = op;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  if (needs_grad) n.backward = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size() - 1)};
}

const Tensor& Graph::value(Var v) const { return val(node(v)); }

double Graph::scalar(Var v) const {
  const Tensor& t = value(v);
  if (t.size() != 1) throw UsageError("expected a scalar, got " + shape_str(t.shape()));
  return t[0];
}

std::span<const double> Graph::grad(Var v) const { return node(v).grad; }

void Graph::backward(Var loss) {
  if (mode_ != Mode::training) throw UsageError("backward() on an inference graph");
  Node& root = node(loss);
  if (val(root).size() != 1) {
    throw UsageError("backward() needs a scalar loss, got " + shape_str(val(root).shape()));
  }
  if (!root.needs_grad) return;
  grad_buf(loss.id)[0] += 1.0;
  for (std::size_t i = static_cast<std::size_t>(loss.id) + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.empty()) continue;
    for (double g : n.grad) {
      if (!std::isfinite(g)) throw NumericError(std::string("non-finite gradient at ") + n.op);
    }
    n.backward(*this, n);
  }
}

// ---------------------------------------------------------------------------
// leaves

Var Graph::param(const Tensor& t) {
  Node n;
  n.op = "param";
  n.ref = &t;
  if (mode_ == Mode::training && t.requires_grad()) {
    // Parameters are mutable objects owned by the model; the tape only
    // writes to their gradient buffer.
    n.sink = const_cast<Tensor*>(&t);
    n.needs_grad = true;
    n.backward = [](Graph&, Node& self) {
      auto g = self.sink->grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    };
  }
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size() - 1)};
}

Var Graph::constant(Tensor t) { return push("constant", std::move(t), false, nullptr); }

Var Graph::embedding(const Tensor& table, std::span<const int> ids) {
  if (table.rank() != 2) throw DimensionError("embedding: table must be rank 2, got " + shape_str(table.shape()));
  if (ids.empty()) throw DimensionError("embedding: empty id sequence");
  const std::size_t rows = table.dim(0), d = table.dim(1);
  Tensor out({ids.size(), d});
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0 || static_cast<std::size_t>(ids[r]) >= rows) {
      throw DimensionError("embedding: id " + std::to_string(ids[r]) + " outside table of " +
                           std::to_string(rows) + " rows");
    }
    const auto src = table.data().subspan(static_cast<std::size_t>(ids[r]) * d, d);
    std::copy(src.begin(), src.end(), out.data().begin() + static_cast<std::ptrdiff_t>(r * d));
  }
  const bool ng = mode_ == Mode::training && table.requires_grad();
  Tensor* sink = const_cast<Tensor*>(&table);
  return push("embedding", std::move(out), ng,
              [sink, d, ids = std::vector<int>(ids.begin(), ids.end())](Graph&, Node& self) {
                auto g = sink->grad();
                for (std::size_t r = 0; r < ids.size(); ++r) {
                  if (ids[r] == 0) continue;  // PAD
                  double* dst = &g[static_cast<std::size_t>(ids[r]) * d];
                  const double* src = &self.grad[r * d];
                  for (std::size_t c = 0; c < d; ++c) dst[c] += src[c];
                }
              });
}

// ---------------------------------------------------------------------------
// convolution and pooling

Var Graph::conv1d(Var x, Var filters, Var bias) {
  const Tensor &xv = value(x), &fv = value(filters), &bv = value(bias);
  const std::string op = "conv1d";
  require(xv.rank() == 2, op, "input must be [len x dim], got " + shape_str(xv.shape()));
  require(fv.rank() == 3, op, "filters must be [window x dim x channels], got " + shape_str(fv.shape()));
  require(fv.dim(1) == xv.dim(1), op, "embedding dim mismatch " + two(xv.shape(), fv.shape()));
  require(bv.rank() == 1 && bv.dim(0) == fv.dim(2), op, "bias mismatch " + two(fv.shape(), bv.shape()));
  require(fv.dim(0) <= xv.dim(0), op, "window longer than input " + two(xv.shape(), fv.shape()));
  const kernels::Conv2dGeom g{xv.dim(0), 1, xv.dim(1), fv.dim(0), 1, fv.dim(2)};
  Tensor out({g.out_h(), g.cout});
  k::conv2d_forward(g, xv.data(), fv.data(), bv.data(), out.data());
  return push("conv1d", std::move(out), any_needs_grad({x, filters, bias}),
              [g, x, filters, bias](Graph& gr, Node& self) {
                if (gr.node(x).needs_grad) k::conv2d_backward_input(g, self.grad, gr.value(filters).data(), gr.grad_buf(x.id));
                if (gr.node(filters).needs_grad) k::conv2d_backward_filter(g, gr.value(x).data(), self.grad, gr.grad_buf(filters.id));
                if (gr.node(bias).needs_grad) k::conv2d_backward_bias(g, self.grad, gr.grad_buf(bias.id));
              });
}

Var Graph::conv2d(Var x, Var filters, Var bias) {
  const Tensor &xv = value(x), &fv = value(filters), &bv = value(bias);
  const std::string op = "conv2d";
  require(xv.rank() == 3, op, "input must be [h x w x cin], got " + shape_str(xv.shape()));
  require(fv.rank() == 4, op, "filters must be [kh x kw x cin x cout], got " + shape_str(fv.shape()));
  require(fv.dim(2) == xv.dim(2), op, "channel mismatch " + two(xv.shape(), fv.shape()));
  require(bv.rank() == 1 && bv.dim(0) == fv.dim(3), op, "bias mismatch " + two(fv.shape(), bv.shape()));
  require(fv.dim(0) <= xv.dim(0) && fv.dim(1) <= xv.dim(1), op,
          "kernel larger than input " + two(xv.shape(), fv.shape()));
  const kernels::Conv2dGeom g{xv.dim(0), xv.dim(1), xv.dim(2), fv.dim(0), fv.dim(1), fv.dim(3)};
  Tensor out({g.out_h(), g.out_w(), g.cout});
  k::conv2d_forward(g, xv.data(), fv.data(), bv.data(), out.data());
  return push("conv2d", std::move(out), any_needs_grad({x, filters, bias}),
              [g, x, filters, bias](Graph& gr, Node& self) {
                if (gr.node(x).needs_grad) k::conv2d_backward_input(g, self.grad, gr.value(filters).data(), gr.grad_buf(x.id));
                if (gr.node(filters).needs_grad) k::conv2d_backward_filter(g, gr.value(x).data(), self.grad, gr.grad_buf(filters.id));
                if (gr.node(bias).needs_grad) k::conv2d_backward_bias(g, self.grad, gr.grad_buf(bias.id));
              });
}

Var Graph::maxpool2d(Var x, PoolSpec spec) {
  const Tensor& xv = value(x);
  const std::string op = "maxpool2d";
  require(xv.rank() == 3, op, "input must be [h x w x c], got " + shape_str(xv.shape()));
  require(spec.sh > 0 && spec.sw > 0 && spec.ph > 0 && spec.pw > 0, op, "zero window or stride");
  require(spec.ph <= xv.dim(0) && spec.pw <= xv.dim(1), op,
          "window " + std::to_string(spec.ph) + "x" + std::to_string(spec.pw) +
              " larger than input " + shape_str(xv.shape()) + " (empty output)");
  const kernels::Pool2dGeom g{xv.dim(0), xv.dim(1), xv.dim(2), spec.ph, spec.pw, spec.sh, spec.sw};
  Tensor out({g.out_h(), g.out_w(), g.c});
  std::vector<std::size_t> argmax(out.size());
  k::maxpool2d_forward(g, xv.data(), out.data(), argmax);
  return push("maxpool2d", std::move(out), any_needs_grad({x}),
              [x, c = g.c, argmax = std::move(argmax)](Graph& gr, Node& self) {
                k::maxpool_backward(c, self.grad, argmax, gr.grad_buf(x.id));
              });
}

Var Graph::adaptive_maxpool2d(Var x, std::size_t out_h, std::size_t out_w) {
  const Tensor& xv = value(x);
  const std::string op = "adaptive_maxpool2d";
  require(xv.rank() == 3, op, "input must be [h x w x c], got " + shape_str(xv.shape()));
  require(out_h >= 1 && out_w >= 1 && out_h <= xv.dim(0) && out_w <= xv.dim(1), op,
          "grid " + std::to_string(out_h) + "x" + std::to_string(out_w) + " does not fit " +
              shape_str(xv.shape()));
  const kernels::AdaptivePoolGeom g{xv.dim(0), xv.dim(1), xv.dim(2), out_h, out_w};
  Tensor out({out_h, out_w, g.c});
  std::vector<std::size_t> argmax(out.size());
  k::adaptive_maxpool2d_forward(g, xv.data(), out.data(), argmax);
  return push("adaptive_maxpool2d", std::move(out), any_needs_grad({x}),
              [x, c = g.c, argmax = std::move(argmax)](Graph& gr, Node& self) {
                k::maxpool_backward(c, self.grad, argmax, gr.grad_buf(x.id));
              });
}

Var Graph::max_over_time(Var x) {
  const Tensor& xv = value(x);
  require(xv.rank() == 2, "max_over_time", "input must be [len x c], got " + shape_str(xv.shape()));
  const kernels::AdaptivePoolGeom g{xv.dim(0), 1, xv.dim(1), 1, 1};
  Tensor out({g.c});
  std::vector<std::size_t> argmax(out.size());
  k::adaptive_maxpool2d_forward(g, xv.data(), out.data(), argmax);
  return push("max_over_time", std::move(out), any_needs_grad({x}),
              [x, c = g.c, argmax = std::move(argmax)](Graph& gr, Node& self) {
                k::maxpool_backward(c, self.grad, argmax, gr.grad_buf(x.id));
              });
}

// ---------------------------------------------------------------------------
// elementwise and structural

Var Graph::add(Var a, Var b) {
  const Tensor &av = value(a), &bv = value(b);
  require(av.shape() == bv.shape(), "add", "shape mismatch " + two(av.shape(), bv.shape()));
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return push("add", std::move(out), any_needs_grad({a, b}), [a, b](Graph& g, Node& self) {
    if (g.node(a).needs_grad) add_into(g.grad_buf(a.id), self.grad);
    if (g.node(b).needs_grad) add_into(g.grad_buf(b.id), self.grad);
  });
}

Var Graph::sub(Var a, Var b) {
  const Tensor &av = value(a), &bv = value(b);
  require(av.shape() == bv.shape(), "sub", "shape mismatch " + two(av.shape(), bv.shape()));
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return push("sub", std::move(out), any_needs_grad({a, b}), [a, b](Graph& g, Node& self) {
    if (g.node(a).needs_grad) add_into(g.grad_buf(a.id), self.grad);
    if (g.node(b).needs_grad) {
      auto& gb = g.grad_buf(b.id);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] -= self.grad[i];
    }
  });
}

Var Graph::mul(Var a, Var b) {
  const Tensor &av = value(a), &bv = value(b);
  require(av.shape() == bv.shape(), "mul", "shape mismatch " + two(av.shape(), bv.shape()));
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return push("mul", std::move(out), any_needs_grad({a, b}), [a, b](Graph& g, Node& self) {
    if (g.node(a).needs_grad) {
      auto& ga = g.grad_buf(a.id);
      const auto bv = g.value(b).data();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i] * bv[i];
    }
    if (g.node(b).needs_grad) {
      auto& gb = g.grad_buf(b.id);
      const auto av = g.value(a).data();
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += self.grad[i] * av[i];
    }
  });
}

Var Graph::scale(Var a, double c) {
  const Tensor& av = value(a);
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * c;
  return push("scale", std::move(out), any_needs_grad({a}), [a, c](Graph& g, Node& self) {
    auto& ga = g.grad_buf(a.id);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += self.grad[i] * c;
  });
}

Var Graph::concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  const Shape& first = value(parts[0]).shape();
  require(axis < first.size(), "concat", "axis " + std::to_string(axis) + " out of range for " + shape_str(first));
  Shape out_shape = first;
  out_shape[axis] = 0;
  bool ng = false;
  for (Var p : parts) {
    const Shape& s = value(p).shape();
    bool ok = s.size() == first.size();
    for (std::size_t d = 0; ok && d < s.size(); ++d) ok = d == axis || s[d] == first[d];
    require(ok, "concat", "incompatible shapes " + two(first, s) + " on axis " + std::to_string(axis));
    out_shape[axis] += s[axis];
    ng = ng || any_needs_grad({p});
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= first[d];
  for (std::size_t d = axis + 1; d < first.size(); ++d) inner *= first[d];
  Tensor out(out_shape);
  const std::size_t out_row = out_shape[axis] * inner;
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (Var p : parts) {
    const Tensor& pv = value(p);
    const std::size_t chunk = pv.dim(axis) * inner;
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(pv.data().begin() + static_cast<std::ptrdiff_t>(o * chunk), chunk,
                  out.data().begin() + static_cast<std::ptrdiff_t>(o * out_row + off));
    }
    offsets.push_back(off);
    off += chunk;
  }
  return push("concat", std::move(out), ng,
              [ids = std::vector<Var>(parts.begin(), parts.end()), offsets, outer, out_row](Graph& g, Node& self) {
                for (std::size_t p = 0; p < ids.size(); ++p) {
                  if (!g.node(ids[p]).needs_grad) continue;
                  auto& gp = g.grad_buf(ids[p].id);
                  const std::size_t chunk = gp.size() / outer;
                  for (std::size_t o = 0; o < outer; ++o) {
                    for (std::size_t t = 0; t < chunk; ++t) gp[o * chunk + t] += self.grad[o * out_row + offsets[p] + t];
                  }
                }
              });
}

Var Graph::slice(Var x, std::size_t axis, std::size_t begin, std::size_t length) {
  const Tensor& xv = value(x);
  require(axis < xv.rank(), "slice", "axis out of range for " + shape_str(xv.shape()));
  require(length > 0 && begin + length <= xv.dim(axis), "slice",
          "range [" + std::to_string(begin) + ", " + std::to_string(begin + length) + ") outside " + shape_str(xv.shape()));
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= xv.dim(d);
  for (std::size_t d = axis + 1; d < xv.rank(); ++d) inner *= xv.dim(d);
  Shape s = xv.shape();
  s[axis] = length;
  Tensor out(s);
  const std::size_t in_row = xv.dim(axis) * inner, chunk = length * inner, off = begin * inner;
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(xv.data().begin() + static_cast<std::ptrdiff_t>(o * in_row + off), chunk,
                out.data().begin() + static_cast<std::ptrdiff_t>(o * chunk));
  }
  return push("slice", std::move(out), any_needs_grad({x}), [x, outer, in_row, chunk, off](Graph& g, Node& self) {
    auto& gx = g.grad_buf(x.id);
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t t = 0; t < chunk; ++t) gx[o * in_row + off + t] += self.grad[o * chunk + t];
    }
  });
}

Var Graph::reshape(Var x, Shape shape) {
  Tensor out = value(x).reshaped(std::move(shape));
  return push("reshape", std::move(out), any_needs_grad({x}),
              [x](Graph& g, Node& self) { add_into(g.grad_buf(x.id), self.grad); });
}

Var Graph::affine(Var x, Var w, Var b) {
  const Tensor &xv = value(x), &wv = value(w), &bv = value(b);
  const std::string op = "affine";
  require(xv.rank() == 1, op, "input must be a vector, got " + shape_str(xv.shape()));
  require(wv.rank() == 2 && wv.dim(0) == xv.dim(0), op, "inner dims disagree " + two(xv.shape(), wv.shape()));
  require(bv.rank() == 1 && bv.dim(0) == wv.dim(1), op, "bias mismatch " + two(wv.shape(), bv.shape()));
  const std::size_t din = wv.dim(0), dout = wv.dim(1);
  Tensor out({dout});
  k::affine_forward(din, dout, xv.data(), wv.data(), bv.data(), out.data());
  return push("affine", std::move(out), any_needs_grad({x, w, b}), [x, w, b, din, dout](Graph& g, Node& self) {
    std::span<double> gx, gw, gb;
    if (g.node(x).needs_grad) gx = g.grad_buf(x.id);
    if (g.node(w).needs_grad) gw = g.grad_buf(w.id);
    if (g.node(b).needs_grad) gb = g.grad_buf(b.id);
    k::affine_backward(din, dout, g.value(x).data(), g.value(w).data(), self.grad, gx, gw, gb);
  });
}

// ---------------------------------------------------------------------------
// activations

Var Graph::relu(Var x) {
  const Tensor& xv = value(x);
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  return push("relu", std::move(out), any_needs_grad({x}), [x](Graph& g, Node& self) {
    auto& gx = g.grad_buf(x.id);
    const auto xv = g.value(x).data();
    for (std::size_t i = 0; i < gx.size(); ++i) {
      if (xv[i] > 0.0) gx[i] += self.grad[i];
    }
  });
}

Var Graph::sigmoid(Var x) {
  const Tensor& xv = value(x);
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = xv[i];
    if (v >= 0.0) {
      out[i] = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      out[i] = e / (1.0 + e);
    }
  }
  const int self_id = static_cast<int>(nodes_.size());
  return push("sigmoid", std::move(out), any_needs_grad({x}), [x, self_id](Graph& g, Node& self) {
    auto& gx = g.grad_buf(x.id);
    const auto y = g.value(Var{self_id}).data();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i] * y[i] * (1.0 - y[i]);
  });
}

namespace {

// Log-softmax over the last axis, one row at a time.
void log_softmax_rows(std::span<const double> in, std::span<double> out, std::size_t row) {
  for (std::size_t r = 0; r * row < in.size(); ++r) {
    const double* x = &in[r * row];
    double* y = &out[r * row];
    const double mx = *std::max_element(x, x + row);
    double s = 0.0;
    for (std::size_t j = 0; j < row; ++j) s += std::exp(x[j] - mx);
    const double ls = std::log(s);
    for (std::size_t j = 0; j < row; ++j) y[j] = (x[j] - mx) - ls;
  }
}

}  // namespace

Var Graph::softmax(Var x) {
  const Tensor& xv = value(x);
  const std::size_t row = xv.shape().back();
  Tensor out(xv.shape());
  for (std::size_t r = 0; r * row < out.size(); ++r) {
    const double* x = &xv.data()[r * row];
    double* y = &out.data()[r * row];
    const double mx = *std::max_element(x, x + row);
    double s = 0.0;
    for (std::size_t j = 0; j < row; ++j) s += (y[j] = std::exp(x[j] - mx));
    for (std::size_t j = 0; j < row; ++j) y[j] /= s;
  }
  const int self_id = static_cast<int>(nodes_.size());
  return push("softmax", std::move(out), any_needs_grad({x}), [x, row, self_id](Graph& g, Node& self) {
    auto& gx = g.grad_buf(x.id);
    const auto y = g.value(Var{self_id}).data();
    for (std::size_t r = 0; r * row < gx.size(); ++r) {
      double dot = 0.0;
      for (std::size_t j = 0; j < row; ++j) dot += self.grad[r * row + j] * y[r * row + j];
      for (std::size_t j = 0; j < row; ++j) {
        gx[r * row + j] += y[r * row + j] * (self.grad[r * row + j] - dot);
      }
    }
  });
}

Var Graph::log_softmax(Var x) {
  const Tensor& xv = value(x);
  const std::size_t row = xv.shape().back();
  Tensor out(xv.shape());
  log_softmax_rows(xv.data(), out.data(), row);
  const int self_id = static_cast<int>(nodes_.size());
  return push("log_softmax", std::move(out), any_needs_grad({x}), [x, row, self_id](Graph& g, Node& self) {
    auto& gx = g.grad_buf(x.id);
    const auto y = g.value(Var{self_id}).data();
    for (std::size_t r = 0; r * row < gx.size(); ++r) {
      double s = 0.0;
      for (std::size_t j = 0; j < row; ++j) s += self.grad[r * row + j];
      for (std::size_t j = 0; j < row; ++j) {
        gx[r * row + j] += self.grad[r * row + j] - std::exp(y[r * row + j]) * s;
      }
    }
  });
}

Var Graph::exp(Var x) {
  const Tensor& xv = value(x);
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(xv[i]);
  const int self_id = static_cast<int>(nodes_.size());
  return push("exp", std::move(out), any_needs_grad({x}), [x, self_id](Graph& g, Node& self) {
    auto& gx = g.grad_buf(x.id);
    const auto y = g.value(Var{self_id}).data();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i] * y[i];
  });
}

Var Graph::dot_interaction(Var x1, Var x2) {
  const Tensor &a = value(x1), &b = value(x2);
  const std::string op = "dot_interaction";
  require(a.rank() == 2 && b.rank() == 2, op, "inputs must be matrices " + two(a.shape(), b.shape()));
  require(a.dim(1) == b.dim(1), op, "embedding dims differ " + two(a.shape(), b.shape()));
  const std::size_t r = a.dim(0), c = b.dim(0), d = a.dim(1);
  Tensor out({r, c});
  k::gemm_nt(r, c, d, a.data(), b.data(), out.data());
  return push("dot_interaction", std::move(out), any_needs_grad({x1, x2}), [x1, x2, r, c, d](Graph& g, Node& self) {
    if (g.node(x1).needs_grad) k::gemm_nn_acc(r, c, d, self.grad, g.value(x2).data(), g.grad_buf(x1.id));
    if (g.node(x2).needs_grad) k::gemm_tn_acc(r, c, d, self.grad, g.value(x1).data(), g.grad_buf(x2.id));
  });
}

// ---------------------------------------------------------------------------
// reductions and gradient control

Var Graph::sum(Var x) {
  double s = 0.0;
  for (double v : value(x).data()) s += v;
  return push("sum", Tensor::scalar(s), any_needs_grad({x}), [x](Graph& g, Node& self) {
    for (auto& v : g.grad_buf(x.id)) v += self.grad[0];
  });
}

Var Graph::sum_squares(Var x) {
  double s = 0.0;
  for (double v : value(x).data()) s += v * v;
  return push("sum_squares", Tensor::scalar(s), any_needs_grad({x}), [x](Graph& g, Node& self) {
    auto& gx = g.grad_buf(x.id);
    const auto xv = g.value(x).data();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += 2.0 * xv[i] * self.grad[0];
  });
}

Var Graph::grad_reverse(Var x, double factor) {
  Tensor out = value(x);
  out.set_requires_grad(false);
  return push("grad_reverse", std::move(out), any_needs_grad({x}), [x, factor](Graph& g, Node& self) {
    auto& gx = g.grad_buf(x.id);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] -= factor * self.grad[i];
  });
}

Var Graph::detach(Var x) {
  Tensor out = value(x);
  out.set_requires_grad(false);
  return push("detach", std::move(out), false, nullptr);
}

}  // namespace ctxmatch
