#pragma once

// Define-by-run tape with reverse-mode differentiation.
//
// A Graph is built fresh for every forward pass. Each op appends one node
// whose inputs are earlier nodes, and backward() walks the tape in exact
// reverse append order. Parameters enter the tape through param(); during
// backward their gradients are accumulated into Tensor::grad() of the
// original tensor, so the caller zeroes gradients between steps.
//
// Apart from bias-add there is no broadcasting: mismatched shapes throw
// DimensionError naming both shapes.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ctxmatch/tensor.hpp"

namespace ctxmatch {

struct Var {
  int id = -1;
};

struct PoolSpec {
  std::size_t ph = 2, pw = 2, sh = 2, sw = 2;
};

class Graph {
 public:
  enum class Mode { training, inference };

  explicit Graph(Mode mode = Mode::training) : mode_(mode) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Mode mode() const { return mode_; }
  std::size_t size() const { return nodes_.size(); }

  // Leaves.
  Var param(const Tensor& t);
  Var constant(Tensor t);
  // Rows of `table` selected by `ids`; row 0 (PAD) never receives gradient.
  Var embedding(const Tensor& table, std::span<const int> ids);

  // Convolutions are valid (no padding), stride 1.
  Var conv1d(Var x, Var filters, Var bias);
  Var conv2d(Var x, Var filters, Var bias);
  Var maxpool2d(Var x, PoolSpec spec);
  Var adaptive_maxpool2d(Var x, std::size_t out_h, std::size_t out_w);
  // [len x c] -> [c]
  Var max_over_time(Var x);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double c);
  Var concat(std::span<const Var> parts, std::size_t axis);
  Var slice(Var x, std::size_t axis, std::size_t begin, std::size_t length);
  Var reshape(Var x, Shape shape);
  Var affine(Var x, Var w, Var b);

  Var relu(Var x);
  Var sigmoid(Var x);
  Var softmax(Var x);
  Var log_softmax(Var x);
  Var exp(Var x);
  Var dot_interaction(Var x1, Var x2);

  Var sum(Var x);
  Var sum_squares(Var x);

  // Identity forward; multiplies the incoming gradient by -factor.
  Var grad_reverse(Var x, double factor);
  // Value copy cut off from the tape.
  Var detach(Var x);

  const Tensor& value(Var v) const;
  double scalar(Var v) const;
  // Gradient w.r.t. a node after backward(); empty if none flowed there.
  std::span<const double> grad(Var v) const;

  void backward(Var loss);

 private:
  struct Node {
    const char* op;
    Tensor value;
    const Tensor* ref = nullptr;  // parameter leaves alias their tensor
    Tensor* sink = nullptr;       // where a parameter leaf deposits its gradient
    bool needs_grad = false;
    std::vector<double> grad;
    std::function<void(Graph&, Node&)> backward;
  };

  const Node& node(Var v) const;
  Node& node(Var v);
  const Tensor& val(const Node& n) const { return n.ref ? *n.ref : n.value; }
  std::vector<double>& grad_buf(int id);
  Var push(const char* op, Tensor value, bool needs_grad, std::function<void(Graph&, Node&)> back);
  bool any_needs_grad(std::initializer_list<Var> vars) const;

  Mode mode_;
  std::vector<Node> nodes_;
};

}  // namespace ctxmatch
