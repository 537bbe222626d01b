// Copyright 2026 The plgat Authors.
// SPDX-License-Identifier: Apache-2.0

// Dense 2-D numerics with tape-based reverse-mode differentiation.
//
// A Tape owns every value computed during one forward pass. Operations append
// a node holding the forward value and, when any input is tracked, a closure
// that pushes the output gradient back to the inputs. backward() replays the
// closures in reverse append order, so each node is visited exactly once.
//
// Only scalar (1x1) operands broadcast. Every op checks shapes up front and
// rejects non-finite results with NumericError.

#ifndef PLGAT_TENSOR_HPP_
#define PLGAT_TENSOR_HPP_

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <string_view>
#include <vector>

#include "plgat/matrix.hpp"

namespace plgat::ad {

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Matrix &value() const;
  std::size_t rows() const { return value().rows; }
  std::size_t cols() const { return value().cols; }
  // The single entry of a 1x1 value.
  double item() const;
  bool requires_grad() const;

  Tape *tape() const { return tape_; }
  std::size_t id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape *tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape *tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  // Receives the gradient of the node's output; accumulates into inputs via
  // Tape::accumulate.
  using Backward = std::function<void(Tape &, const Matrix &out_grad)>;

  Tape() = default;
  Tape(const Tape &) = delete;
  Tape &operator=(const Tape &) = delete;

  Var constant(Matrix value);
  // A leaf whose gradient backward() computes.
  Var variable(Matrix value);

  // Appends an op node. `backward` is dropped when no input is tracked.
  Var record(std::string_view op, Matrix value, std::initializer_list<Var> inputs,
             Backward backward);

  void backward(Var loss);

  // Gradient of the last backward() with respect to `v`; zeros when `v` did
  // not influence the loss.
  Matrix grad(Var v) const;

  // Adds g to v's gradient; no-op for untracked nodes.
  void accumulate(Var v, const Matrix &g);

  const Matrix &value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Backward backward;
  };

  std::vector<Node> nodes_;
};

// Linear algebra and elementwise arithmetic. add/sub/mul/div broadcast a 1x1
// operand against the other; otherwise shapes must match exactly.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var neg(Var a);
Var transpose(Var a);

// Structural ops.
Var concat_cols(Var a, Var b);
Var concat_rows(Var a, Var b);
Var row_slice(Var a, std::size_t begin, std::size_t end);
// out(r, c) = a(r, c) * g(r, 0), with g an Nx1 column.
Var scale_rows(Var a, Var g);

struct ScatterEntry {
  std::size_t source = 0;  // row of the Kx1 source column
  std::size_t row = 0;
  std::size_t col = 0;
};
// rows x cols matrix with out(row, col) += values(source, 0) per entry.
Var scatter(Var values, const std::vector<ScatterEntry> &entries,
            std::size_t rows, std::size_t cols);

// Reductions.
Var sum(Var a);       // 1x1
Var mean(Var a);      // 1x1
Var row_sum(Var a);   // Nx1
Var row_mean(Var a);  // Nx1
Var col_sum(Var a);   // 1xC, sums over rows

// Elementwise nonlinearities.
Var relu(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var exp(Var a);
Var square(Var a);

// Row-wise softmax over entries where mask != 0, with max subtraction.
// Masked-out entries are exactly 0; a row with an empty mask is all zeros.
Var masked_row_softmax(Var a, const Matrix &mask);

// Numerically stable logistic function on a plain double.
double sigmoid(double x);

}  // namespace plgat::ad

#endif  // PLGAT_TENSOR_HPP_
