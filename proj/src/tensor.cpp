// Copyright 2026 The plgat Authors.
// SPDX-License-Identifier: Apache-2.0

#include "plgat/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include <fmt/format.h>

#include "plgat/error.hpp"

namespace plgat::ad {

namespace {

Tape &tape_of(Var a) {
  if (a.tape() == nullptr) throw UsageError("operation on an unbound Var");
  return *a.tape();
}

Tape &tape_of(Var a, Var b) {
  if (a.tape() != b.tape()) throw UsageError("operands live on different tapes");
  return tape_of(a);
}

[[noreturn]] void shape_mismatch(std::string_view op, const Matrix &a,
                                 const Matrix &b) {
  throw ShapeError(fmt::format("{}: shape mismatch {} vs {}", op,
                               a.shape_string(), b.shape_string()));
}

bool is_scalar(const Matrix &m) { return m.rows == 1 && m.cols == 1; }

enum class Broadcast { kNone, kLeft, kRight };

// kLeft: `a` is the 1x1 operand; kRight: `b` is.
Broadcast broadcast_of(std::string_view op, const Matrix &a, const Matrix &b) {
  if (a.rows == b.rows && a.cols == b.cols) return Broadcast::kNone;
  if (is_scalar(a)) return Broadcast::kLeft;
  if (is_scalar(b)) return Broadcast::kRight;
  shape_mismatch(op, a, b);
}

double total(const Matrix &m) {
  double s = 0.0;
  for (double v : m.values) s += v;
  return s;
}

template <typename F>
Matrix map(const Matrix &a, F f) {
  Matrix out(a.rows, a.cols);
  for (std::size_t k = 0; k < a.size(); ++k) out.values[k] = f(a.values[k]);
  return out;
}

// Elementwise binary op with scalar broadcasting.
template <typename F>
Matrix zip(Broadcast bc, const Matrix &a, const Matrix &b, F f) {
  switch (bc) {
    case Broadcast::kLeft:
      return map(b, [&](double y) { return f(a.values[0], y); });
    case Broadcast::kRight:
      return map(a, [&](double x) { return f(x, b.values[0]); });
    case Broadcast::kNone:
      break;
  }
  Matrix out(a.rows, a.cols);
  for (std::size_t k = 0; k < a.size(); ++k) {
    out.values[k] = f(a.values[k], b.values[k]);
  }
  return out;
}

// Entry k of `m` viewed at the broadcast output size n.
double expanded(const Matrix &m, std::size_t k, std::size_t n) {
  return m.size() == n ? m.values[k] : m.values[0];
}

// Reduces a full-shape gradient onto an operand that may have broadcast.
Matrix reduce_to(const Matrix &grad, const Matrix &operand) {
  if (operand.rows == grad.rows && operand.cols == grad.cols) return grad;
  return Matrix::scalar(total(grad));
}

Matrix matmul_values(const Matrix &a, const Matrix &b) {
  Matrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    double *orow = out.values.data() + i * out.cols;
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a.values[i * a.cols + k];
      if (aik == 0.0) continue;
      const double *brow = b.values.data() + k * b.cols;
      for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

Matrix transpose_values(const Matrix &a) {
  Matrix out(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
  }
  return out;
}

// a^T b without materializing the transpose.
Matrix matmul_tn(const Matrix &a, const Matrix &b) {
  Matrix out(a.cols, b.cols);
  for (std::size_t k = 0; k < a.rows; ++k) {
    const double *arow = a.values.data() + k * a.cols;
    const double *brow = b.values.data() + k * b.cols;
    for (std::size_t i = 0; i < a.cols; ++i) {
      const double aki = arow[i];
      if (aki == 0.0) continue;
      double *orow = out.values.data() + i * out.cols;
      for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aki * brow[j];
    }
  }
  return out;
}

// a b^T without materializing the transpose.
Matrix matmul_nt(const Matrix &a, const Matrix &b) {
  Matrix out(a.rows, b.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double *arow = a.values.data() + i * a.cols;
    for (std::size_t j = 0; j < b.rows; ++j) {
      const double *brow = b.values.data() + j * b.cols;
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols; ++k) s += arow[k] * brow[k];
      out(i, j) = s;
    }
  }
  return out;
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

const Matrix &Var::value() const {
  if (tape_ == nullptr) throw UsageError("value of an unbound Var");
  return tape_->value(id_);
}

double Var::item() const {
  const Matrix &v = value();
  if (!is_scalar(v)) {
    throw ShapeError(fmt::format("item() on non-scalar {}", v.shape_string()));
  }
  return v.values[0];
}

bool Var::requires_grad() const {
  return tape_ != nullptr && tape_->requires_grad(id_);
}

Var Tape::constant(Matrix value) {
  return record("constant", std::move(value), {}, nullptr);
}

Var Tape::variable(Matrix value) {
  Var v = record("variable", std::move(value), {}, nullptr);
  nodes_[v.id_].requires_grad = true;
  return v;
}

Var Tape::record(std::string_view op, Matrix value,
                 std::initializer_list<Var> inputs, Backward backward) {
  for (double x : value.values) {
    if (!std::isfinite(x)) {
      throw NumericError(fmt::format("{}: non-finite value in output {}", op,
                                     value.shape_string()));
    }
  }
  bool tracked = false;
  for (Var in : inputs) {
    if (in.tape_ != this) throw UsageError("input from a different tape");
    tracked = tracked || nodes_[in.id_].requires_grad;
  }
  Node node;
  node.value = std::move(value);
  node.requires_grad = tracked;
  if (tracked) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Tape::backward(Var loss) {
  if (loss.tape_ != this) throw UsageError("backward: loss from another tape");
  const Node &root = nodes_[loss.id_];
  if (!root.requires_grad) {
    throw UsageError("backward: loss does not depend on any variable");
  }
  if (!is_scalar(root.value)) {
    throw ShapeError(fmt::format("backward: loss must be 1x1, got {}",
                                 root.value.shape_string()));
  }
  for (Node &n : nodes_) n.grad = Matrix();
  nodes_[loss.id_].grad = Matrix::scalar(1.0);
  for (std::size_t id = loss.id_ + 1; id-- > 0;) {
    Node &n = nodes_[id];
    if (n.backward && n.grad.size() != 0) n.backward(*this, n.grad);
  }
}

Matrix Tape::grad(Var v) const {
  const Node &n = nodes_[v.id_];
  if (n.grad.size() == 0) return Matrix(n.value.rows, n.value.cols);
  return n.grad;
}

void Tape::accumulate(Var v, const Matrix &g) {
  Node &n = nodes_[v.id_];
  if (!n.requires_grad) return;
  if (g.rows != n.value.rows || g.cols != n.value.cols) {
    shape_mismatch("accumulate", n.value, g);
  }
  if (n.grad.size() == 0) {
    n.grad = g;
    return;
  }
  for (std::size_t k = 0; k < g.size(); ++k) n.grad.values[k] += g.values[k];
}

Var matmul(Var a, Var b) {
  Tape &t = tape_of(a, b);
  const Matrix &av = a.value();
  const Matrix &bv = b.value();
  if (av.cols != bv.rows) shape_mismatch("matmul", av, bv);
  return t.record("matmul", matmul_values(av, bv), {a, b},
                  [a, b](Tape &t, const Matrix &g) {
                    if (a.requires_grad()) t.accumulate(a, matmul_nt(g, b.value()));
                    if (b.requires_grad()) t.accumulate(b, matmul_tn(a.value(), g));
                  });
}

Var add(Var a, Var b) {
  Tape &t = tape_of(a, b);
  Broadcast bc = broadcast_of("add", a.value(), b.value());
  return t.record("add",
                  zip(bc, a.value(), b.value(),
                      [](double x, double y) { return x + y; }),
                  {a, b}, [a, b](Tape &t, const Matrix &g) {
                    t.accumulate(a, reduce_to(g, a.value()));
                    t.accumulate(b, reduce_to(g, b.value()));
                  });
}

Var sub(Var a, Var b) {
  Tape &t = tape_of(a, b);
  Broadcast bc = broadcast_of("sub", a.value(), b.value());
  return t.record("sub",
                  zip(bc, a.value(), b.value(),
                      [](double x, double y) { return x - y; }),
                  {a, b}, [a, b](Tape &t, const Matrix &g) {
                    t.accumulate(a, reduce_to(g, a.value()));
                    if (b.requires_grad()) {
                      t.accumulate(b, reduce_to(map(g, [](double v) { return -v; }),
                                                b.value()));
                    }
                  });
}

Var mul(Var a, Var b) {
  Tape &t = tape_of(a, b);
  Broadcast bc = broadcast_of("mul", a.value(), b.value());
  return t.record(
      "mul",
      zip(bc, a.value(), b.value(), [](double x, double y) { return x * y; }),
      {a, b}, [a, b](Tape &t, const Matrix &g) {
        const Matrix &av = a.value();
        const Matrix &bv = b.value();
        if (a.requires_grad()) {
          Matrix ga(g.rows, g.cols);
          for (std::size_t k = 0; k < g.size(); ++k) {
            ga.values[k] = g.values[k] * expanded(bv, k, g.size());
          }
          t.accumulate(a, reduce_to(ga, av));
        }
        if (b.requires_grad()) {
          Matrix gb(g.rows, g.cols);
          for (std::size_t k = 0; k < g.size(); ++k) {
            gb.values[k] = g.values[k] * expanded(av, k, g.size());
          }
          t.accumulate(b, reduce_to(gb, bv));
        }
      });
}

Var div(Var a, Var b) {
  Tape &t = tape_of(a, b);
  Broadcast bc = broadcast_of("div", a.value(), b.value());
  for (double y : b.value().values) {
    if (y == 0.0) throw NumericError("div: division by zero");
  }
  return t.record(
      "div",
      zip(bc, a.value(), b.value(), [](double x, double y) { return x / y; }),
      {a, b}, [a, b](Tape &t, const Matrix &g) {
        const Matrix &av = a.value();
        const Matrix &bv = b.value();
        const std::size_t n = g.size();
        if (a.requires_grad()) {
          Matrix ga(g.rows, g.cols);
          for (std::size_t k = 0; k < n; ++k) {
            ga.values[k] = g.values[k] / expanded(bv, k, n);
          }
          t.accumulate(a, reduce_to(ga, av));
        }
        if (b.requires_grad()) {
          Matrix gb(g.rows, g.cols);
          for (std::size_t k = 0; k < n; ++k) {
            const double y = expanded(bv, k, n);
            gb.values[k] = -g.values[k] * expanded(av, k, n) / (y * y);
          }
          t.accumulate(b, reduce_to(gb, bv));
        }
      });
}

Var scale(Var a, double s) {
  Tape &t = tape_of(a);
  return t.record("scale", map(a.value(), [s](double x) { return x * s; }), {a},
                  [a, s](Tape &t, const Matrix &g) {
                    t.accumulate(a, map(g, [s](double v) { return v * s; }));
                  });
}

Var add_scalar(Var a, double s) {
  Tape &t = tape_of(a);
  return t.record("add_scalar", map(a.value(), [s](double x) { return x + s; }),
                  {a}, [a](Tape &t, const Matrix &g) { t.accumulate(a, g); });
}

Var neg(Var a) { return scale(a, -1.0); }

Var transpose(Var a) {
  Tape &t = tape_of(a);
  return t.record("transpose", transpose_values(a.value()), {a},
                  [a](Tape &t, const Matrix &g) {
                    t.accumulate(a, transpose_values(g));
                  });
}

Var concat_cols(Var a, Var b) {
  Tape &t = tape_of(a, b);
  const Matrix &av = a.value();
  const Matrix &bv = b.value();
  if (av.rows != bv.rows) shape_mismatch("concat_cols", av, bv);
  Matrix out(av.rows, av.cols + bv.cols);
  for (std::size_t r = 0; r < av.rows; ++r) {
    std::copy(av.row(r).begin(), av.row(r).end(), out.row(r).begin());
    std::copy(bv.row(r).begin(), bv.row(r).end(),
              out.row(r).begin() + static_cast<std::ptrdiff_t>(av.cols));
  }
  const std::size_t split = av.cols;
  return t.record("concat_cols", std::move(out), {a, b},
                  [a, b, split](Tape &t, const Matrix &g) {
                    Matrix ga(g.rows, split);
                    Matrix gb(g.rows, g.cols - split);
                    for (std::size_t r = 0; r < g.rows; ++r) {
                      auto row = g.row(r);
                      std::copy(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(split),
                                ga.row(r).begin());
                      std::copy(row.begin() + static_cast<std::ptrdiff_t>(split), row.end(),
                                gb.row(r).begin());
                    }
                    t.accumulate(a, ga);
                    t.accumulate(b, gb);
                  });
}

Var concat_rows(Var a, Var b) {
  Tape &t = tape_of(a, b);
  const Matrix &av = a.value();
  const Matrix &bv = b.value();
  if (av.cols != bv.cols) shape_mismatch("concat_rows", av, bv);
  Matrix out(av.rows + bv.rows, av.cols);
  std::copy(av.values.begin(), av.values.end(), out.values.begin());
  std::copy(bv.values.begin(), bv.values.end(),
            out.values.begin() + static_cast<std::ptrdiff_t>(av.size()));
  const std::size_t split = av.size();
  return t.record("concat_rows", std::move(out), {a, b},
                  [a, b, split](Tape &t, const Matrix &g) {
                    const auto mid = g.values.begin() + static_cast<std::ptrdiff_t>(split);
                    t.accumulate(a, Matrix(a.rows(), a.cols(),
                                           std::vector<double>(g.values.begin(), mid)));
                    t.accumulate(b, Matrix(b.rows(), b.cols(),
                                           std::vector<double>(mid, g.values.end())));
                  });
}

Var row_slice(Var a, std::size_t begin, std::size_t end) {
  Tape &t = tape_of(a);
  const Matrix &av = a.value();
  if (begin > end || end > av.rows) {
    throw ShapeError(fmt::format("row_slice: [{}, {}) outside {}", begin, end,
                                 av.shape_string()));
  }
  const auto first = av.values.begin() + static_cast<std::ptrdiff_t>(begin * av.cols);
  const auto last = av.values.begin() + static_cast<std::ptrdiff_t>(end * av.cols);
  return t.record("row_slice",
                  Matrix(end - begin, av.cols, std::vector<double>(first, last)),
                  {a}, [a, begin](Tape &t, const Matrix &g) {
                    Matrix ga(a.rows(), a.cols());
                    std::copy(g.values.begin(), g.values.end(),
                              ga.values.begin() +
                                  static_cast<std::ptrdiff_t>(begin * a.cols()));
                    t.accumulate(a, ga);
                  });
}

Var scale_rows(Var a, Var g) {
  Tape &t = tape_of(a, g);
  const Matrix &av = a.value();
  const Matrix &gv = g.value();
  if (gv.cols != 1 || gv.rows != av.rows) shape_mismatch("scale_rows", av, gv);
  Matrix out(av.rows, av.cols);
  for (std::size_t r = 0; r < av.rows; ++r) {
    for (std::size_t c = 0; c < av.cols; ++c) out(r, c) = av(r, c) * gv.values[r];
  }
  return t.record("scale_rows", std::move(out), {a, g},
                  [a, g](Tape &t, const Matrix &grad) {
                    const Matrix &av = a.value();
                    const Matrix &gv = g.value();
                    if (a.requires_grad()) {
                      Matrix ga(av.rows, av.cols);
                      for (std::size_t r = 0; r < av.rows; ++r) {
                        for (std::size_t c = 0; c < av.cols; ++c) {
                          ga(r, c) = grad(r, c) * gv.values[r];
                        }
                      }
                      t.accumulate(a, ga);
                    }
                    if (g.requires_grad()) {
                      Matrix gg(gv.rows, 1);
                      for (std::size_t r = 0; r < av.rows; ++r) {
                        double s = 0.0;
                        for (std::size_t c = 0; c < av.cols; ++c) s += grad(r, c) * av(r, c);
                        gg.values[r] = s;
                      }
                      t.accumulate(g, gg);
                    }
                  });
}

Var scatter(Var values, const std::vector<ScatterEntry> &entries,
            std::size_t rows, std::size_t cols) {
  Tape &t = tape_of(values);
  const Matrix &v = values.value();
  if (v.cols != 1) {
    throw ShapeError(fmt::format("scatter: source must be a column, got {}",
                                 v.shape_string()));
  }
  Matrix out(rows, cols);
  for (const ScatterEntry &e : entries) {
    if (e.source >= v.rows || e.row >= rows || e.col >= cols) {
      throw ShapeError("scatter: entry index out of range");
    }
    out(e.row, e.col) += v.values[e.source];
  }
  return t.record("scatter", std::move(out), {values},
                  [values, entries](Tape &t, const Matrix &g) {
                    Matrix gv(values.rows(), 1);
                    for (const ScatterEntry &e : entries) {
                      gv.values[e.source] += g(e.row, e.col);
                    }
                    t.accumulate(values, gv);
                  });
}

Var sum(Var a) {
  Tape &t = tape_of(a);
  return t.record("sum", Matrix::scalar(total(a.value())), {a},
                  [a](Tape &t, const Matrix &g) {
                    t.accumulate(a, Matrix(a.rows(), a.cols(), g.values[0]));
                  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw ShapeError("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var row_sum(Var a) {
  Tape &t = tape_of(a);
  const Matrix &av = a.value();
  Matrix out(av.rows, 1);
  for (std::size_t r = 0; r < av.rows; ++r) {
    for (double x : av.row(r)) out.values[r] += x;
  }
  return t.record("row_sum", std::move(out), {a}, [a](Tape &t, const Matrix &g) {
    Matrix ga(a.rows(), a.cols());
    for (std::size_t r = 0; r < ga.rows; ++r) {
      for (double &x : ga.row(r)) x = g.values[r];
    }
    t.accumulate(a, ga);
  });
}

Var row_mean(Var a) {
  if (a.cols() == 0) throw ShapeError("row_mean of a matrix without columns");
  return scale(row_sum(a), 1.0 / static_cast<double>(a.cols()));
}

Var col_sum(Var a) {
  Tape &t = tape_of(a);
  const Matrix &av = a.value();
  Matrix out(1, av.cols);
  for (std::size_t r = 0; r < av.rows; ++r) {
    for (std::size_t c = 0; c < av.cols; ++c) out.values[c] += av(r, c);
  }
  return t.record("col_sum", std::move(out), {a}, [a](Tape &t, const Matrix &g) {
    Matrix ga(a.rows(), a.cols());
    for (std::size_t r = 0; r < ga.rows; ++r) {
      std::copy(g.values.begin(), g.values.end(), ga.row(r).begin());
    }
    t.accumulate(a, ga);
  });
}

Var relu(Var a) {
  Tape &t = tape_of(a);
  return t.record("relu", map(a.value(), [](double x) { return x > 0.0 ? x : 0.0; }),
                  {a}, [a](Tape &t, const Matrix &g) {
                    const Matrix &av = a.value();
                    Matrix ga(g.rows, g.cols);
                    for (std::size_t k = 0; k < g.size(); ++k) {
                      ga.values[k] = av.values[k] > 0.0 ? g.values[k] : 0.0;
                    }
                    t.accumulate(a, ga);
                  });
}

Var sigmoid(Var a) {
  Tape &t = tape_of(a);
  return t.record("sigmoid", map(a.value(), [](double x) { return sigmoid(x); }),
                  {a}, [a](Tape &t, const Matrix &g) {
                    const Matrix &av = a.value();
                    Matrix ga(g.rows, g.cols);
                    for (std::size_t k = 0; k < g.size(); ++k) {
                      const double s = sigmoid(av.values[k]);
                      ga.values[k] = g.values[k] * s * (1.0 - s);
                    }
                    t.accumulate(a, ga);
                  });
}

Var tanh(Var a) {
  Tape &t = tape_of(a);
  return t.record("tanh", map(a.value(), [](double x) { return std::tanh(x); }),
                  {a}, [a](Tape &t, const Matrix &g) {
                    const Matrix &av = a.value();
                    Matrix ga(g.rows, g.cols);
                    for (std::size_t k = 0; k < g.size(); ++k) {
                      const double y = std::tanh(av.values[k]);
                      ga.values[k] = g.values[k] * (1.0 - y * y);
                    }
                    t.accumulate(a, ga);
                  });
}

Var exp(Var a) {
  Tape &t = tape_of(a);
  return t.record("exp", map(a.value(), [](double x) { return std::exp(x); }),
                  {a}, [a](Tape &t, const Matrix &g) {
                    const Matrix &av = a.value();
                    Matrix ga(g.rows, g.cols);
                    for (std::size_t k = 0; k < g.size(); ++k) {
                      ga.values[k] = g.values[k] * std::exp(av.values[k]);
                    }
                    t.accumulate(a, ga);
                  });
}

Var square(Var a) {
  Tape &t = tape_of(a);
  return t.record("square", map(a.value(), [](double x) { return x * x; }), {a},
                  [a](Tape &t, const Matrix &g) {
                    const Matrix &av = a.value();
                    Matrix ga(g.rows, g.cols);
                    for (std::size_t k = 0; k < g.size(); ++k) {
                      ga.values[k] = 2.0 * av.values[k] * g.values[k];
                    }
                    t.accumulate(a, ga);
                  });
}

Var masked_row_softmax(Var a, const Matrix &mask) {
  Tape &t = tape_of(a);
  const Matrix &av = a.value();
  if (mask.rows != av.rows || mask.cols != av.cols) {
    shape_mismatch("masked_row_softmax", av, mask);
  }
  Matrix out(av.rows, av.cols);
  for (std::size_t r = 0; r < av.rows; ++r) {
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < av.cols; ++c) {
      if (mask(r, c) != 0.0) top = std::max(top, av(r, c));
    }
    if (top == -std::numeric_limits<double>::infinity()) continue;
    double z = 0.0;
    for (std::size_t c = 0; c < av.cols; ++c) {
      if (mask(r, c) == 0.0) continue;
      out(r, c) = std::exp(av(r, c) - top);
      z += out(r, c);
    }
    for (std::size_t c = 0; c < av.cols; ++c) out(r, c) /= z;
  }
  Matrix probs = out;
  return t.record("masked_row_softmax", std::move(out), {a},
                  [a, probs = std::move(probs)](Tape &t, const Matrix &g) {
                    Matrix ga(g.rows, g.cols);
                    for (std::size_t r = 0; r < g.rows; ++r) {
                      double dot = 0.0;
                      for (std::size_t c = 0; c < g.cols; ++c) dot += probs(r, c) * g(r, c);
                      for (std::size_t c = 0; c < g.cols; ++c) {
                        ga(r, c) = probs(r, c) * (g(r, c) - dot);
                      }
                    }
                    t.accumulate(a, ga);
                  });
}

}  // namespace plgat::ad
