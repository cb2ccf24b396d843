#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "densekit/common.hpp"

namespace densekit::nn {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  bool valid() const { return tape_ != nullptr; }
  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Scalar scalar() const;  // requires a 1x1 value

 private:
  friend class Tape;
  Var(Tape* tape, int idx) : tape_(tape), idx_(idx) {}
  Tape* tape_ = nullptr;
  int idx_ = -1;
};

/// Reverse-mode tape over dense matrices. Nodes are created by the op
/// builders below; backward() propagates exact derivatives to every leaf.
/// Scalars are 1x1 matrices, row vectors 1xd.
///
/// A tape is single-use per loss: build, call backward once, read grads.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Differentiable leaf (parameters).
  Var leaf(const Matrix& value);
  /// Non-differentiable input.
  Var constant(const Matrix& value);
  Var constant_scalar(Scalar v);

  // --- elementwise / linear ---
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var hadamard(Var a, Var b);
  Var scale(Var a, Scalar s);
  Var add_scalar(Var a, Scalar s);
  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var add_row_broadcast(Var a, Var row);  // a + ones * row
  Var gelu(Var a);                        // exact erf form

  // --- structure ---
  Var gather_rows(Var a, const std::vector<int>& rows);
  Var gather_cols(Var a, const std::vector<int>& cols);
  Var gather_entries(Var a, const std::vector<std::pair<int, int>>& entries);  // 1xk
  Var concat_rows(const std::vector<Var>& parts);
  Var concat_cols(const std::vector<Var>& parts);

  // --- rowwise nonlinearities ---
  Var softmax_rows(Var a);      // max-subtracted
  Var log_softmax_rows(Var a);  // max-subtracted
  Var layer_norm_rows(Var a, Var gain, Var bias, Scalar eps);
  Var l2_normalize_rows(Var a);               // throws on a zero row
  Var mean_rows(Var a, const std::vector<int>& keep);  // 1xd over kept rows
  Var logsumexp_row(Var a);                   // 1xn -> 1x1, max-subtracted

  // --- reductions ---
  Var sum(Var a);  // 1x1

  /// Reverse pass from a 1x1 loss node. Throws if the loss does not depend on
  /// any differentiable leaf (detached graph).
  void backward(Var loss);

  const Matrix& value(Var v) const;
  /// Gradient of the backward()'d loss wrt a node (typically a leaf).
  const Matrix& grad(Var v) const;
  bool requires_grad(Var v) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    std::function<void()> back;  // accumulates into parents' grad
  };

  Var make(Matrix value, bool requires_grad, std::function<void()> back);
  Node& node(Var v);
  const Node& node(Var v) const;
  void check_same_tape(Var v) const;

  std::vector<std::unique_ptr<Node>> nodes_;
  bool backward_done_ = false;
};

}  // namespace densekit::nn
