//
// Project cpiformer - Copyright 2026 the cpiformer team.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef CPIFORMER_TAPE_HPP_
#define CPIFORMER_TAPE_HPP_

#include <functional>
#include <vector>

#include "cpiformer/tensor.hpp"

namespace cpiformer {

/// Handle to a node on a Tape. Valid until the owning tape is cleared.
struct Value {
  int index = -1;
};

/// Define-by-run reverse-mode graph over 2-D tensors. Each forward op records
/// the node it produced; backward() walks the recording in reverse, pushes
/// gradients into every reachable Parameter, then resets the tape. Every
/// forward result is checked for NaN/Inf, which throws NumericError. A tape
/// must only be used by one thread at a time.
class Tape {
public:
  /// Trainable input. Gradients from backward() accumulate into p.grad.
  Value leaf(Parameter &p);
  /// Non-trainable input.
  Value constant(Tensor t);

  const Tensor &data(Value v) const { return nodes_[check(v)].data; }

  // Shapes follow standard dense-matrix semantics; incompatible operands
  // throw ShapeError naming the op and both shapes.
  Value matmul(Value a, Value b);
  Value transpose(Value a);
  Value add(Value a, Value b);
  Value sub(Value a, Value b);
  Value mul(Value a, Value b);  // elementwise
  Value div(Value a, Value b);  // elementwise
  Value scale(Value a, double c);
  Value exp(Value a);
  Value relu(Value a);
  Value softplus(Value a);
  Value square(Value a);
  /// Row-wise softmax with max-subtraction; output rows sum to 1.
  Value softmax_rows(Value a);
  /// Row-wise standardization (mean 0, variance 1, epsilon 1e-5), no affine
  /// part; compose with mul_rows/add_rows for a learned gain and shift.
  Value layer_norm_rows(Value a);
  Value sum_all(Value a);   // -> 1x1
  Value mean_all(Value a);  // -> 1x1
  Value concat_rows(Value a, Value b);
  Value concat_cols(Value a, Value b);
  Value slice_rows(Value a, int begin, int count);
  Value slice_cols(Value a, int begin, int count);
  /// out[k] = a[indices[k]]; backward scatter-adds into the gathered rows.
  Value gather_rows(Value a, std::vector<int> indices);
  /// Adds/multiplies a 1xC row vector across every row of an NxC matrix.
  Value add_rows(Value a, Value row);
  Value mul_rows(Value a, Value row);
  /// Reinterprets the row-major data as rows x cols; element count must match.
  Value reshape(Value a, int rows, int cols);

  /// Reverse sweep from a scalar (1x1) node. Populates Parameter::grad for
  /// all reachable leaves, then clears the tape, invalidating all Values.
  void backward(Value loss);

  /// Drops all nodes without running backward.
  void clear();

  std::size_t size() const { return nodes_.size(); }

private:
  struct Node {
    Tensor data;
    Tensor grad;  // allocated with the node, zero until backward
    bool requires_grad = false;
    Parameter *param = nullptr;
    std::function<void(Tape &)> back;
  };

  int check(Value v) const;
  Value push(Tensor data, bool requires_grad);
  Tensor &grad_at(int i) { return nodes_[static_cast<std::size_t>(i)].grad; }
  const Tensor &data_at(int i) const { return nodes_[static_cast<std::size_t>(i)].data; }
  bool needs_grad(Value v) const { return nodes_[static_cast<std::size_t>(v.index)].requires_grad; }

  std::vector<Node> nodes_;
};

}  // namespace cpiformer

#endif  // CPIFORMER_TAPE_HPP_
