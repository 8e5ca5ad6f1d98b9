#pragma once

#include "gekln/segments.hpp"
#include "gekln/tensor.hpp"

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <utility>
#include <vector>

namespace gekln::ad {

class Tape;

// Handle to a node recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

// Reverse-mode trace over dense matrices. Nodes are appended in evaluation
// order, so a reverse sweep visits every consumer before its inputs.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Var constant(Matrix value);
  // Leaf bound to a parameter slot; repeated calls for the same slot return
  // the same node.
  Var parameter(ParameterStore& store, ParameterStore::SlotId slot);

  Var record(Matrix value, std::vector<std::size_t> inputs, BackwardFn backward);

  const Matrix& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  // Gradient accumulator of a node, zero-initialised on first touch.
  Matrix& grad(std::size_t id);

  // Propagates d(loss)/d(node) back through the trace and adds the result to
  // each bound parameter's gradient slot. The trace is consumed.
  void backward(Var loss);

  void clear();
  bool empty() const noexcept { return nodes_.empty(); }
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
    ParameterStore* store = nullptr;
    ParameterStore::SlotId slot = 0;
  };

  std::vector<Node> nodes_;
  std::map<std::pair<const ParameterStore*, ParameterStore::SlotId>, std::size_t> param_nodes_;
};

// Forward primitives. Each records one node and its vector-Jacobian product.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
Var scale(Var a, double factor);
Var leaky_relu(Var a, double slope);
Var row_gather(Var a, std::span<const std::size_t> rows);
// Mean of rows sharing a segment id; an empty segment yields a zero row.
Var segment_mean(Var values, std::span<const std::size_t> segment_ids, std::size_t num_segments);
// out.row(g) = mean of a.row(i) for i in segments.segment(g); zero when empty.
Var gather_segment_mean(Var a, const SegmentIndex& segments);
Var concat_cols(std::span<const Var> parts);
// n x 1 column of row-wise dot products.
Var inner_product_rows(Var a, Var b);
Var sum(Var a);
// (1/T) * sum (labels - pred)^2 over an n x 1 prediction column.
Var mean_squared_error(Var pred, std::span<const double> labels);
// Mean Bernoulli cross-entropy of logits against {0,1} labels.
Var bce_with_logits(Var logits, std::span<const double> labels);

}  // namespace gekln::ad
