#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lanecast/tensor.hpp"

namespace lanecast::ad {

// Handle to a tensor node inside one Graph.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

enum class Op : std::uint8_t {
  kLeaf,
  kAdd,
  kSub,
  kMul,
  kAffine,      // s0 * x + s1, elementwise
  kAddBias,     // [r x c] + [1 x c]
  kMatmul,      // [m x k] * [k x n]
  kMatmulBT,    // [m x k] * ([n x k])^T
  kTanh,
  kSigmoid,
  kRelu,
  kSoftmaxRows, // softmax over each row
  kConcatRows,
  kConcatCols,
  kSliceRows,   // rows [i0, i1)
  kSliceCols,   // cols [i0, i1)
  kReshape,
  kGatherRows,     // out[p] = x[idx[p]]
  kScatterAddRows, // out[idx[p]] += x[p], out has i0 rows
  kSumAll,
  kMeanAll,
  kConv1d,      // in0 = x [t x cin], in1 = w [(k*cin) x cout], in2 = bias
  kL1Distance,  // sum |a - b|, subgradient 0 at ties
  kCrossEntropy // -sum labels * ln(probs)
};

const char* op_name(Op op);

// Reverse-mode tape: an ordered record of ops in topological order. Forward
// values are computed eagerly as nodes are created; backward() may run once.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  void reset();  // drop all nodes; the tape becomes reusable
  std::size_t node_count() const { return nodes_.size(); }

  // --- leaves -------------------------------------------------------------
  Var input(int rows, int cols, std::span<const double> values,
            bool requires_grad = false);
  Var constant(int rows, int cols, std::span<const double> values);
  Var scalar(double v);
  Var zeros(int rows, int cols, bool requires_grad = false);
  // Binds a host tensor as a leaf (copies values, records node_id).
  Var bind(Tensor& t);

  // --- ops ----------------------------------------------------------------
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var affine(Var a, double scale, double shift);
  Var scale(Var a, double s) { return affine(a, s, 0.0); }
  Var add_bias(Var m, Var bias);
  Var matmul(Var a, Var b);
  Var matmul_bt(Var a, Var b);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var relu(Var a);
  Var softmax_rows(Var a);
  Var concat_rows(std::span<const Var> parts);
  Var concat_cols(std::span<const Var> parts);
  Var slice_rows(Var a, int r0, int r1);
  Var slice_cols(Var a, int c0, int c1);
  Var reshape(Var a, int rows, int cols);
  Var gather_rows(Var a, std::vector<int> idx);
  Var scatter_add_rows(Var a, std::vector<int> idx, int out_rows);
  Var sum_all(Var a);
  Var mean_all(Var a);
  Var conv1d_same(Var x, Var w, Var bias, int ksize);
  Var l1_distance(Var a, Var b);
  Var cross_entropy(Var probs, Var labels);

  // Scaled dot-product attention weights: softmax(q k^T / sqrt(dk)).
  Var scaled_dot_softmax(Var q, Var k);

  // --- backward -----------------------------------------------------------
  // loss must be a scalar node; runs the chain rule in reverse topological
  // order. Calling backward twice on the same tape is an error.
  void backward(Var loss);
  bool backward_done() const { return backward_done_; }

  // --- access -------------------------------------------------------------
  int rows(Var v) const { return node(v).rows; }
  int cols(Var v) const { return node(v).cols; }
  bool requires_grad(Var v) const { return node(v).requires_grad; }
  std::span<const double> value(Var v) const;
  double value_scalar(Var v) const;
  // Gradient of the loss w.r.t. v; empty span when none was produced.
  std::span<const double> grad(Var v) const;

  Tensor tensor_of(Var v) const;  // snapshot with shape/values/node_id

 private:
  struct Node {
    int rows = 0, cols = 0;
    Op op = Op::kLeaf;
    bool requires_grad = false;
    int in0 = -1, in1 = -1, in2 = -1;
    int i0 = 0, i1 = 0;
    double s0 = 0.0, s1 = 0.0;
    std::vector<int> extra;  // concat member ids / gather-scatter indices
    std::vector<double> val;
    std::vector<double> grad;
  };

  Node& node(Var v) {
    check_var(v);
    return nodes_[static_cast<std::size_t>(v.id)];
  }
  const Node& node(Var v) const {
    check_var(v);
    return nodes_[static_cast<std::size_t>(v.id)];
  }
  void check_var(Var v) const;
  Var push(Node&& n);
  void backward_step(int id);
  [[noreturn]] void shape_error(const char* op, Var a, Var b) const;

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace lanecast::ad
