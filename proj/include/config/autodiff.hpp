#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "config/vecmath.hpp"

// Reverse-mode automatic differentiation over dense matrix expressions.
//
// Every node owns its value, computed eagerly when the node is created.
// Backward passes come in two flavours:
//   * `gradients` accumulates plain matrices (fast path for parameter gradients);
//   * `grad` builds the adjoints as new graph nodes, so the result can itself be
//     differentiated (input derivatives of a network, then parameter gradients
//     of a loss built from them).
// Nodes whose inputs do not require gradients are stored as constants and do
// not retain their operands.

namespace config::ad {

enum class Op : std::uint8_t {
  kLeaf,
  kAdd,
  kSub,
  kMul,
  kNeg,
  kScale,
  kAddScalar,
  kMatMul,
  kTranspose,
  kAddBias,
  kRowSum,
  kBroadcastCols,
  kSumAll,
  kBroadcastScalar,
  kTanh,
  kSin,
  kCos,
  kExp,
  kSquare,
  kRow,
  kPadRow,
};

struct Node {
  Op op = Op::kLeaf;
  bool requires_grad = false;
  std::vector<std::shared_ptr<const Node>> inputs;
  Matrix value;
  double scalar = 0.0;       // kScale / kAddScalar
  Eigen::Index index = 0;    // kRow / kPadRow
  Eigen::Index rows = 0;     // kPadRow / kBroadcast*
  Eigen::Index cols = 0;     // kBroadcast*
};

/// Handle to a graph node. Copying a Var shares the node.
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  const Matrix& value() const { return node_->value; }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  /// Value of a 1x1 node.
  double scalar() const { return node_->value(0, 0); }
  bool requires_grad() const { return node_->requires_grad; }
  bool valid() const { return node_ != nullptr; }

  const std::shared_ptr<const Node>& node() const { return node_; }

 private:
  std::shared_ptr<const Node> node_;
};

/// Trainable or differentiable input.
Var variable(Matrix value);
/// Constant (never differentiated).
Var constant(Matrix value);
Var constant_scalar(double value);
/// Same value, cut from the graph.
Var detach(const Var& v);

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
/// Elementwise product.
Var operator*(const Var& a, const Var& b);
Var operator-(const Var& a);
Var operator*(double c, const Var& a);
Var operator*(const Var& a, double c);
Var operator+(const Var& a, double c);
Var operator+(double c, const Var& a);
Var operator-(const Var& a, double c);
Var operator-(double c, const Var& a);

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
/// x (r x c) plus column vector b (r x 1) broadcast over columns.
Var add_bias(const Var& x, const Var& b);
/// Sum over columns: (r x c) -> (r x 1).
Var row_sum(const Var& x);
Var broadcast_cols(const Var& v, Eigen::Index cols);
/// Sum of all entries as a 1x1 node.
Var sum(const Var& x);
Var mean(const Var& x);
Var broadcast_scalar(const Var& s, Eigen::Index rows, Eigen::Index cols);
Var tanh(const Var& x);
Var sin(const Var& x);
Var cos(const Var& x);
Var exp(const Var& x);
Var square(const Var& x);
/// Row `i` of x as a 1 x c node.
Var row(const Var& x, Eigen::Index i);
/// Embeds a 1 x c node as row `i` of an otherwise zero (rows x c) node.
Var pad_row(const Var& x, Eigen::Index i, Eigen::Index rows);

/// Vector-Jacobian products of `output` (seeded with ones) as graph nodes.
/// Entries for `wrt` nodes that `output` does not depend on are zero constants.
std::vector<Var> grad(const Var& output, std::span<const Var> wrt);
std::vector<Var> grad(const Var& output, std::span<const Var> wrt, const Var& seed);

/// Same products as plain matrices, without building graph nodes.
std::vector<Matrix> gradients(const Var& output, std::span<const Var> wrt);

/// Number of nodes reachable from `v` (diagnostics and tests).
std::size_t graph_size(const Var& v);

/// Gradient of a 1 x n field with respect to the (d x n) input batch, as a
/// d x n node. Each column of `field` must depend only on the same column of
/// `inputs`, which holds for column-wise networks.
Var input_gradient(const Var& field, const Var& inputs);

/// Pure derivative of order 1 or 2 of a 1 x n field along input coordinate `coord`.
/// Throws std::invalid_argument for other orders.
Var input_derivative(const Var& field, const Var& inputs, Eigen::Index coord, int order);

}  // namespace config::ad
