#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "config/autodiff.hpp"
#include "config/vecmath.hpp"

namespace config {

enum class Activation { kTanh, kIdentity };

struct MlpShape {
  std::size_t inputs = 2;
  std::size_t outputs = 1;
  std::vector<std::size_t> hidden = {32, 32, 32};
  Activation activation = Activation::kTanh;

  std::size_t parameter_count() const;
};

/// Fully connected network. Hidden layers use `activation`, the output layer is linear.
///
/// Flattened parameter order is layer-major; within a layer the weight matrix
/// (outputs x inputs) comes first in row-major order, followed by the bias.
class Mlp {
 public:
  explicit Mlp(MlpShape shape);

  /// Xavier-uniform weights (gain 1), zero biases.
  static Mlp xavier(MlpShape shape, std::uint64_t seed);

  const MlpShape& shape() const { return shape_; }
  std::size_t parameter_count() const { return shape_.parameter_count(); }

  Vector parameters() const;
  void set_parameters(const Vector& flat);

  /// Graph leaves for the current parameters, in flattening order
  /// (W_0, b_0, W_1, b_1, ...).
  std::vector<ad::Var> parameter_leaves() const;

  /// Forward pass on a batch stored column-wise (inputs x n) -> (outputs x n),
  /// using the given parameter leaves.
  ad::Var forward(std::span<const ad::Var> params, const ad::Var& inputs) const;

  /// Plain evaluation without building a graph.
  Matrix evaluate(const Matrix& inputs) const;

  /// Flattens per-leaf gradients into one vector in parameter order.
  Vector flatten(std::span<const Matrix> leaf_grads) const;

 private:
  MlpShape shape_;
  std::vector<Matrix> weights_;
  std::vector<Vector> biases_;
};

}  // namespace config
