#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace config {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Shared epsilon of the normalization and cosine operators.
inline constexpr double kDefaultEps = 1e-8;

/// Singular values below this fraction of the largest one are treated as zero.
inline constexpr double kPinvRelativeCutoff = 1e-12;

/// Norm below which a vector is treated as exactly degenerate.
inline constexpr double kDegenerateNorm = 1e-300;

Vector make_vector(std::initializer_list<double> values);

bool all_finite(const Vector& v);

/// v / (|v| + eps). The zero vector maps to itself.
Vector unitize(const Vector& v, double eps = kDefaultEps);

/// a.b / (|a||b| + eps); zero when either side is zero.
double cosine_similarity(const Vector& a, const Vector& b, double eps = kDefaultEps);

/// Component of `g2` orthogonal to `g1`. Returns `g2` unchanged when `g1` is degenerate.
Vector orthogonal_component(const Vector& g1, const Vector& g2);

/// Minimum-norm least-squares solution of A x = b using a truncated SVD.
Vector least_squares_solve(const Matrix& a, const Vector& b,
                           double relative_cutoff = kPinvRelativeCutoff);

/// Number of singular values above `relative_cutoff * sigma_max`.
std::size_t numerical_rank(const Matrix& a, double relative_cutoff = kPinvRelativeCutoff);

/// Ordered collection of m loss-specific gradients sharing dimension k.
/// Stored row-wise, so `matrix()` is the m x k matrix [g1 .. gm]^T.
class GradientSet {
 public:
  GradientSet() = default;
  explicit GradientSet(Matrix rows);
  explicit GradientSet(std::span<const Vector> rows);
  GradientSet(std::initializer_list<Vector> rows);

  std::size_t size() const { return static_cast<std::size_t>(rows_.rows()); }
  std::size_t dimension() const { return static_cast<std::size_t>(rows_.cols()); }
  bool empty() const { return rows_.rows() == 0; }

  Vector row(std::size_t i) const { return rows_.row(static_cast<Eigen::Index>(i)).transpose(); }
  const Matrix& matrix() const { return rows_; }

  /// True iff m <= k, the condition under which a conflict-free direction
  /// exists for any set of linearly independent gradients.
  bool solvable_guarantee() const { return size() <= dimension(); }

 private:
  Matrix rows_;
};

}  // namespace config
