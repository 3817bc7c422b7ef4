#include "config/vecmath.hpp"

#include <stdexcept>
#include <string>

namespace config {

Vector make_vector(std::initializer_list<double> values) {
  Vector v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

bool all_finite(const Vector& v) { return v.allFinite(); }

Vector unitize(const Vector& v, double eps) {
  const double norm = v.norm();
  if (norm + eps == 0.0) return Vector::Zero(v.size());
  return v / (norm + eps);
}

double cosine_similarity(const Vector& a, const Vector& b, double eps) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("cosine_similarity: dimension mismatch (" +
                                std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                                ")");
  }
  const double denom = a.norm() * b.norm() + eps;
  if (denom == 0.0) return 0.0;
  return a.dot(b) / denom;
}

Vector orthogonal_component(const Vector& g1, const Vector& g2) {
  if (g1.size() != g2.size()) {
    throw std::invalid_argument("orthogonal_component: dimension mismatch");
  }
  const double sq = g1.squaredNorm();
  if (sq < kDegenerateNorm) return g2;
  return g2 - (g1.dot(g2) / sq) * g1;
}

Vector least_squares_solve(const Matrix& a, const Vector& b, double relative_cutoff) {
  if (a.rows() != b.size()) {
    throw std::invalid_argument("least_squares_solve: row count does not match rhs length");
  }
  if (a.rows() == 0 || a.cols() == 0) return Vector::Zero(a.cols());
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sigma = svd.singularValues();
  const double cutoff = relative_cutoff * (sigma.size() > 0 ? sigma(0) : 0.0);
  Vector coeffs = svd.matrixU().transpose() * b;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    coeffs(i) = sigma(i) > cutoff && sigma(i) > 0.0 ? coeffs(i) / sigma(i) : 0.0;
  }
  return svd.matrixV() * coeffs;
}

std::size_t numerical_rank(const Matrix& a, double relative_cutoff) {
  if (a.rows() == 0 || a.cols() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(a);
  const Vector& sigma = svd.singularValues();
  const double cutoff = relative_cutoff * sigma(0);
  std::size_t rank = 0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > cutoff && sigma(i) > 0.0) ++rank;
  }
  return rank;
}

GradientSet::GradientSet(Matrix rows) : rows_(std::move(rows)) {}

GradientSet::GradientSet(std::span<const Vector> rows) {
  if (rows.empty()) return;
  const auto k = rows.front().size();
  rows_.resize(static_cast<Eigen::Index>(rows.size()), k);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != k) {
      throw std::invalid_argument("GradientSet: row " + std::to_string(i) + " has dimension " +
                                  std::to_string(rows[i].size()) + ", expected " +
                                  std::to_string(k));
    }
    rows_.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  }
}

GradientSet::GradientSet(std::initializer_list<Vector> rows)
    : GradientSet(std::span<const Vector>(rows.begin(), rows.size())) {}

}  // namespace config
