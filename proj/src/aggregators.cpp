#include "config/aggregators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace config {

DirectionWeights DirectionWeights::ones(std::size_t m) {
  return DirectionWeights(Vector::Ones(static_cast<Eigen::Index>(m)));
}

DirectionWeights::DirectionWeights(Vector components) : components_(std::move(components)) {
  if (components_.size() == 0) throw std::invalid_argument("DirectionWeights: empty");
  for (Eigen::Index i = 0; i < components_.size(); ++i) {
    if (!(components_(i) > 0.0) || !std::isfinite(components_(i))) {
      throw std::invalid_argument("DirectionWeights: component " + std::to_string(i) +
                                  " must be positive and finite");
    }
  }
}

AggregationResult diagnose(const GradientSet& grads, Vector update, double eps) {
  AggregationResult r;
  r.update = std::move(update);
  r.magnitude = r.update.norm();
  const Vector direction = unitize(r.update, eps);
  const double unorm = r.magnitude;
  r.per_loss_cosine.reserve(grads.size());
  r.per_loss_projection.reserve(grads.size());
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const Vector g = grads.row(i);
    r.per_loss_cosine.push_back(cosine_similarity(g, r.update, eps));
    r.per_loss_projection.push_back(g.dot(direction));
    if (g.dot(r.update) < -kConflictTolerance * g.norm() * unorm) r.conflict_free = false;
  }
  return r;
}

namespace {

void require_nonempty(const GradientSet& grads, const char* who) {
  if (grads.empty()) throw std::invalid_argument(std::string(who) + ": no gradients");
}

}  // namespace

AggregationResult config_update(const GradientSet& grads, const DirectionWeights& weights,
                                double eps) {
  require_nonempty(grads, "config_update");
  const std::size_t m = grads.size();
  if (weights.size() != m) {
    throw std::invalid_argument("config_update: " + std::to_string(weights.size()) +
                                " direction weights for " + std::to_string(m) + " gradients");
  }

  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < m; ++i) {
    if (grads.matrix().row(static_cast<Eigen::Index>(i)).squaredNorm() > 0.0) active.push_back(i);
  }
  if (active.empty()) return diagnose(grads, Vector::Zero(grads.dimension()), eps);

  const auto n = static_cast<Eigen::Index>(active.size());
  Matrix unit_rows(n, static_cast<Eigen::Index>(grads.dimension()));
  Vector w(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    unit_rows.row(r) = unitize(grads.row(active[r]), eps).transpose();
    w(r) = weights.components()(static_cast<Eigen::Index>(active[r]));
  }

  const Vector x = least_squares_solve(unit_rows, w);
  const Vector g_u = unitize(x, eps);
  const double length = (grads.matrix() * g_u).sum();

  AggregationResult r = diagnose(grads, length * g_u, eps);
  r.residual = (unit_rows * x - w).cwiseAbs().maxCoeff();
  if (!grads.solvable_guarantee()) {
    r.notes.push_back("more losses than parameters (m=" + std::to_string(m) + " > k=" +
                      std::to_string(grads.dimension()) +
                      "); a conflict-free direction may not exist");
  }
  return r;
}

AggregationResult config_update(const GradientSet& grads, double eps) {
  require_nonempty(grads, "config_update");
  return config_update(grads, DirectionWeights::ones(grads.size()), eps);
}

AggregationResult config_update_two(const Vector& g1, const Vector& g2, double eps) {
  if (g1.size() != g2.size()) throw std::invalid_argument("config_update_two: dimension mismatch");
  const GradientSet grads{g1, g2};

  const Vector o12 = orthogonal_component(g1, g2);
  const Vector o21 = orthogonal_component(g2, g1);
  // Exactly parallel inputs leave no orthogonal component on either side.
  const bool parallel = o12.norm() <= 1e-14 * g2.norm() && o21.norm() <= 1e-14 * g1.norm();
  if (parallel) {
    AggregationResult r = diagnose(grads, g1 + g2, eps);
    r.notes.push_back("parallel gradients; fell back to g1 + g2");
    return r;
  }
  const Vector g_v = unitize(unitize(o12, eps) + unitize(o21, eps), eps);
  const double length = g1.dot(g_v) + g2.dot(g_v);
  return diagnose(grads, length * g_v, eps);
}

AggregationResult pcgrad_update_ordered(const GradientSet& grads,
                                        std::span<const std::vector<std::size_t>> orders) {
  require_nonempty(grads, "pcgrad_update");
  const std::size_t m = grads.size();
  if (orders.size() != m) throw std::invalid_argument("pcgrad_update: need one order per gradient");
  std::vector<std::size_t> identity(m);
  std::iota(identity.begin(), identity.end(), std::size_t{0});
  for (const auto& order : orders) {
    if (order.size() != m || !std::is_permutation(order.begin(), order.end(), identity.begin())) {
      throw std::invalid_argument("pcgrad_update: each order must be a permutation of 0..m-1");
    }
  }
  Vector total = Vector::Zero(static_cast<Eigen::Index>(grads.dimension()));
  for (std::size_t i = 0; i < m; ++i) {
    Vector projected = grads.row(i);
    for (std::size_t j : orders[i]) {
      if (j == i) continue;
      const Vector gj = grads.row(j);
      if (projected.dot(gj) < 0.0) projected = orthogonal_component(gj, projected);
    }
    total += projected;
  }
  return diagnose(grads, std::move(total));
}

AggregationResult pcgrad_update(const GradientSet& grads, std::uint64_t rng_seed) {
  require_nonempty(grads, "pcgrad_update");
  std::mt19937_64 rng(rng_seed);
  std::vector<std::vector<std::size_t>> orders(grads.size());
  for (auto& order : orders) {
    order.resize(grads.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
  }
  return pcgrad_update_ordered(grads, orders);
}

AggregationResult imtlg_update(const GradientSet& grads, double eps) {
  require_nonempty(grads, "imtlg_update");
  const std::size_t m = grads.size();
  if (m == 1) return diagnose(grads, grads.row(0), eps);

  const auto n = static_cast<Eigen::Index>(m - 1);
  const auto k = static_cast<Eigen::Index>(grads.dimension());
  const Vector g1 = grads.row(0);
  const Vector u1 = unitize(g1, eps);
  Matrix d(n, k);
  Matrix u(n, k);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Vector gi = grads.row(static_cast<std::size_t>(r) + 1);
    d.row(r) = (g1 - gi).transpose();
    u.row(r) = (u1 - unitize(gi, eps)).transpose();
  }
  // Row vector a solves a (D U^T) = g1^T U^T; transpose to a column system.
  const Matrix system = d * u.transpose();
  const Vector rhs = u * g1;
  const Vector a = least_squares_solve(system.transpose(), rhs);

  Vector alpha(static_cast<Eigen::Index>(m));
  alpha(0) = 1.0 - a.sum();
  alpha.tail(n) = a;
  AggregationResult r = diagnose(grads, grads.matrix().transpose() * alpha, eps);
  if (numerical_rank(system) < static_cast<std::size_t>(n)) {
    r.notes.push_back("IMTL-G weight system is singular; used the least-squares weights");
  }
  return r;
}

AggregationResult sum_update(const GradientSet& grads) {
  require_nonempty(grads, "sum_update");
  return diagnose(grads, grads.matrix().colwise().sum().transpose());
}

SolvabilityReport solvability_report(const GradientSet& grads, double eps) {
  SolvabilityReport report;
  report.losses = grads.size();
  report.dimension = grads.dimension();
  if (grads.empty()) return report;
  Matrix unit_rows(grads.matrix().rows(), grads.matrix().cols());
  for (std::size_t i = 0; i < grads.size(); ++i) {
    unit_rows.row(static_cast<Eigen::Index>(i)) = unitize(grads.row(i), eps).transpose();
  }
  report.rank = numerical_rank(unit_rows);
  report.full_row_rank = report.rank == report.losses;
  report.guaranteed = report.full_row_rank && report.losses <= report.dimension;
  return report;
}

}  // namespace config
