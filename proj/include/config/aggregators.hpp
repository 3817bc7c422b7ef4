#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "config/vecmath.hpp"

namespace config {

/// Positive weights fixing the ratio of the update's projections onto the
/// loss-specific gradients. All-ones gives every loss the same decrease rate.
class DirectionWeights {
 public:
  static DirectionWeights ones(std::size_t m);
  explicit DirectionWeights(Vector components);

  std::size_t size() const { return static_cast<std::size_t>(components_.size()); }
  const Vector& components() const { return components_; }

 private:
  Vector components_;
};

/// Relative tolerance of the `conflict_free` flag.
inline constexpr double kConflictTolerance = 1e-9;

struct AggregationResult {
  Vector update;
  std::vector<double> per_loss_cosine;      // S_c(g_i, update)
  std::vector<double> per_loss_projection;  // g_i . U(update)
  double magnitude = 0.0;
  bool conflict_free = true;
  /// max |A x - w| of the inner least-squares solve (ConFIG only, 0 otherwise).
  double residual = 0.0;
  /// Non-fatal observations such as "m > k" or a singular IMTL-G system.
  std::vector<std::string> notes;
};

/// Fills cosines, projections, magnitude and the conflict flag for `update`.
AggregationResult diagnose(const GradientSet& grads, Vector update, double eps = kDefaultEps);

/// General ConFIG: g_u = U(pinv([U(g_1)..U(g_m)]^T) w), update = (sum_i g_i . g_u) g_u.
/// Exactly-zero gradients are left out of the pseudoinverse.
AggregationResult config_update(const GradientSet& grads, const DirectionWeights& weights,
                                double eps = kDefaultEps);
AggregationResult config_update(const GradientSet& grads, double eps = kDefaultEps);

/// Closed-form two-loss ConFIG built from the mutual orthogonal components.
/// Falls back to g1 + g2 when the pair is exactly parallel.
AggregationResult config_update_two(const Vector& g1, const Vector& g2,
                                    double eps = kDefaultEps);

/// PCGrad with a seeded random visiting order per gradient.
AggregationResult pcgrad_update(const GradientSet& grads, std::uint64_t rng_seed);

/// PCGrad with explicit visiting orders; `orders[i]` is a permutation of 0..m-1.
AggregationResult pcgrad_update_ordered(const GradientSet& grads,
                                        std::span<const std::vector<std::size_t>> orders);

/// IMTL-G: sum_i alpha_i g_i with weights equalizing the projections onto U(g_i).
AggregationResult imtlg_update(const GradientSet& grads, double eps = kDefaultEps);

/// Plain sum of the gradients.
AggregationResult sum_update(const GradientSet& grads);

struct SolvabilityReport {
  std::size_t losses = 0;     // m
  std::size_t dimension = 0;  // k
  std::size_t rank = 0;       // numerical rank of the unitized gradient matrix
  bool full_row_rank = false;
  bool guaranteed = false;    // full row rank and m <= k
};

SolvabilityReport solvability_report(const GradientSet& grads, double eps = kDefaultEps);

}  // namespace config
