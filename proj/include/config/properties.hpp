#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

// Executable versions of the structural guarantees of the aggregation operator.
// Shared by the `properties` CLI subcommand and the acceptance binary.

namespace config {

struct PropertyResult {
  std::string name;
  bool passed = false;
  /// Worst observed value of the checked quantity (same units as `limit`).
  double worst = 0.0;
  double limit = 0.0;
  std::string detail;
  double seconds = 0.0;
};

struct PropertyOptions {
  std::size_t trials = 1000;
  std::uint64_t seed = 20240601;
  /// Theorem-1 run length per suite.
  std::size_t descent_steps = 10000;
  /// Negative control: every ConFIG update is negated before it is checked.
  bool flip_sign = false;
};

/// Random sets with m in {2..5}, k in {8..256}: worst g_i.g_c / (|g_i||g_c|), must be >= -1e-9.
PropertyResult check_conflict_freedom(const PropertyOptions& opt);
/// Same trials: worst relative spread of the cosines S_c(g_i, g_c), must be < 1e-6.
PropertyResult check_equal_projection(const PropertyOptions& opt);
/// |g_c| against sum_i |g_i| S_c(g_i, U(g_c)): worst relative gap, must be < 1e-6.
PropertyResult check_magnitude_law(const PropertyOptions& opt);
/// Closed form against the pseudoinverse form at eps = 0: worst of (1 - cosine) <= 1e-10
/// and relative magnitude gap <= 1e-8.
PropertyResult check_two_loss_equivalence(const PropertyOptions& opt);
/// Golden failure vectors for ConFIG, PCGrad and IMTL-G.
PropertyResult check_failure_vectors(const PropertyOptions& opt);
/// Gradient descent on the ConFIG direction with step 2/L on convex quadratic suites
/// (m in {2, 4}, k = 32): largest per-step loss increase, must be <= 1e-12.
PropertyResult check_theorem1_monotonicity(const PropertyOptions& opt);
/// Non-convex ripple landscape with step 1/L: min_k |g^k|^2 stays below the descent
/// bound 2 (L_1 - L_{K+1}) / (gamma alpha^2 K) at every checkpoint K.
PropertyResult check_theorem2_bound(const PropertyOptions& opt);

/// Names accepted by `run_properties`, in execution order.
std::vector<std::string> property_names();
/// Runs every property whose name contains `filter` (all when empty).
std::vector<PropertyResult> run_properties(const PropertyOptions& opt, const std::string& filter);

}  // namespace config
