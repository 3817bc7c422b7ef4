#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "config/vecmath.hpp"

namespace config {

struct AdamHyperParams {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  /// Throws std::invalid_argument unless 0 < beta < 1, eps > 0, lr >= 0.
  void validate() const;
};

/// Thrown when an optimizer step receives a NaN/Inf input. The state is left untouched.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AdamState {
  AdamHyperParams hyper;
  Vector first;   // m_t
  Vector second;  // v_t
  std::uint64_t step = 0;

  AdamState() = default;
  AdamState(std::size_t dimension, AdamHyperParams hp);
};

/// One bias-corrected Adam step along an already aggregated gradient.
void adam_step(AdamState& state, const Vector& gradient, Vector& params);

/// State of the momentum-accelerated ConFIG optimizer (one backprop per step).
struct MConfigState {
  AdamHyperParams hyper;
  std::vector<Vector> loss_first;            // m_{g_i}
  std::vector<std::uint64_t> loss_steps;     // t_{g_i}
  Vector pseudo_first;                       // m_t
  Vector second;                             // v_t
  std::uint64_t step = 0;                    // t
  double config_eps = kDefaultEps;

  MConfigState() = default;
  MConfigState(std::size_t losses, std::size_t dimension, AdamHyperParams hp);
  std::size_t losses() const { return loss_first.size(); }
};

/// Round-robin schedule: loss index (0-based) consumed at 1-based step `t`.
inline std::size_t round_robin_index(std::uint64_t t, std::size_t losses) {
  return static_cast<std::size_t>(t % losses);
}

/// Consumes the freshly backpropagated gradient of loss `loss_index`.
/// Momenta of losses that were never visited are left out of the ConFIG
/// aggregation until their first visit.
void mconfig_step(MConfigState& state, std::size_t loss_index, const Vector& gradient,
                  Vector& params);

/// Ablation variant with per-loss first and second momenta rescaled before aggregation.
struct MAConfigState {
  AdamHyperParams hyper;
  std::vector<Vector> loss_first;
  std::vector<Vector> loss_second;
  std::vector<std::uint64_t> loss_steps;
  std::uint64_t step = 0;
  double config_eps = kDefaultEps;

  MAConfigState() = default;
  MAConfigState(std::size_t losses, std::size_t dimension, AdamHyperParams hp);
  std::size_t losses() const { return loss_first.size(); }
};

void maconfig_step(MAConfigState& state, std::size_t loss_index, const Vector& gradient,
                   Vector& params);

}  // namespace config
