#include "config/optimizers.hpp"

#include <cmath>
#include <string>

#include "config/aggregators.hpp"

namespace config {

void AdamHyperParams::validate() const {
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw std::invalid_argument("beta1 must lie in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw std::invalid_argument("beta2 must lie in (0, 1)");
  if (!(eps > 0.0)) throw std::invalid_argument("adam eps must be positive");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw std::invalid_argument("learning rate must be >= 0");
}

namespace {

void check_step_inputs(const Vector& gradient, const Vector& params, Eigen::Index dim,
                       const char* who) {
  if (gradient.size() != dim || params.size() != dim) {
    throw std::invalid_argument(std::string(who) + ": dimension mismatch");
  }
  if (!gradient.allFinite()) throw NonFiniteError(std::string(who) + ": non-finite gradient");
}

Vector bias_corrected(const Vector& moment, double beta, std::uint64_t t) {
  return moment / (1.0 - std::pow(beta, static_cast<double>(t)));
}

}  // namespace

AdamState::AdamState(std::size_t dimension, AdamHyperParams hp)
    : hyper(hp),
      first(Vector::Zero(static_cast<Eigen::Index>(dimension))),
      second(Vector::Zero(static_cast<Eigen::Index>(dimension))) {
  hyper.validate();
}

void adam_step(AdamState& state, const Vector& gradient, Vector& params) {
  check_step_inputs(gradient, params, state.first.size(), "adam_step");
  const auto& h = state.hyper;
  state.step += 1;
  state.first = h.beta1 * state.first + (1.0 - h.beta1) * gradient;
  state.second = h.beta2 * state.second + (1.0 - h.beta2) * gradient.cwiseAbs2();
  const Vector m_hat = bias_corrected(state.first, h.beta1, state.step);
  const Vector v_hat = bias_corrected(state.second, h.beta2, state.step);
  params.array() -= h.lr * m_hat.array() / (v_hat.array().sqrt() + h.eps);
}

MConfigState::MConfigState(std::size_t losses, std::size_t dimension, AdamHyperParams hp)
    : hyper(hp),
      loss_first(losses, Vector::Zero(static_cast<Eigen::Index>(dimension))),
      loss_steps(losses, 0),
      pseudo_first(Vector::Zero(static_cast<Eigen::Index>(dimension))),
      second(Vector::Zero(static_cast<Eigen::Index>(dimension))) {
  if (losses == 0) throw std::invalid_argument("MConfigState: need at least one loss");
  hyper.validate();
}

void mconfig_step(MConfigState& state, std::size_t loss_index, const Vector& gradient,
                  Vector& params) {
  if (loss_index >= state.losses()) {
    throw std::out_of_range("mconfig_step: loss index " + std::to_string(loss_index) +
                            " out of range for " + std::to_string(state.losses()) + " losses");
  }
  check_step_inputs(gradient, params, state.pseudo_first.size(), "mconfig_step");
  const auto& h = state.hyper;

  state.step += 1;
  state.loss_steps[loss_index] += 1;
  state.loss_first[loss_index] =
      h.beta1 * state.loss_first[loss_index] + (1.0 - h.beta1) * gradient;

  std::vector<Vector> corrected;
  corrected.reserve(state.losses());
  for (std::size_t j = 0; j < state.losses(); ++j) {
    if (state.loss_steps[j] == 0) continue;
    corrected.push_back(bias_corrected(state.loss_first[j], h.beta1, state.loss_steps[j]));
  }
  const Vector m_hat_g = config_update(GradientSet(corrected), state.config_eps).update;

  const double t = static_cast<double>(state.step);
  const Vector estimated =
      (m_hat_g * (1.0 - std::pow(h.beta1, t)) - h.beta1 * state.pseudo_first) / (1.0 - h.beta1);
  state.pseudo_first = h.beta1 * state.pseudo_first + (1.0 - h.beta1) * estimated;
  state.second = h.beta2 * state.second + (1.0 - h.beta2) * estimated.cwiseAbs2();
  const Vector v_hat = bias_corrected(state.second, h.beta2, state.step);
  params.array() -= h.lr * m_hat_g.array() / (v_hat.array().sqrt() + h.eps);
}

MAConfigState::MAConfigState(std::size_t losses, std::size_t dimension, AdamHyperParams hp)
    : hyper(hp),
      loss_first(losses, Vector::Zero(static_cast<Eigen::Index>(dimension))),
      loss_second(losses, Vector::Zero(static_cast<Eigen::Index>(dimension))),
      loss_steps(losses, 0) {
  if (losses == 0) throw std::invalid_argument("MAConfigState: need at least one loss");
  hyper.validate();
}

void maconfig_step(MAConfigState& state, std::size_t loss_index, const Vector& gradient,
                   Vector& params) {
  if (loss_index >= state.losses()) {
    throw std::out_of_range("maconfig_step: loss index " + std::to_string(loss_index) +
                            " out of range for " + std::to_string(state.losses()) + " losses");
  }
  check_step_inputs(gradient, params, state.loss_first.front().size(), "maconfig_step");
  const auto& h = state.hyper;

  // Work on copies so a NaN abort leaves the state untouched.
  const Vector first = h.beta1 * state.loss_first[loss_index] + (1.0 - h.beta1) * gradient;
  const Vector second =
      h.beta2 * state.loss_second[loss_index] + (1.0 - h.beta2) * gradient.cwiseAbs2();
  const std::uint64_t visits = state.loss_steps[loss_index] + 1;

  std::vector<Vector> rescaled;
  rescaled.reserve(state.losses());
  for (std::size_t j = 0; j < state.losses(); ++j) {
    const bool current = j == loss_index;
    const std::uint64_t tj = current ? visits : state.loss_steps[j];
    if (tj == 0) continue;
    const Vector m_hat = bias_corrected(current ? first : state.loss_first[j], h.beta1, tj);
    const Vector v_hat = bias_corrected(current ? second : state.loss_second[j], h.beta2, tj);
    rescaled.push_back((m_hat.array() / (v_hat.array().sqrt() + h.eps)).matrix());
    if (!rescaled.back().allFinite()) {
      throw NonFiniteError("maconfig_step: NaN in rescaled momentum of loss " + std::to_string(j));
    }
  }
  const Vector update = config_update(GradientSet(rescaled), state.config_eps).update;
  if (!update.allFinite()) throw NonFiniteError("maconfig_step: NaN in ConFIG update");

  state.step += 1;
  state.loss_steps[loss_index] = visits;
  state.loss_first[loss_index] = first;
  state.loss_second[loss_index] = second;
  params -= h.lr * update;
}

}  // namespace config
