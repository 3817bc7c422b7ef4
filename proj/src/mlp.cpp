#include "config/mlp.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace config {

namespace {

std::vector<std::size_t> layer_widths(const MlpShape& s) {
  std::vector<std::size_t> widths{s.inputs};
  widths.insert(widths.end(), s.hidden.begin(), s.hidden.end());
  widths.push_back(s.outputs);
  return widths;
}

}  // namespace

std::size_t MlpShape::parameter_count() const {
  const auto widths = layer_widths(*this);
  std::size_t count = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) count += widths[l + 1] * (widths[l] + 1);
  return count;
}

Mlp::Mlp(MlpShape shape) : shape_(std::move(shape)) {
  if (shape_.inputs == 0 || shape_.outputs == 0) throw std::invalid_argument("Mlp: empty layer");
  const auto widths = layer_widths(shape_);
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    if (widths[l + 1] == 0) throw std::invalid_argument("Mlp: zero-width hidden layer");
    weights_.push_back(Matrix::Zero(static_cast<Eigen::Index>(widths[l + 1]),
                                    static_cast<Eigen::Index>(widths[l])));
    biases_.push_back(Vector::Zero(static_cast<Eigen::Index>(widths[l + 1])));
  }
}

Mlp Mlp::xavier(MlpShape shape, std::uint64_t seed) {
  Mlp net(std::move(shape));
  std::mt19937_64 rng(seed);
  for (auto& w : net.weights_) {
    const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = dist(rng);
    }
  }
  return net;
}

Vector Mlp::parameters() const {
  Vector flat(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index pos = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const auto& w = weights_[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      flat.segment(pos, w.cols()) = w.row(r).transpose();
      pos += w.cols();
    }
    flat.segment(pos, biases_[l].size()) = biases_[l];
    pos += biases_[l].size();
  }
  return flat;
}

void Mlp::set_parameters(const Vector& flat) {
  if (flat.size() != static_cast<Eigen::Index>(parameter_count())) {
    throw std::invalid_argument("Mlp::set_parameters: expected " +
                                std::to_string(parameter_count()) + " values, got " +
                                std::to_string(flat.size()));
  }
  Eigen::Index pos = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    auto& w = weights_[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      w.row(r) = flat.segment(pos, w.cols()).transpose();
      pos += w.cols();
    }
    biases_[l] = flat.segment(pos, biases_[l].size());
    pos += biases_[l].size();
  }
}

std::vector<ad::Var> Mlp::parameter_leaves() const {
  std::vector<ad::Var> leaves;
  leaves.reserve(2 * weights_.size());
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    leaves.push_back(ad::variable(weights_[l]));
    leaves.push_back(ad::variable(biases_[l]));
  }
  return leaves;
}

ad::Var Mlp::forward(std::span<const ad::Var> params, const ad::Var& inputs) const {
  if (params.size() != 2 * weights_.size()) {
    throw std::invalid_argument("Mlp::forward: wrong number of parameter leaves");
  }
  if (inputs.rows() != static_cast<Eigen::Index>(shape_.inputs)) {
    throw std::invalid_argument("Mlp::forward: input dimension " + std::to_string(inputs.rows()) +
                                ", expected " + std::to_string(shape_.inputs));
  }
  ad::Var h = inputs;
  const std::size_t layers = weights_.size();
  for (std::size_t l = 0; l < layers; ++l) {
    h = ad::add_bias(ad::matmul(params[2 * l], h), params[2 * l + 1]);
    if (l + 1 < layers && shape_.activation == Activation::kTanh) h = ad::tanh(h);
  }
  return h;
}

Matrix Mlp::evaluate(const Matrix& inputs) const {
  if (inputs.rows() != static_cast<Eigen::Index>(shape_.inputs)) {
    throw std::invalid_argument("Mlp::evaluate: input dimension mismatch");
  }
  Matrix h = inputs;
  const std::size_t layers = weights_.size();
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix z = weights_[l] * h;
    z.colwise() += biases_[l];
    if (l + 1 < layers && shape_.activation == Activation::kTanh) z = z.array().tanh().matrix();
    h = std::move(z);
  }
  return h;
}

Vector Mlp::flatten(std::span<const Matrix> leaf_grads) const {
  if (leaf_grads.size() != 2 * weights_.size()) {
    throw std::invalid_argument("Mlp::flatten: wrong number of gradient blocks");
  }
  Vector flat(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index pos = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const Matrix& gw = leaf_grads[2 * l];
    for (Eigen::Index r = 0; r < gw.rows(); ++r) {
      flat.segment(pos, gw.cols()) = gw.row(r).transpose();
      pos += gw.cols();
    }
    const Matrix& gb = leaf_grads[2 * l + 1];
    flat.segment(pos, gb.rows()) = gb.col(0);
    pos += gb.rows();
  }
  return flat;
}

}  // namespace config
