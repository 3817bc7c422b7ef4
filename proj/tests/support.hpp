#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "config/vecmath.hpp"

namespace testing_support {

inline config::Vector normal_vector(std::mt19937_64& rng, Eigen::Index k) {
  std::normal_distribution<double> dist;
  config::Vector v(k);
  for (Eigen::Index i = 0; i < k; ++i) v(i) = dist(rng);
  return v;
}

inline config::GradientSet normal_set(std::mt19937_64& rng, std::size_t m, Eigen::Index k) {
  std::vector<config::Vector> rows;
  for (std::size_t i = 0; i < m; ++i) rows.push_back(normal_vector(rng, k));
  return config::GradientSet(rows);
}

inline double relative_spread(const std::vector<double>& xs) {
  double lo = xs.front();
  double hi = xs.front();
  for (double x : xs) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  return (hi - lo) / std::max(std::abs(hi), std::abs(lo));
}

// The failure set where PCGrad conflicts with g1.
inline std::vector<config::Vector> pcgrad_failure_vectors() {
  const double s = std::sqrt(3.0) / 2.0;
  return {config::make_vector({1.0, 0.0, 0.1}), config::make_vector({-0.5, s, 0.1}),
          config::make_vector({-0.5, -s, 0.1})};
}

// The failure set where IMTL-G points against every gradient.
inline std::vector<config::Vector> imtlg_failure_vectors() {
  return {config::make_vector({0.0412, 0.4295, 0.9394}),
          config::make_vector({0.3571, 0.5491, 0.1414}),
          config::make_vector({0.9823, 0.9361, 0.0552})};
}

// |a - b| relative to the larger magnitude, floored at `floor`.
inline double relative_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max(floor, std::max(std::abs(a), std::abs(b)));
}

}  // namespace testing_support
