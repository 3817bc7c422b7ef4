#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "config/vecmath.hpp"

// Reference solution of the viscous Burgers equation
//   u_t + u u_x = nu u_xx,  x in [-1, 1], t in [0, 1],  u(x, 0) = -sin(pi x),  u(+-1, t) = 0,
// from a sixth-order conservative finite-difference discretization with classic RK4.
// The initial state is odd and 2-periodic, so the Dirichlet problem is solved on the
// periodic domain, where the zero boundary values hold by symmetry.

namespace config {

/// Explicit step too large for the scheme. `suggested_dt` is a stable step size.
class CflError : public std::runtime_error {
 public:
  CflError(const std::string& what, double suggested_dt)
      : std::runtime_error(what), suggested_dt_(suggested_dt) {}
  double suggested_dt() const { return suggested_dt_; }

 private:
  double suggested_dt_;
};

/// Tabulated field on a uniform (x, t) grid with bilinear interpolation.
class BurgersGroundTruth {
 public:
  BurgersGroundTruth(std::size_t cells, std::size_t steps, double nu, Matrix values);

  std::size_t cells() const { return cells_; }
  std::size_t steps() const { return steps_; }
  double nu() const { return nu_; }
  double dx() const { return 2.0 / static_cast<double>(cells_); }
  double dt() const { return 1.0 / static_cast<double>(steps_); }
  double x(std::size_t i) const { return -1.0 + dx() * static_cast<double>(i); }
  double t(std::size_t n) const { return dt() * static_cast<double>(n); }

  /// Row n holds the state at time level n; columns are the cells + 1 grid points.
  const Matrix& values() const { return values_; }

  /// Field value at (x, t) inside the domain; throws std::out_of_range outside it.
  double operator()(double x, double t) const;
  /// Evaluates a (2 x n) batch of (x, t) columns into a 1 x n row.
  Matrix evaluate(const Matrix& points) const;

  /// Writes `x,t,u` rows (header included), every `time_stride`-th time level.
  void write_csv(const std::string& path, std::size_t time_stride = 1) const;

 private:
  std::size_t cells_;
  std::size_t steps_;
  double nu_;
  Matrix values_;
};

/// True when RK4 with the sixth-order operators is linearly stable for this step,
/// using frozen coefficients with advection speed `umax`.
bool burgers_step_stable(double dt, double dx, double nu, double umax);

/// Largest stable step (bisection on the stability test) scaled by 0.9.
double burgers_suggested_dt(double dx, double nu, double umax);

/// Solves on `cells` uniform cells (cells + 1 points including both ends) with `steps`
/// equal time steps up to t = 1. Throws CflError when the step is unstable and
/// std::invalid_argument for degenerate grids.
BurgersGroundTruth fd_burgers_oracle(std::size_t cells, std::size_t steps, double nu);

/// Relative L2 difference between a solution and a refinement with twice the cells
/// (and any multiple of the time levels), compared on the coarse grid points at the
/// coarse time levels.
double refinement_change(const BurgersGroundTruth& coarse, const BurgersGroundTruth& fine);

/// Default viscosity 0.01 / pi.
double burgers_default_nu();

}  // namespace config
