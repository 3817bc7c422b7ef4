#include "config/burgers_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>

namespace config {

namespace {

// Sixth-order central stencils, offsets 1..3.
constexpr double kFirst[3] = {3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0};
constexpr double kSecondCenter = -49.0 / 18.0;
constexpr double kSecond[3] = {3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0};

// du/dt on the periodic grid of n unknowns.
void rhs(const std::vector<double>& u, double dx, double nu, std::vector<double>& flux,
         std::vector<double>& out) {
  const std::size_t n = u.size();
  for (std::size_t i = 0; i < n; ++i) flux[i] = 0.5 * u[i] * u[i];
  const double inv_dx = 1.0 / dx;
  const double inv_dx2 = inv_dx * inv_dx;
  for (std::size_t i = 0; i < n; ++i) {
    double dflux = 0.0;
    double lap = kSecondCenter * u[i];
    for (std::size_t k = 1; k <= 3; ++k) {
      const std::size_t ip = (i + k) % n;
      const std::size_t im = (i + n - k) % n;
      dflux += kFirst[k - 1] * (flux[ip] - flux[im]);
      lap += kSecond[k - 1] * (u[ip] + u[im]);
    }
    out[i] = -dflux * inv_dx + nu * lap * inv_dx2;
  }
}

}  // namespace

double burgers_default_nu() { return 0.01 / std::numbers::pi; }

bool burgers_step_stable(double dt, double dx, double nu, double umax) {
  constexpr int kSamples = 2048;
  for (int s = 0; s <= kSamples; ++s) {
    const double theta = std::numbers::pi * s / kSamples;
    double first = 0.0;
    double second = kSecondCenter;
    for (int k = 1; k <= 3; ++k) {
      first += 2.0 * kFirst[k - 1] * std::sin(k * theta);
      second += 2.0 * kSecond[k - 1] * std::cos(k * theta);
    }
    const std::complex<double> z(dt * nu * second / (dx * dx), -dt * umax * first / dx);
    const std::complex<double> amp = 1.0 + z + z * z / 2.0 + z * z * z / 6.0 + z * z * z * z / 24.0;
    if (std::abs(amp) > 1.0 + 1e-12) return false;
  }
  return true;
}

double burgers_suggested_dt(double dx, double nu, double umax) {
  double lo = 0.0;
  double hi = 10.0 * dx;
  while (burgers_step_stable(hi, dx, nu, umax)) hi *= 2.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (burgers_step_stable(mid, dx, nu, umax) ? lo : hi) = mid;
  }
  return 0.9 * lo;
}

BurgersGroundTruth fd_burgers_oracle(std::size_t cells, std::size_t steps, double nu) {
  if (cells < 8) throw std::invalid_argument("fd_burgers_oracle: need at least 8 cells");
  if (steps == 0) throw std::invalid_argument("fd_burgers_oracle: need at least one step");
  if (!(nu > 0.0)) throw std::invalid_argument("fd_burgers_oracle: viscosity must be positive");
  const double dx = 2.0 / static_cast<double>(cells);
  const double dt = 1.0 / static_cast<double>(steps);

  std::vector<double> u(cells);
  for (std::size_t i = 0; i < cells; ++i) u[i] = -std::sin(std::numbers::pi * (-1.0 + dx * i));
  double umax = 0.0;
  for (double v : u) umax = std::max(umax, std::abs(v));
  if (!burgers_step_stable(dt, dx, nu, umax)) {
    const double suggested = burgers_suggested_dt(dx, nu, umax);
    const auto min_steps = static_cast<std::size_t>(std::ceil(1.0 / suggested));
    throw CflError("fd_burgers_oracle: dt = " + std::to_string(dt) + " is unstable for " +
                       std::to_string(cells) + " cells; use dt <= " + std::to_string(suggested) +
                       " (at least " + std::to_string(min_steps) + " steps)",
                   suggested);
  }

  Matrix values(static_cast<Eigen::Index>(steps + 1), static_cast<Eigen::Index>(cells + 1));
  auto store = [&](std::size_t level) {
    for (std::size_t i = 0; i < cells; ++i) values(level, i) = u[i];
    values(level, cells) = u[0];
  };
  store(0);
  // Exact boundary and initial values; the scheme preserves them up to rounding.
  for (std::size_t i = 0; i <= cells; ++i) {
    values(0, i) = -std::sin(std::numbers::pi * (-1.0 + dx * i));
  }

  const std::size_t n = cells;
  std::vector<double> k1(n), k2(n), k3(n), k4(n), stage(n), flux(n);
  for (std::size_t level = 1; level <= steps; ++level) {
    rhs(u, dx, nu, flux, k1);
    for (std::size_t i = 0; i < n; ++i) stage[i] = u[i] + 0.5 * dt * k1[i];
    rhs(stage, dx, nu, flux, k2);
    for (std::size_t i = 0; i < n; ++i) stage[i] = u[i] + 0.5 * dt * k2[i];
    rhs(stage, dx, nu, flux, k3);
    for (std::size_t i = 0; i < n; ++i) stage[i] = u[i] + dt * k3[i];
    rhs(stage, dx, nu, flux, k4);
    for (std::size_t i = 0; i < n; ++i) {
      u[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    store(level);
    values(level, 0) = 0.0;
    values(level, cells) = 0.0;
  }
  return BurgersGroundTruth(cells, steps, nu, std::move(values));
}

BurgersGroundTruth::BurgersGroundTruth(std::size_t cells, std::size_t steps, double nu,
                                       Matrix values)
    : cells_(cells), steps_(steps), nu_(nu), values_(std::move(values)) {
  if (values_.rows() != static_cast<Eigen::Index>(steps + 1) ||
      values_.cols() != static_cast<Eigen::Index>(cells + 1)) {
    throw std::invalid_argument("BurgersGroundTruth: table shape does not match the grid");
  }
}

double BurgersGroundTruth::operator()(double x, double t) const {
  if (!(x >= -1.0 && x <= 1.0 && t >= 0.0 && t <= 1.0)) {
    throw std::out_of_range("BurgersGroundTruth: point outside [-1,1] x [0,1]");
  }
  const double fx = (x + 1.0) / dx();
  const double ft = t / dt();
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(fx), cells_ - 1);
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(ft), steps_ - 1);
  const double ax = fx - static_cast<double>(i);
  const double at = ft - static_cast<double>(n);
  const auto r = static_cast<Eigen::Index>(n);
  const auto c = static_cast<Eigen::Index>(i);
  const double lower = (1.0 - ax) * values_(r, c) + ax * values_(r, c + 1);
  const double upper = (1.0 - ax) * values_(r + 1, c) + ax * values_(r + 1, c + 1);
  return (1.0 - at) * lower + at * upper;
}

Matrix BurgersGroundTruth::evaluate(const Matrix& points) const {
  if (points.rows() != 2) throw std::invalid_argument("BurgersGroundTruth: points must be 2 x n");
  Matrix out(1, points.cols());
  for (Eigen::Index j = 0; j < points.cols(); ++j) out(0, j) = (*this)(points(0, j), points(1, j));
  return out;
}

void BurgersGroundTruth::write_csv(const std::string& path, std::size_t time_stride) const {
  if (time_stride == 0) throw std::invalid_argument("write_csv: time stride must be positive");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.precision(17);
  out << "x,t,u\n";
  for (std::size_t n = 0; n <= steps_; n += time_stride) {
    for (std::size_t i = 0; i <= cells_; ++i) {
      out << x(i) << ',' << t(n) << ','
          << values_(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(i)) << '\n';
    }
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

double refinement_change(const BurgersGroundTruth& coarse, const BurgersGroundTruth& fine) {
  if (fine.cells() != 2 * coarse.cells() || fine.steps() % coarse.steps() != 0) {
    throw std::invalid_argument(
        "refinement_change: fine grid must double the cells and refine the time levels");
  }
  const std::size_t time_ratio = fine.steps() / coarse.steps();
  double diff = 0.0;
  double norm = 0.0;
  for (std::size_t n = 0; n <= coarse.steps(); ++n) {
    for (std::size_t i = 0; i <= coarse.cells(); ++i) {
      const double a = coarse.values()(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(i));
      const double b = fine.values()(static_cast<Eigen::Index>(n * time_ratio),
                                     static_cast<Eigen::Index>(2 * i));
      diff += (a - b) * (a - b);
      norm += b * b;
    }
  }
  return std::sqrt(diff / norm);
}

}  // namespace config
