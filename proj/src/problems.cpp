#include "config/problems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace config {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_index(std::size_t i, std::size_t m, const char* who) {
  if (i >= m) {
    throw std::out_of_range(std::string(who) + ": loss index " + std::to_string(i) +
                            " out of range for " + std::to_string(m) + " losses");
  }
}

// Which losses must be built to serve a request.
std::vector<std::size_t> needed_losses(const EvalRequest& request, std::size_t m) {
  std::vector<std::size_t> which;
  if (request.all_values || request.summed_gradient) {
    which.resize(m);
    std::iota(which.begin(), which.end(), std::size_t{0});
    return which;
  }
  for (std::size_t i : request.gradients) {
    require_index(i, m, "evaluate");
    if (std::find(which.begin(), which.end(), i) == which.end()) which.push_back(i);
  }
  std::sort(which.begin(), which.end());
  return which;
}

// Batch seed for (run seed, iteration).
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

Matrix scale_to_box(const Matrix& unit, const Vector& lo, const Vector& hi) {
  Matrix out = unit;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    out.row(r) = (lo(r) + (hi(r) - lo(r)) * unit.row(r).array()).matrix();
  }
  return out;
}

double mean_square(const Matrix& m) { return m.squaredNorm() / static_cast<double>(m.size()); }

}  // namespace

// ---------------------------------------------------------------------------
// AnalyticLossSet

AnalyticLossSet::AnalyticLossSet(std::string name, std::vector<AnalyticLoss> losses, Vector start,
                                 std::optional<Vector> minimizer)
    : name_(std::move(name)),
      losses_(std::move(losses)),
      start_(std::move(start)),
      minimizer_(std::move(minimizer)) {
  if (losses_.empty()) throw std::invalid_argument("AnalyticLossSet: need at least one loss");
  if (minimizer_ && minimizer_->size() != start_.size()) {
    throw std::invalid_argument("AnalyticLossSet: minimizer dimension mismatch");
  }
}

std::vector<std::string> AnalyticLossSet::loss_names() const {
  std::vector<std::string> names;
  for (const auto& l : losses_) names.push_back(l.name);
  return names;
}

Vector AnalyticLossSet::initial_parameters(std::uint64_t seed) const {
  if (seed == 0) return start_;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.25, 0.25);
  Vector p = start_;
  for (Eigen::Index i = 0; i < p.size(); ++i) p(i) += jitter(rng);
  return p;
}

double AnalyticLossSet::value(std::size_t i, const Vector& params, std::uint64_t iteration) const {
  require_index(i, losses_.size(), "AnalyticLossSet::value");
  return losses_[i].value(params, iteration);
}

Vector AnalyticLossSet::gradient(std::size_t i, const Vector& params,
                                 std::uint64_t iteration) const {
  require_index(i, losses_.size(), "AnalyticLossSet::gradient");
  return losses_[i].gradient(params, iteration);
}

double AnalyticLossSet::total(const Vector& params, std::uint64_t iteration) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < losses_.size(); ++i) sum += value(i, params, iteration);
  return sum;
}

Evaluation AnalyticLossSet::evaluate(const Vector& params, const BatchKey& batch,
                                     const EvalRequest& request) const {
  if (params.size() != start_.size()) {
    throw std::invalid_argument("AnalyticLossSet::evaluate: parameter dimension mismatch");
  }
  const std::size_t m = losses_.size();
  Evaluation out;
  out.values.assign(m, kNaN);
  for (std::size_t i : needed_losses(request, m)) out.values[i] = value(i, params, batch.iteration);
  for (std::size_t i : request.gradients) {
    out.gradients.push_back(gradient(i, params, batch.iteration));
    ++out.backprops;
  }
  if (request.summed_gradient) {
    out.summed = Vector::Zero(params.size());
    for (std::size_t i = 0; i < m; ++i) out.summed += gradient(i, params, batch.iteration);
    ++out.backprops;
  }
  return out;
}

double AnalyticLossSet::test_error(const Vector& params) const {
  if (minimizer_) return (params - *minimizer_).squaredNorm();
  return total(params);
}

// ---------------------------------------------------------------------------
// Synthetic landscapes

std::unique_ptr<AnalyticLossSet> toy_landscape() {
  using K = ToyLandscapeConstants;
  std::vector<Vector> pits;
  for (double degrees : {90.0, 210.0, 330.0}) {
    const double a = degrees * std::numbers::pi / 180.0;
    pits.push_back(make_vector({K::kPitRadius * std::cos(a), K::kPitRadius * std::sin(a)}));
  }
  const double two_s2 = 2.0 * K::kPitWidth * K::kPitWidth;
  // Constant that puts L2 at exactly zero in the origin.
  double offset = 0.0;
  for (const auto& p : pits) offset += std::exp(-p.squaredNorm() / two_s2);

  AnalyticLoss l1{
      "L1",
      [](const Vector& t, std::uint64_t) {
        return K::kL1Floor + 0.5 * (K::kL1CurvatureX * t(0) * t(0) + K::kL1CurvatureY * t(1) * t(1));
      },
      [](const Vector& t, std::uint64_t) {
        return make_vector({K::kL1CurvatureX * t(0), K::kL1CurvatureY * t(1)});
      }};
  AnalyticLoss l2{
      "L2",
      [pits, two_s2, offset](const Vector& t, std::uint64_t) {
        double v = 0.5 * t.squaredNorm() + K::kPitDepth * offset;
        for (const auto& p : pits) v -= K::kPitDepth * std::exp(-(t - p).squaredNorm() / two_s2);
        return v;
      },
      [pits, two_s2](const Vector& t, std::uint64_t) {
        Vector g = t;
        for (const auto& p : pits) {
          const Vector d = t - p;
          g += K::kPitDepth * std::exp(-d.squaredNorm() / two_s2) * (2.0 / two_s2) * d;
        }
        return g;
      }};
  return std::make_unique<AnalyticLossSet>(
      "toy", std::vector<AnalyticLoss>{l1, l2}, make_vector({K::kStartX, K::kStartY}),
      Vector::Zero(2));
}

std::unique_ptr<AnalyticLossSet> ripple_landscape(double a, const Vector& center,
                                                  const Vector& direction) {
  if (center.size() != direction.size() || direction.norm() == 0.0) {
    throw std::invalid_argument("ripple_landscape: bad center or direction");
  }
  const Vector d = direction.normalized();
  AnalyticLoss l1{"L1",
                  [center](const Vector& t, std::uint64_t) { return 0.05 * (t - center).squaredNorm(); },
                  [center](const Vector& t, std::uint64_t) -> Vector { return 0.1 * (t - center); }};
  AnalyticLoss l2{"L2",
                  [a, center, d](const Vector& t, std::uint64_t) {
                    const Vector r = t - center;
                    return 1.0 - std::cos(a * r.dot(d)) + 0.1 * r.squaredNorm();
                  },
                  [a, center, d](const Vector& t, std::uint64_t) -> Vector {
                    const Vector r = t - center;
                    return a * std::sin(a * r.dot(d)) * d + 0.2 * r;
                  }};
  Vector start = center + 2.2 * d;
  if (start.size() > 1) start(1) += 0.7;
  return std::make_unique<AnalyticLossSet>("ripple", std::vector<AnalyticLoss>{l1, l2}, start,
                                           center);
}

double ripple_lipschitz(double a) { return a * a + 0.3; }

namespace {

std::vector<AnalyticLoss> quadratic_losses(const std::vector<Matrix>& curvatures,
                                           const std::vector<Vector>& centers) {
  std::vector<AnalyticLoss> losses;
  for (std::size_t i = 0; i < curvatures.size(); ++i) {
    const Matrix a = curvatures[i];
    const Vector c = centers[i];
    losses.push_back({"q" + std::to_string(i + 1),
                      [a, c](const Vector& t, std::uint64_t) {
                        const Vector r = t - c;
                        return 0.5 * r.dot(a * r);
                      },
                      [a, c](const Vector& t, std::uint64_t) -> Vector { return a * (t - c); }});
  }
  return losses;
}

Vector quadratic_minimizer(const std::vector<Matrix>& curvatures,
                           const std::vector<Vector>& centers) {
  if (curvatures.empty() || curvatures.size() != centers.size()) {
    throw std::invalid_argument("QuadraticSuite: need matching curvatures and centers");
  }
  Matrix total = Matrix::Zero(curvatures[0].rows(), curvatures[0].cols());
  Vector rhs = Vector::Zero(centers[0].size());
  for (std::size_t i = 0; i < curvatures.size(); ++i) {
    total += curvatures[i];
    rhs += curvatures[i] * centers[i];
  }
  return total.ldlt().solve(rhs);
}

}  // namespace

QuadraticSuite::QuadraticSuite(std::vector<Matrix> curvatures, std::vector<Vector> centers,
                               Vector start)
    : AnalyticLossSet("quadratic", quadratic_losses(curvatures, centers), std::move(start),
                      quadratic_minimizer(curvatures, centers)),
      curvatures_(std::move(curvatures)),
      centers_(std::move(centers)) {
  Matrix total = Matrix::Zero(curvatures_[0].rows(), curvatures_[0].cols());
  for (const auto& a : curvatures_) total += a;
  lipschitz_ = Eigen::SelfAdjointEigenSolver<Matrix>(total, Eigen::EigenvaluesOnly)
                   .eigenvalues()
                   .maxCoeff();
}

std::unique_ptr<QuadraticSuite> quadratic_suite(std::size_t m, std::size_t k, std::uint64_t seed) {
  if (m == 0 || k == 0) throw std::invalid_argument("quadratic_suite: m and k must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const auto n = static_cast<Eigen::Index>(k);
  std::vector<Matrix> curvatures;
  std::vector<Vector> centers;
  for (std::size_t i = 0; i < m; ++i) {
    Matrix q(n, n);
    for (Eigen::Index j = 0; j < q.size(); ++j) q.data()[j] = normal(rng);
    curvatures.push_back(q * q.transpose() / static_cast<double>(k) + 0.1 * Matrix::Identity(n, n));
    Vector c(n);
    for (Eigen::Index j = 0; j < n; ++j) c(j) = normal(rng);
    centers.push_back(c);
  }
  Vector start(n);
  for (Eigen::Index j = 0; j < n; ++j) start(j) = 2.0 * normal(rng);
  return std::make_unique<QuadraticSuite>(std::move(curvatures), std::move(centers),
                                          std::move(start));
}

std::vector<Vector> pcgrad_failure_vectors() {
  const double s = std::sqrt(3.0) / 2.0;
  return {make_vector({1.0, 0.0, 0.1}), make_vector({-0.5, s, 0.1}), make_vector({-0.5, -s, 0.1})};
}

std::vector<Vector> imtlg_failure_vectors() {
  return {make_vector({0.0412, 0.4295, 0.9394}), make_vector({0.3571, 0.5491, 0.1414}),
          make_vector({0.9823, 0.9361, 0.0552})};
}

std::unique_ptr<AnalyticLossSet> failure_vector_losses() {
  const auto even = pcgrad_failure_vectors();
  const auto odd = imtlg_failure_vectors();
  std::vector<AnalyticLoss> losses;
  for (std::size_t i = 0; i < 3; ++i) {
    auto pick = [even, odd, i](std::uint64_t iteration) -> const Vector& {
      return iteration % 2 == 0 ? even[i] : odd[i];
    };
    losses.push_back({"g" + std::to_string(i + 1),
                      [pick](const Vector& t, std::uint64_t it) { return pick(it).dot(t); },
                      [pick](const Vector&, std::uint64_t it) { return pick(it); }});
  }
  return std::make_unique<AnalyticLossSet>("failure_vectors", std::move(losses), Vector::Zero(3),
                                           std::nullopt);
}

// ---------------------------------------------------------------------------
// PINN infrastructure

PinnSettings burgers_settings() { return PinnSettings{}; }

PinnSettings kovasznay_settings() {
  PinnSettings s;
  s.net.outputs = 3;
  s.residual_points = 20000;
  s.boundary_points = 1000;
  s.initial_points = 0;
  return s;
}

Matrix latin_hypercube(std::size_t n, std::size_t d, std::mt19937_64& rng) {
  Matrix out(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::size_t> strata(n);
  for (std::size_t r = 0; r < d; ++r) {
    std::iota(strata.begin(), strata.end(), std::size_t{0});
    std::shuffle(strata.begin(), strata.end(), rng);
    for (std::size_t j = 0; j < n; ++j) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) =
          (static_cast<double>(strata[j]) + unit(rng)) / static_cast<double>(n);
    }
  }
  return out;
}

PinnProblem::PinnProblem(PinnSettings settings) : settings_(std::move(settings)) {
  if (settings_.residual_points == 0 || settings_.boundary_points == 0) {
    throw std::invalid_argument("PinnProblem: sample counts must be positive");
  }
  if (settings_.test_points == 0) throw std::invalid_argument("PinnProblem: need test points");
}

Vector PinnProblem::initial_parameters(std::uint64_t seed) const {
  return Mlp::xavier(settings_.net, seed).parameters();
}

void PinnProblem::prepare_test_set() const {
  std::call_once(test_once_, [this] {
    std::mt19937_64 rng(settings_.test_seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const Vector lo = lower();
    const Vector hi = upper();
    Matrix u(lo.size(), static_cast<Eigen::Index>(settings_.test_points));
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
      for (Eigen::Index r = 0; r < u.rows(); ++r) u(r, j) = unit(rng);
    }
    test_points_ = scale_to_box(u, lo, hi);
    test_values_ = ground_truth(test_points_);
  });
}

const Matrix& PinnProblem::test_points() const {
  prepare_test_set();
  return test_points_;
}

const Matrix& PinnProblem::test_values() const {
  prepare_test_set();
  return test_values_;
}

Field PinnProblem::network_field(const Mlp& net, std::span<const ad::Var> leaves) const {
  std::vector<ad::Var> held(leaves.begin(), leaves.end());
  return [&net, held](const ad::Var& inputs) { return net.forward(held, inputs); };
}

Evaluation PinnProblem::evaluate(const Vector& params, const BatchKey& batch,
                                 const EvalRequest& request) const {
  const std::size_t m = num_losses();
  Mlp net(settings_.net);
  net.set_parameters(params);
  const auto leaves = net.parameter_leaves();
  const Field field = network_field(net, leaves);
  const PinnBatch points = sample(batch);

  const auto which = needed_losses(request, m);
  const auto nodes = losses(field, points, which);
  Evaluation out;
  out.values.assign(m, kNaN);
  std::vector<const ad::Var*> by_index(m, nullptr);
  for (std::size_t j = 0; j < which.size(); ++j) {
    out.values[which[j]] = nodes[j].scalar();
    by_index[which[j]] = &nodes[j];
  }
  for (std::size_t i : request.gradients) {
    require_index(i, m, "PinnProblem::evaluate");
    out.gradients.push_back(net.flatten(ad::gradients(*by_index[i], leaves)));
    ++out.backprops;
  }
  if (request.summed_gradient) {
    ad::Var total = nodes[0];
    for (std::size_t j = 1; j < nodes.size(); ++j) total = total + nodes[j];
    out.summed = net.flatten(ad::gradients(total, leaves));
    ++out.backprops;
  }
  return out;
}

double PinnProblem::test_error(const Vector& params) const {
  Mlp net(settings_.net);
  net.set_parameters(params);
  return mean_square(net.evaluate(test_points()) - test_values());
}

// ---------------------------------------------------------------------------
// Burgers

BurgersProblem::BurgersProblem(PinnSettings settings,
                               std::shared_ptr<const BurgersGroundTruth> truth, double nu)
    : PinnProblem(std::move(settings)), truth_(std::move(truth)), nu_(nu) {
  if (settings_.net.inputs != 2 || settings_.net.outputs != 1) {
    throw std::invalid_argument("BurgersProblem: network must map (x, t) to u");
  }
  if (settings_.initial_points == 0) {
    throw std::invalid_argument("BurgersProblem: need initial-condition points");
  }
  if (!truth_) throw std::invalid_argument("BurgersProblem: missing ground truth");
}

std::vector<std::string> BurgersProblem::loss_names() const {
  if (settings_.grouping == LossGrouping::kTwo) return {"residual", "boundary_initial"};
  return {"residual", "boundary", "initial"};
}

PinnBatch BurgersProblem::sample(const BatchKey& key) const {
  std::mt19937_64 rng(mix_seed(key.seed, key.iteration));
  PinnBatch batch;
  batch.residual = scale_to_box(latin_hypercube(settings_.residual_points, 2, rng), lower(), upper());

  const Matrix bt = latin_hypercube(settings_.boundary_points, 1, rng);
  batch.boundary.resize(2, bt.cols());
  for (Eigen::Index j = 0; j < bt.cols(); ++j) {
    batch.boundary(0, j) = j % 2 == 0 ? -1.0 : 1.0;
    batch.boundary(1, j) = bt(0, j);
  }

  const Matrix ix = latin_hypercube(settings_.initial_points, 1, rng);
  batch.initial.resize(2, ix.cols());
  batch.initial.row(0) = (-1.0 + 2.0 * ix.row(0).array()).matrix();
  batch.initial.row(1).setZero();
  return batch;
}

ad::Var BurgersProblem::residual(const Field& field, const Matrix& points) const {
  const ad::Var x = ad::variable(points);
  const ad::Var u = ad::row(field(x), 0);
  const ad::Var du = ad::input_gradient(u, x);
  const ad::Var u_x = ad::row(du, 0);
  const ad::Var u_t = ad::row(du, 1);
  const ad::Var u_xx = ad::row(ad::input_gradient(u_x, x), 0);
  return u_t + u * u_x - nu_ * u_xx;
}

std::vector<ad::Var> BurgersProblem::losses(const Field& field, const PinnBatch& batch,
                                            std::span<const std::size_t> which) const {
  const std::size_t m = num_losses();
  auto boundary_error = [&] { return ad::row(field(ad::constant(batch.boundary)), 0); };
  auto initial_error = [&] {
    const Matrix target = (std::numbers::pi * batch.initial.row(0).array()).sin().matrix();
    return ad::row(field(ad::constant(batch.initial)), 0) + ad::constant(target);
  };
  std::vector<ad::Var> out;
  for (std::size_t i : which) {
    require_index(i, m, "BurgersProblem::losses");
    if (i == 0) {
      out.push_back(ad::mean(ad::square(residual(field, batch.residual))));
    } else if (settings_.grouping == LossGrouping::kTwo) {
      const double count = static_cast<double>(batch.boundary.cols() + batch.initial.cols());
      out.push_back((1.0 / count) * (ad::sum(ad::square(boundary_error())) +
                                     ad::sum(ad::square(initial_error()))));
    } else if (i == 1) {
      out.push_back(ad::mean(ad::square(boundary_error())));
    } else {
      out.push_back(ad::mean(ad::square(initial_error())));
    }
  }
  return out;
}

Matrix BurgersProblem::ground_truth(const Matrix& points) const { return truth_->evaluate(points); }

std::shared_ptr<const BurgersGroundTruth> burgers_reference() {
  static const std::shared_ptr<const BurgersGroundTruth> reference =
      std::make_shared<const BurgersGroundTruth>(
          fd_burgers_oracle(1024, 4096, burgers_default_nu()));
  return reference;
}

std::unique_ptr<BurgersProblem> burgers_problem(PinnSettings settings) {
  return std::make_unique<BurgersProblem>(std::move(settings), burgers_reference());
}

// ---------------------------------------------------------------------------
// Kovasznay

KovasznayProblem::KovasznayProblem(PinnSettings settings, double reynolds)
    : PinnProblem(std::move(settings)), reynolds_(reynolds) {
  if (!(reynolds > 0.0)) throw std::invalid_argument("KovasznayProblem: Reynolds must be > 0");
  if (settings_.net.inputs != 2 || settings_.net.outputs != 3) {
    throw std::invalid_argument("KovasznayProblem: network must map (x, y) to (u, v, p)");
  }
  if (settings_.grouping != LossGrouping::kTwo) {
    throw std::invalid_argument("KovasznayProblem: steady flow has only [L_N, L_B]");
  }
  const double nu = 1.0 / reynolds_;
  lambda_ = 1.0 / (2.0 * nu) -
            std::sqrt(1.0 / (4.0 * nu * nu) + 4.0 * std::numbers::pi * std::numbers::pi);
}

std::vector<std::string> KovasznayProblem::loss_names() const { return {"residual", "boundary"}; }

PinnBatch KovasznayProblem::sample(const BatchKey& key) const {
  std::mt19937_64 rng(mix_seed(key.seed, key.iteration));
  PinnBatch batch;
  batch.residual = scale_to_box(latin_hypercube(settings_.residual_points, 2, rng), lower(), upper());
  // Perimeter walk: bottom, right, top, left.
  const Vector lo = lower();
  const Vector hi = upper();
  const double w = hi(0) - lo(0);
  const double h = hi(1) - lo(1);
  const double perimeter = 2.0 * (w + h);
  const Matrix s = latin_hypercube(settings_.boundary_points, 1, rng);
  batch.boundary.resize(2, s.cols());
  for (Eigen::Index j = 0; j < s.cols(); ++j) {
    double d = s(0, j) * perimeter;
    double x;
    double y;
    if (d < w) {
      x = lo(0) + d;
      y = lo(1);
    } else if ((d -= w) < h) {
      x = hi(0);
      y = lo(1) + d;
    } else if ((d -= h) < w) {
      x = hi(0) - d;
      y = hi(1);
    } else {
      d -= w;
      x = lo(0);
      y = hi(1) - d;
    }
    batch.boundary(0, j) = x;
    batch.boundary(1, j) = y;
  }
  return batch;
}

std::vector<ad::Var> KovasznayProblem::residuals(const Field& field, const Matrix& points) const {
  const ad::Var xy = ad::variable(points);
  const ad::Var out = field(xy);
  const ad::Var u = ad::row(out, 0);
  const ad::Var v = ad::row(out, 1);
  const ad::Var p = ad::row(out, 2);
  const ad::Var du = ad::input_gradient(u, xy);
  const ad::Var dv = ad::input_gradient(v, xy);
  const ad::Var dp = ad::input_gradient(p, xy);
  const ad::Var u_x = ad::row(du, 0);
  const ad::Var u_y = ad::row(du, 1);
  const ad::Var v_x = ad::row(dv, 0);
  const ad::Var v_y = ad::row(dv, 1);
  const ad::Var lap_u = ad::row(ad::input_gradient(u_x, xy), 0) + ad::row(ad::input_gradient(u_y, xy), 1);
  const ad::Var lap_v = ad::row(ad::input_gradient(v_x, xy), 0) + ad::row(ad::input_gradient(v_y, xy), 1);
  const double nu = 1.0 / reynolds_;
  return {u * u_x + v * u_y + ad::row(dp, 0) - nu * lap_u,
          u * v_x + v * v_y + ad::row(dp, 1) - nu * lap_v, u_x + v_y};
}

std::vector<ad::Var> KovasznayProblem::losses(const Field& field, const PinnBatch& batch,
                                              std::span<const std::size_t> which) const {
  std::vector<ad::Var> out;
  for (std::size_t i : which) {
    require_index(i, 2, "KovasznayProblem::losses");
    if (i == 0) {
      const auto r = residuals(field, batch.residual);
      out.push_back(ad::mean(ad::square(r[0])) + ad::mean(ad::square(r[1])) +
                    ad::mean(ad::square(r[2])));
    } else {
      const ad::Var error = field(ad::constant(batch.boundary)) -
                            ad::constant(ground_truth(batch.boundary));
      // Mean over points of the squared error summed over (u, v, p).
      out.push_back((1.0 / static_cast<double>(batch.boundary.cols())) *
                    ad::sum(ad::square(error)));
    }
  }
  return out;
}

Matrix KovasznayProblem::ground_truth(const Matrix& points) const {
  if (points.rows() != 2) throw std::invalid_argument("KovasznayProblem: points must be 2 x n");
  Matrix out(3, points.cols());
  const double two_pi = 2.0 * std::numbers::pi;
  for (Eigen::Index j = 0; j < points.cols(); ++j) {
    const double x = points(0, j);
    const double y = points(1, j);
    const double e = std::exp(lambda_ * x);
    out(0, j) = 1.0 - e * std::cos(two_pi * y);
    out(1, j) = lambda_ / two_pi * e * std::sin(two_pi * y);
    out(2, j) = 0.5 * (1.0 - std::exp(2.0 * lambda_ * x));
  }
  return out;
}

Field KovasznayProblem::analytic_field() const {
  const double lambda = lambda_;
  return [lambda](const ad::Var& xy) {
    const double two_pi = 2.0 * std::numbers::pi;
    const ad::Var x = ad::row(xy, 0);
    const ad::Var y = ad::row(xy, 1);
    const ad::Var e = ad::exp(lambda * x);
    const ad::Var u = 1.0 - e * ad::cos(two_pi * y);
    const ad::Var v = (lambda / two_pi) * (e * ad::sin(two_pi * y));
    const ad::Var p = 0.5 * (1.0 - ad::exp((2.0 * lambda) * x));
    return ad::pad_row(u, 0, 3) + ad::pad_row(v, 1, 3) + ad::pad_row(p, 2, 3);
  };
}

std::unique_ptr<KovasznayProblem> kovasznay_problem(PinnSettings settings, double reynolds) {
  return std::make_unique<KovasznayProblem>(std::move(settings), reynolds);
}

}  // namespace config
