#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "config/aggregators.hpp"
#include "config/problems.hpp"
#include "support.hpp"

namespace ad = config::ad;
using config::Matrix;
using config::Vector;
using testing_support::relative_error;

namespace {

constexpr double kPi = std::numbers::pi;

void check_analytic_gradients(const config::AnalyticLossSet& set, const Vector& at,
                              std::uint64_t iteration = 0) {
  const double h = 1e-6;
  for (std::size_t i = 0; i < set.num_losses(); ++i) {
    const Vector g = set.gradient(i, at, iteration);
    for (Eigen::Index j = 0; j < at.size(); ++j) {
      Vector up = at;
      Vector down = at;
      up(j) += h;
      down(j) -= h;
      const double fd = (set.value(i, up, iteration) - set.value(i, down, iteration)) / (2 * h);
      CHECK(relative_error(g(j), fd, 1e-3 * (1.0 + g.norm())) < 1e-6);
    }
  }
}

// Plain gradient descent on the ConFIG direction or on the summed gradient.
Vector descend(const config::AnalyticLossSet& set, Vector theta, double lr, int steps,
               bool use_config) {
  for (int s = 0; s < steps; ++s) {
    std::vector<Vector> grads;
    for (std::size_t i = 0; i < set.num_losses(); ++i) grads.push_back(set.gradient(i, theta));
    Vector step = Vector::Zero(theta.size());
    if (use_config) {
      step = config::config_update(config::GradientSet(grads)).update;
    } else {
      for (const auto& g : grads) step += g;
    }
    theta -= lr * step;
  }
  return theta;
}

config::PinnSettings small_burgers(config::LossGrouping grouping = config::LossGrouping::kTwo) {
  config::PinnSettings s;
  s.net.hidden = {8, 8};
  s.residual_points = 40;
  s.boundary_points = 10;
  s.initial_points = 12;
  s.grouping = grouping;
  s.test_points = 200;
  return s;
}

config::PinnSettings small_kovasznay() {
  config::PinnSettings s = config::kovasznay_settings();
  s.net.hidden = {8, 8};
  s.residual_points = 40;
  s.boundary_points = 16;
  s.test_points = 200;
  return s;
}

// Parameter gradients of every loss against central differences on a few coordinates.
void check_pinn_gradients(const config::PinnProblem& problem, std::uint64_t seed) {
  const Vector p0 = problem.initial_parameters(seed);
  const config::BatchKey key{seed, 3};
  config::EvalRequest request;
  for (std::size_t i = 0; i < problem.num_losses(); ++i) request.gradients.push_back(i);
  const auto eval = problem.evaluate(p0, key, request);
  REQUIRE(eval.gradients.size() == problem.num_losses());
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, p0.size() - 1);
  const double h = 1e-6;
  for (int trial = 0; trial < 12; ++trial) {
    const Eigen::Index j = pick(rng);
    Vector up = p0;
    Vector down = p0;
    up(j) += h;
    down(j) -= h;
    const auto vu = problem.values(up, key);
    const auto vd = problem.values(down, key);
    for (std::size_t i = 0; i < problem.num_losses(); ++i) {
      CHECK(relative_error(eval.gradients[i](j), (vu[i] - vd[i]) / (2 * h)) < 1e-5);
    }
  }
}

}  // namespace

TEST_CASE("toy landscape shares its minimum at the origin") {
  const auto toy = config::toy_landscape();
  const Vector origin = Vector::Zero(2);
  CHECK(toy->value(0, origin) == doctest::Approx(config::ToyLandscapeConstants::kL1Floor));
  CHECK(std::abs(toy->value(1, origin)) < 1e-12);
  CHECK(toy->gradient(0, origin).norm() < 1e-15);
  CHECK(toy->gradient(1, origin).norm() < 1e-12);
  check_analytic_gradients(*toy, toy->initial_parameters(0));
  check_analytic_gradients(*toy, config::make_vector({0.3, 1.7}));
}

TEST_CASE("toy landscape L2 has several local minima in the plot window") {
  const auto toy = config::toy_landscape();
  const int n = 241;
  const double lo = -3.0;
  const double step = 6.0 / (n - 1);
  Matrix grid(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      grid(i, j) = toy->value(1, config::make_vector({lo + i * step, lo + j * step}));
    }
  }
  int minima = 0;
  for (int i = 1; i + 1 < n; ++i) {
    for (int j = 1; j + 1 < n; ++j) {
      bool lowest = true;
      for (int di = -1; di <= 1 && lowest; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          if ((di || dj) && grid(i + di, j + dj) <= grid(i, j)) {
            lowest = false;
            break;
          }
        }
      }
      minima += lowest ? 1 : 0;
    }
  }
  CHECK(minima >= 3);

  // Away from the minima L2 dominates the gradient.
  const Vector far = config::make_vector({-2.5, -0.5});
  CHECK(toy->gradient(1, far).norm() > 3.0 * toy->gradient(0, far).norm());
}

TEST_CASE("sum descent stalls in an L2 pit while ConFIG reaches the shared minimum") {
  const auto toy = config::toy_landscape();
  const Vector start = toy->initial_parameters(0);
  const Vector summed = descend(*toy, start, 0.02, 20000, false);
  const Vector conflict_free = descend(*toy, start, 0.02, 5000, true);
  CHECK(toy->value(0, summed) > 10.0 * config::ToyLandscapeConstants::kL1Floor);
  CHECK(summed.norm() > 1.0);
  CHECK(conflict_free.norm() < 1e-3);
}

TEST_CASE("ripple landscape") {
  const Vector c = config::make_vector({0.5, -0.25});
  const auto ripple = config::ripple_landscape(6.0, c, config::make_vector({1.0, 1.0}));
  CHECK(ripple->gradient(0, c).norm() < 1e-15);
  CHECK(ripple->gradient(1, c).norm() < 1e-15);
  check_analytic_gradients(*ripple, ripple->initial_parameters(0));
  CHECK(config::ripple_lipschitz(6.0) == doctest::Approx(36.3));
  CHECK_THROWS_AS(config::ripple_landscape(1.0, c, Vector::Zero(2)), std::invalid_argument);
}

TEST_CASE("quadratic suite constant and minimizer match independent computations") {
  for (std::size_t m : {2u, 4u}) {
    const auto suite = config::quadratic_suite(m, 32, 100 + m);
    Matrix total = Matrix::Zero(32, 32);
    Vector rhs = Vector::Zero(32);
    for (std::size_t i = 0; i < m; ++i) {
      total += suite->curvatures()[i];
      rhs += suite->curvatures()[i] * suite->centers()[i];
      CHECK((suite->curvatures()[i] - suite->curvatures()[i].transpose()).norm() < 1e-14);
    }
    // Power iteration.
    Vector v = Vector::Ones(32);
    double estimate = 0.0;
    for (int it = 0; it < 5000; ++it) {
      v = total * v;
      estimate = v.norm();
      v /= estimate;
    }
    CHECK(std::abs(estimate - suite->lipschitz()) < 1e-8);

    const Vector direct = total.fullPivLu().solve(rhs);
    CHECK((*suite->minimizer() - direct).norm() < 1e-10);
    Vector summed = Vector::Zero(32);
    for (std::size_t i = 0; i < m; ++i) summed += suite->gradient(i, direct);
    CHECK(summed.norm() < 1e-10);
    check_analytic_gradients(*suite, suite->initial_parameters(0));
  }
}

TEST_CASE("unit quadratic: step 2/L lands on the mirror point") {
  config::QuadraticSuite suite({Matrix::Identity(3, 3)}, {Vector::Zero(3)},
                               config::make_vector({1.0, -2.0, 0.5}));
  CHECK(suite.lipschitz() == doctest::Approx(1.0));
  const Vector theta = suite.initial_parameters(0);
  const Vector next = theta - 2.0 / suite.lipschitz() * suite.gradient(0, theta);
  CHECK(suite.total(next) == doctest::Approx(suite.total(theta)).epsilon(1e-15));
}

TEST_CASE("failure-vector losses alternate between the two golden sets") {
  const auto set = config::failure_vector_losses();
  const Vector theta = config::make_vector({0.2, -0.1, 0.4});
  const auto even = config::pcgrad_failure_vectors();
  const auto odd = config::imtlg_failure_vectors();
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK((set->gradient(i, theta, 4) - even[i]).norm() == 0.0);
    CHECK((set->gradient(i, theta, 7) - odd[i]).norm() == 0.0);
    CHECK(set->value(i, theta, 4) == doctest::Approx(even[i].dot(theta)));
  }
  CHECK_FALSE(set->minimizer().has_value());
}

TEST_CASE("analytic evaluate honours the request and counts backprops") {
  const auto toy = config::toy_landscape();
  const Vector theta = config::make_vector({1.0, 0.5});
  const auto eval = toy->evaluate(theta, {0, 0}, {.gradients = {1}, .summed_gradient = true});
  CHECK(eval.values.size() == 2);
  CHECK(eval.gradients.size() == 1);
  CHECK(eval.backprops == 2);
  CHECK((eval.gradients[0] - toy->gradient(1, theta)).norm() == 0.0);
  CHECK((eval.summed - toy->gradient(0, theta) - toy->gradient(1, theta)).norm() < 1e-15);
  CHECK(toy->initial_parameters(0) == config::make_vector({-2.5, -0.5}));
  CHECK(toy->initial_parameters(3) != toy->initial_parameters(0));
  CHECK(toy->test_error(Vector::Zero(2)) == 0.0);
}

TEST_CASE("latin hypercube puts one point in every stratum") {
  std::mt19937_64 rng(5);
  const Matrix s = config::latin_hypercube(50, 3, rng);
  REQUIRE(s.rows() == 3);
  REQUIRE(s.cols() == 50);
  for (Eigen::Index r = 0; r < 3; ++r) {
    std::set<int> strata;
    for (Eigen::Index j = 0; j < 50; ++j) {
      CHECK(s(r, j) >= 0.0);
      CHECK(s(r, j) < 1.0);
      strata.insert(static_cast<int>(s(r, j) * 50));
    }
    CHECK(strata.size() == 50);
  }
}

TEST_CASE("burgers samples stay in the domain and are reproducible") {
  const auto problem = config::BurgersProblem(small_burgers(), config::burgers_reference());
  const auto a = problem.sample({7, 11});
  const auto b = problem.sample({7, 11});
  const auto c = problem.sample({7, 12});
  CHECK(a.residual == b.residual);
  CHECK(a.residual != c.residual);
  CHECK(a.residual.row(0).minCoeff() >= -1.0);
  CHECK(a.residual.row(0).maxCoeff() <= 1.0);
  CHECK(a.residual.row(1).minCoeff() >= 0.0);
  CHECK(a.residual.row(1).maxCoeff() <= 1.0);
  CHECK(a.boundary.row(0).cwiseAbs().minCoeff() == 1.0);
  CHECK(a.initial.row(1).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.initial.cols() == 12);
}

TEST_CASE("burgers losses of reference functions") {
  config::PinnSettings s = small_burgers(config::LossGrouping::kThree);
  s.residual_points = 200;
  s.initial_points = 4000;
  const config::BurgersProblem problem(s, config::burgers_reference());
  CHECK(problem.loss_names() == std::vector<std::string>{"residual", "boundary", "initial"});
  const auto batch = problem.sample({1, 1});
  const std::vector<std::size_t> all{0, 1, 2};

  const config::Field zero = [](const ad::Var& x) { return 0.0 * ad::row(x, 0); };
  const auto z = problem.losses(zero, batch, all);
  CHECK(z[0].scalar() == 0.0);
  CHECK(z[1].scalar() == 0.0);
  CHECK(z[2].scalar() == doctest::Approx(0.5).epsilon(1e-3));

  const config::Field initial = [](const ad::Var& x) { return -1.0 * ad::sin(kPi * ad::row(x, 0)); };
  CHECK(problem.losses(initial, batch, all)[2].scalar() < 1e-28);

  // Two-loss grouping pools boundary and initial points with equal weight.
  config::PinnSettings s2 = s;
  s2.grouping = config::LossGrouping::kTwo;
  const config::BurgersProblem two(s2, config::burgers_reference());
  const double pooled = two.losses(zero, batch, std::vector<std::size_t>{1})[0].scalar();
  const double nb = static_cast<double>(batch.boundary.cols());
  const double ni = static_cast<double>(batch.initial.cols());
  CHECK(pooled == doctest::Approx((nb * z[1].scalar() + ni * z[2].scalar()) / (nb + ni)));
}

TEST_CASE("burgers residual of a smooth field matches its hand derivative") {
  const config::BurgersProblem problem(small_burgers(), config::burgers_reference());
  // u = sin(x) t: u_t + u u_x - nu u_xx = sin x + sin x cos x t^2 + nu sin x t.
  const config::Field f = [](const ad::Var& x) { return ad::sin(ad::row(x, 0)) * ad::row(x, 1); };
  const Matrix pts = problem.sample({2, 0}).residual;
  const Matrix r = problem.residual(f, pts).value();
  const double nu = config::burgers_default_nu();
  for (Eigen::Index j = 0; j < pts.cols(); ++j) {
    const double x = pts(0, j);
    const double t = pts(1, j);
    const double expected = std::sin(x) + std::sin(x) * std::cos(x) * t * t + nu * std::sin(x) * t;
    CHECK(std::abs(r(0, j) - expected) < 1e-13);
  }
}

TEST_CASE("pinn parameter gradients match finite differences") {
  check_pinn_gradients(config::BurgersProblem(small_burgers(), config::burgers_reference()), 3);
  check_pinn_gradients(
      config::BurgersProblem(small_burgers(config::LossGrouping::kThree), config::burgers_reference()),
      4);
  check_pinn_gradients(config::KovasznayProblem(small_kovasznay()), 5);
}

TEST_CASE("pinn evaluate counts backprops and builds only requested losses") {
  const config::BurgersProblem problem(small_burgers(config::LossGrouping::kThree),
                                       config::burgers_reference());
  const Vector p = problem.initial_parameters(1);
  const auto full = problem.evaluate(p, {1, 0}, {.gradients = {0, 1, 2}, .summed_gradient = true});
  CHECK(full.backprops == 4);
  Vector summed = full.gradients[0] + full.gradients[1] + full.gradients[2];
  CHECK((summed - full.summed).norm() < 1e-12 * (1.0 + summed.norm()));

  const auto one = problem.evaluate(p, {1, 0}, {.gradients = {2}, .all_values = false});
  CHECK(one.backprops == 1);
  CHECK(std::isnan(one.values[0]));
  CHECK(one.values[2] == full.values[2]);
  CHECK((one.gradients[0] - full.gradients[2]).norm() == 0.0);
  CHECK_THROWS_AS(problem.evaluate(p, {1, 0}, {.gradients = {3}}), std::out_of_range);
}

TEST_CASE("kovasznay analytic solution satisfies the coded operators") {
  const config::KovasznayProblem problem(small_kovasznay());
  CHECK(problem.lambda() == doctest::Approx(-0.963740544195769).epsilon(1e-12));
  config::PinnSettings s = small_kovasznay();
  s.residual_points = 500;
  s.boundary_points = 200;
  const config::KovasznayProblem big(s);
  const auto batch = big.sample({9, 0});
  const auto field = big.analytic_field();
  const auto losses = big.losses(field, batch, std::vector<std::size_t>{0, 1});
  CHECK(losses[0].scalar() < 1e-8);
  CHECK(losses[1].scalar() < 1e-20);
  const auto r = big.residuals(field, batch.residual);
  CHECK(r[2].value().cwiseAbs().maxCoeff() < 1e-10);
  // Graph field and plain ground truth agree.
  CHECK((field(ad::constant(batch.residual)).value() - big.ground_truth(batch.residual))
            .cwiseAbs()
            .maxCoeff() < 1e-14);
  // Boundary points lie on the rectangle edges.
  for (Eigen::Index j = 0; j < batch.boundary.cols(); ++j) {
    const double x = batch.boundary(0, j);
    const double y = batch.boundary(1, j);
    const double edge = std::min({std::abs(x + 0.5), std::abs(x - 1.0), std::abs(y + 0.5),
                                  std::abs(y - 1.5)});
    CHECK(edge < 1e-12);
  }
}

TEST_CASE("kovasznay rejects a three-loss grouping") {
  config::PinnSettings s = small_kovasznay();
  s.grouping = config::LossGrouping::kThree;
  CHECK_THROWS_AS(config::KovasznayProblem{s}, std::invalid_argument);
}

TEST_CASE("test error is the mean squared error over the fixed test set") {
  const config::KovasznayProblem problem(small_kovasznay());
  const Vector p = problem.initial_parameters(2);
  config::Mlp net(problem.settings().net);
  net.set_parameters(p);
  const Matrix diff = net.evaluate(problem.test_points()) - problem.test_values();
  CHECK(problem.test_error(p) == doctest::Approx(diff.squaredNorm() / static_cast<double>(diff.size())));
  CHECK(problem.test_points().cols() == 200);
  CHECK(problem.test_points().row(0).minCoeff() >= -0.5);
  CHECK(problem.test_points().row(1).maxCoeff() <= 1.5);
}
