#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "config/autodiff.hpp"
#include "config/mlp.hpp"
#include "support.hpp"

namespace ad = config::ad;
using config::Matrix;
using config::Vector;

namespace {

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

// Central difference of a scalar function of one matrix entry.
double central(const std::function<double(const Matrix&)>& f, Matrix x, Eigen::Index i,
               double h) {
  const double x0 = x.data()[i];
  x.data()[i] = x0 + h;
  const double up = f(x);
  x.data()[i] = x0 - h;
  const double down = f(x);
  return (up - down) / (2.0 * h);
}

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max(1e-6, std::max(std::abs(a), std::abs(b)));
}

}  // namespace

TEST_CASE("elementary gradients") {
  const ad::Var theta = ad::variable(config::make_vector({1.0, -2.0, 0.5}));
  const ad::Var loss = 0.5 * ad::sum(ad::square(theta));
  const ad::Var wrt[] = {theta};
  CHECK(ad::gradients(loss, wrt)[0].isApprox(theta.value()));

  const ad::Var c = ad::constant_scalar(4.0);
  const auto g = ad::gradients(c, wrt);
  CHECK(g[0].norm() == 0.0);
  CHECK(g[0].rows() == 3);
}

TEST_CASE("every op matches finite differences") {
  std::mt19937_64 rng(21);
  const Matrix a0 = random_matrix(rng, 3, 4);
  const Matrix b0 = random_matrix(rng, 4, 4);
  const Matrix bias0 = random_matrix(rng, 3, 1);
  auto build = [&](const ad::Var& a, const ad::Var& b, const ad::Var& bias) {
    ad::Var h = ad::add_bias(ad::matmul(a, b), bias);
    h = ad::tanh(h) * ad::sin(h) + ad::cos(2.0 * h) - ad::exp(0.3 * h);
    h = h + ad::transpose(ad::transpose(h)) * 0.5 - 1.0;
    ad::Var r = ad::pad_row(ad::row(h, 1), 0, 3) + ad::broadcast_cols(ad::row_sum(h), 4);
    r = r + ad::broadcast_scalar(ad::mean(ad::square(h)), 3, 4);
    return ad::sum(ad::square(r)) - ad::sum(-r);
  };
  const ad::Var a = ad::variable(a0);
  const ad::Var b = ad::variable(b0);
  const ad::Var bias = ad::variable(bias0);
  const ad::Var wrt[] = {a, b, bias};
  const auto plain = ad::gradients(build(a, b, bias), wrt);
  const auto graph = ad::grad(build(a, b, bias), wrt);
  for (int w = 0; w < 3; ++w) CHECK(plain[w].isApprox(graph[w].value(), 1e-13));

  const Matrix* bases[] = {&a0, &b0, &bias0};
  for (int w = 0; w < 3; ++w) {
    for (Eigen::Index i = 0; i < bases[w]->size(); ++i) {
      auto f = [&](const Matrix& x) {
        Matrix args[] = {a0, b0, bias0};
        args[w] = x;
        return build(ad::constant(args[0]), ad::constant(args[1]), ad::constant(args[2]))
            .scalar();
      };
      CHECK(relative_error(plain[w].data()[i], central(f, *bases[w], i, 1e-5)) < 1e-6);
    }
  }
}

TEST_CASE("second-order gradients through grad") {
  // f(x) = sum(x^3 / 3 via x*x*x): grad = x^2, hessian-vector with ones = 2x.
  const ad::Var x = ad::variable(config::make_vector({0.5, -1.5, 2.0}));
  const ad::Var f = (1.0 / 3.0) * ad::sum(x * x * x);
  const ad::Var wrt[] = {x};
  const ad::Var g = ad::grad(f, wrt)[0];
  CHECK(g.value().isApprox(x.value().cwiseAbs2()));
  const auto h = ad::gradients(ad::sum(g), wrt);
  CHECK(h[0].isApprox(2.0 * x.value()));
}

TEST_CASE("input derivatives of a single neuron") {
  const double w = 1.7;
  const Matrix xs = config::make_vector({-0.8, 0.1, 0.9}).transpose();
  const ad::Var x = ad::variable(xs);
  const ad::Var u = ad::tanh(w * x);
  const ad::Var du = ad::input_derivative(u, x, 0, 1);
  const ad::Var d2u = ad::input_derivative(u, x, 0, 2);
  for (Eigen::Index i = 0; i < 3; ++i) {
    const double t = std::tanh(w * xs(0, i));
    CHECK(du.value()(0, i) == doctest::Approx(w * (1.0 - t * t)).epsilon(1e-14));
    CHECK(d2u.value()(0, i) == doctest::Approx(-2.0 * w * w * t * (1.0 - t * t)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(ad::input_derivative(u, x, 0, 3), std::invalid_argument);
  CHECK_THROWS_AS(ad::input_derivative(u, x, 0, 0), std::invalid_argument);
}

TEST_CASE("mlp forward basics") {
  config::Mlp zero({.inputs = 2, .outputs = 1, .hidden = {4, 4}});
  Vector p = zero.parameters();
  p(p.size() - 1) = 0.75;
  zero.set_parameters(p);
  const Matrix pts = Matrix::Random(2, 5);
  CHECK(zero.evaluate(pts).isApprox(Matrix::Constant(1, 5, 0.75)));

  config::Mlp linear({.inputs = 3, .outputs = 2, .hidden = {}});
  std::mt19937_64 rng(1);
  const Vector lp = testing_support::normal_vector(rng, 8);
  linear.set_parameters(lp);
  Matrix w(2, 3);
  w << lp(0), lp(1), lp(2), lp(3), lp(4), lp(5);
  const Vector b = config::make_vector({lp(6), lp(7)});
  const Matrix x = Matrix::Random(3, 4);
  Matrix expected = w * x;
  expected.colwise() += b;
  CHECK(linear.evaluate(x).isApprox(expected));

  CHECK_THROWS_AS(linear.set_parameters(Vector::Zero(3)), std::invalid_argument);
  CHECK_THROWS_AS(linear.evaluate(Matrix::Zero(2, 1)), std::invalid_argument);
}

TEST_CASE("mlp graph forward agrees with plain evaluation and is deterministic") {
  const config::MlpShape shape{.inputs = 2, .outputs = 3, .hidden = {8, 8}};
  const auto net = config::Mlp::xavier(shape, 77);
  const auto again = config::Mlp::xavier(shape, 77);
  CHECK(net.parameters() == again.parameters());
  CHECK(net.parameter_count() == 8 * 3 + 8 * 9 + 3 * 9);

  const Matrix pts = Matrix::Random(2, 6);
  const auto leaves = net.parameter_leaves();
  CHECK(net.forward(leaves, ad::constant(pts)).value().isApprox(net.evaluate(pts), 1e-14));
}

TEST_CASE("linear network has zero second derivative") {
  config::Mlp net = config::Mlp::xavier({.inputs = 2, .outputs = 1, .hidden = {5},
                                         .activation = config::Activation::kIdentity},
                                        3);
  const auto leaves = net.parameter_leaves();
  const ad::Var x = ad::variable(Matrix::Random(2, 7));
  const ad::Var u = net.forward(leaves, x);
  CHECK(ad::input_derivative(u, x, 0, 2).value().cwiseAbs().maxCoeff() < 1e-15);
  CHECK(ad::input_derivative(u, x, 1, 2).value().cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("network input derivatives match finite differences") {
  std::mt19937_64 rng(13);
  for (int net_seed = 0; net_seed < 5; ++net_seed) {
    const auto net = config::Mlp::xavier({.inputs = 2, .outputs = 1, .hidden = {16, 16}},
                                         100 + net_seed);
    const Matrix pts = random_matrix(rng, 2, 6);
    const auto leaves = net.parameter_leaves();
    const ad::Var x = ad::variable(pts);
    const ad::Var u = net.forward(leaves, x);
    const double h = 1e-4;
    for (Eigen::Index c = 0; c < 2; ++c) {
      const Matrix d1 = ad::input_derivative(u, x, c, 1).value();
      const Matrix d2 = ad::input_derivative(u, x, c, 2).value();
      Matrix up = pts;
      Matrix down = pts;
      up.row(c).array() += h;
      down.row(c).array() -= h;
      const Matrix fu = net.evaluate(up);
      const Matrix fd = net.evaluate(down);
      const Matrix f0 = net.evaluate(pts);
      for (Eigen::Index i = 0; i < pts.cols(); ++i) {
        CHECK(relative_error(d1(0, i), (fu(0, i) - fd(0, i)) / (2 * h)) < 1e-5);
        const double fd2 = (fu(0, i) - 2 * f0(0, i) + fd(0, i)) / (h * h);
        CHECK(std::abs(d2(0, i) - fd2) < 1e-4 * std::max(1.0, std::abs(d2(0, i))));
      }
    }
  }
}

TEST_CASE("parameter gradients of a derivative-based loss match finite differences") {
  const config::MlpShape shape{.inputs = 2, .outputs = 1, .hidden = {6, 6}};
  auto net = config::Mlp::xavier(shape, 9);
  const Matrix pts = Matrix::Random(2, 5);
  auto loss_of = [&](const config::Mlp& n, std::span<const ad::Var> leaves) {
    const ad::Var x = ad::variable(pts);
    const ad::Var u = n.forward(leaves, x);
    const ad::Var r = ad::input_derivative(u, x, 1, 1) + u * ad::input_derivative(u, x, 0, 1) -
                      0.05 * ad::input_derivative(u, x, 0, 2);
    return ad::mean(ad::square(r));
  };
  const auto leaves = net.parameter_leaves();
  const Vector grad = net.flatten(ad::gradients(loss_of(net, leaves), leaves));
  const Vector p0 = net.parameters();
  const double h = 1e-5;
  for (Eigen::Index i = 0; i < p0.size(); ++i) {
    Vector p = p0;
    p(i) += h;
    net.set_parameters(p);
    const double up = loss_of(net, net.parameter_leaves()).scalar();
    p(i) -= 2 * h;
    net.set_parameters(p);
    const double down = loss_of(net, net.parameter_leaves()).scalar();
    CHECK(relative_error(grad(i), (up - down) / (2 * h)) < 1e-5);
  }
  net.set_parameters(p0);
}
