#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "config/autodiff.hpp"
#include "config/burgers_oracle.hpp"
#include "config/mlp.hpp"
#include "config/vecmath.hpp"

namespace config {

/// Identifies the training batch: a run seed and the iteration it is drawn for.
struct BatchKey {
  std::uint64_t seed = 0;
  std::uint64_t iteration = 0;
};

struct EvalRequest {
  /// Losses backpropagated one at a time (one reverse pass each).
  std::vector<std::size_t> gradients;
  /// One reverse pass of the summed loss.
  bool summed_gradient = false;
  /// Evaluate every loss value. Otherwise only the losses needed for the
  /// requested gradients are built and the rest are reported as NaN.
  bool all_values = true;
};

struct Evaluation {
  std::vector<double> values;     // one per loss
  std::vector<Vector> gradients;  // aligned with EvalRequest::gradients
  Vector summed;                  // set when EvalRequest::summed_gradient
  std::size_t backprops = 0;      // reverse passes performed
};

/// m loss functions over a shared parameter vector.
class LossSet {
 public:
  virtual ~LossSet() = default;

  virtual std::string name() const = 0;
  virtual std::vector<std::string> loss_names() const = 0;
  std::size_t num_losses() const { return loss_names().size(); }
  virtual std::size_t dimension() const = 0;
  virtual Vector initial_parameters(std::uint64_t seed) const = 0;

  virtual Evaluation evaluate(const Vector& params, const BatchKey& batch,
                              const EvalRequest& request) const = 0;

  /// Held-out error of the parameters (test MSE for the PINN problems).
  virtual double test_error(const Vector& params) const = 0;

  std::vector<double> values(const Vector& params, const BatchKey& batch) const {
    return evaluate(params, batch, EvalRequest{}).values;
  }
};

// ---------------------------------------------------------------------------
// Analytic loss sets
// ---------------------------------------------------------------------------

/// Loss with a closed-form gradient. `iteration` lets a loss change over time.
struct AnalyticLoss {
  std::string name;
  std::function<double(const Vector&, std::uint64_t iteration)> value;
  std::function<Vector(const Vector&, std::uint64_t iteration)> gradient;
};

class AnalyticLossSet : public LossSet {
 public:
  AnalyticLossSet(std::string name, std::vector<AnalyticLoss> losses, Vector start,
                  std::optional<Vector> minimizer);

  std::string name() const override { return name_; }
  std::vector<std::string> loss_names() const override;
  std::size_t dimension() const override { return static_cast<std::size_t>(start_.size()); }
  /// The documented start; seeds other than 0 add a uniform jitter of +-0.25.
  Vector initial_parameters(std::uint64_t seed) const override;
  Evaluation evaluate(const Vector& params, const BatchKey& batch,
                      const EvalRequest& request) const override;
  /// Squared distance to the known minimizer, or the summed loss when there is none.
  double test_error(const Vector& params) const override;

  const std::optional<Vector>& minimizer() const { return minimizer_; }
  double value(std::size_t i, const Vector& params, std::uint64_t iteration = 0) const;
  Vector gradient(std::size_t i, const Vector& params, std::uint64_t iteration = 0) const;
  double total(const Vector& params, std::uint64_t iteration = 0) const;

 private:
  std::string name_;
  std::vector<AnalyticLoss> losses_;
  Vector start_;
  std::optional<Vector> minimizer_;
};

/// Two-parameter landscape with a shared minimum at the origin.
///   L1 = 0.01 + (0.05 x^2 + 0.25 y^2) / 2          small, anisotropic gradients
///   L2 = |theta|^2 / 2 - A sum_j [exp(-|theta - p_j|^2 / (2 s^2)) - exp(-|p_j|^2 / (2 s^2))]
/// with three Gaussian pits p_j on a circle of radius 2 (angles 90, 210, 330 degrees),
/// A = 1.2 and s = 0.4. The pits are local minima of L2 and cancel at the origin, where
/// both losses reach their global minimum. Start: (-2.5, -0.5).
struct ToyLandscapeConstants {
  static constexpr double kL1Floor = 0.01;
  static constexpr double kL1CurvatureX = 0.05;
  static constexpr double kL1CurvatureY = 0.25;
  static constexpr double kPitDepth = 1.2;
  static constexpr double kPitWidth = 0.4;
  static constexpr double kPitRadius = 2.0;
  static constexpr double kStartX = -2.5;
  static constexpr double kStartY = -0.5;
};
std::unique_ptr<AnalyticLossSet> toy_landscape();

/// L1 = 0.05 |theta - c|^2, L2 = 1 - cos(a (theta - c).d) + 0.1 |theta - c|^2 with
/// unit d: a quadratic plus a sinusoidal ripple of local minima along d.
std::unique_ptr<AnalyticLossSet> ripple_landscape(double a, const Vector& center,
                                                  const Vector& direction);
/// Lipschitz constant of the summed ripple gradient: a^2 + 0.3.
double ripple_lipschitz(double a);

/// Sum of convex quadratics L_i = (theta - c_i)^T A_i (theta - c_i) / 2.
class QuadraticSuite : public AnalyticLossSet {
 public:
  QuadraticSuite(std::vector<Matrix> curvatures, std::vector<Vector> centers, Vector start);
  /// Largest eigenvalue of sum_i A_i.
  double lipschitz() const { return lipschitz_; }
  const std::vector<Matrix>& curvatures() const { return curvatures_; }
  const std::vector<Vector>& centers() const { return centers_; }

 private:
  std::vector<Matrix> curvatures_;
  std::vector<Vector> centers_;
  double lipschitz_;
};

/// Random SPD suite: A_i = Q_i Q_i^T / k + 0.1 I with standard normal Q_i, c_i ~ N(0, I),
/// start ~ N(0, 4 I).
std::unique_ptr<QuadraticSuite> quadratic_suite(std::size_t m, std::size_t k, std::uint64_t seed);

/// Three linear losses L_i = g_i . theta in R^3 whose gradients alternate between the
/// PCGrad failure vectors (even iterations) and the IMTL-G failure vectors (odd iterations).
std::unique_ptr<AnalyticLossSet> failure_vector_losses();
std::vector<Vector> pcgrad_failure_vectors();
std::vector<Vector> imtlg_failure_vectors();

// ---------------------------------------------------------------------------
// Physics-informed problems
// ---------------------------------------------------------------------------

/// Network field: (d x n) input batch -> (outputs x n).
using Field = std::function<ad::Var(const ad::Var& inputs)>;

enum class LossGrouping {
  kTwo,    // [L_N, L_BI]
  kThree,  // [L_N, L_B, L_I]
};

struct PinnSettings {
  MlpShape net{.inputs = 2, .outputs = 1, .hidden = {50, 50, 50, 50}};
  std::size_t residual_points = 10000;
  std::size_t boundary_points = 250;
  std::size_t initial_points = 250;
  LossGrouping grouping = LossGrouping::kTwo;
  std::size_t test_points = 10000;
  std::uint64_t test_seed = 20240601;
};

/// Paper-scale defaults: 4 x 50 tanh network with 10000 / 250 / 250 points.
PinnSettings burgers_settings();
/// Paper-scale defaults: 4 x 50 tanh network, three outputs, 20000 / 1000 points.
PinnSettings kovasznay_settings();

/// Sample batch, columns are points.
struct PinnBatch {
  Matrix residual;
  Matrix boundary;
  Matrix initial;  // empty for steady problems
};

/// n points of a Latin hypercube in [0, 1)^d, returned as d x n.
Matrix latin_hypercube(std::size_t n, std::size_t d, std::mt19937_64& rng);

class PinnProblem : public LossSet {
 public:
  explicit PinnProblem(PinnSettings settings);

  const PinnSettings& settings() const { return settings_; }
  std::size_t dimension() const override { return settings_.net.parameter_count(); }
  /// Xavier-initialized network parameters.
  Vector initial_parameters(std::uint64_t seed) const override;

  /// Lower and upper corners of the domain (one entry per input coordinate).
  virtual Vector lower() const = 0;
  virtual Vector upper() const = 0;

  /// Latin-hypercube batch for this key.
  virtual PinnBatch sample(const BatchKey& batch) const = 0;
  /// Loss nodes for the requested indices (same order).
  virtual std::vector<ad::Var> losses(const Field& field, const PinnBatch& batch,
                                      std::span<const std::size_t> which) const = 0;
  /// Exact or reference solution at a (d x n) batch of points.
  virtual Matrix ground_truth(const Matrix& points) const = 0;

  /// Fixed uniform test points and the ground truth there.
  const Matrix& test_points() const;
  const Matrix& test_values() const;

  Evaluation evaluate(const Vector& params, const BatchKey& batch,
                      const EvalRequest& request) const override;
  /// Mean squared error against the ground truth over the test points and outputs.
  double test_error(const Vector& params) const override;

  /// Field of a network with the given parameters, built on fresh graph leaves.
  Field network_field(const Mlp& net, std::span<const ad::Var> leaves) const;

 protected:
  PinnSettings settings_;

 private:
  void prepare_test_set() const;
  mutable std::once_flag test_once_;
  mutable Matrix test_points_;
  mutable Matrix test_values_;
};

class BurgersProblem : public PinnProblem {
 public:
  BurgersProblem(PinnSettings settings, std::shared_ptr<const BurgersGroundTruth> truth,
                 double nu = burgers_default_nu());

  std::string name() const override { return "burgers"; }
  std::vector<std::string> loss_names() const override;
  Vector lower() const override { return make_vector({-1.0, 0.0}); }
  Vector upper() const override { return make_vector({1.0, 1.0}); }
  PinnBatch sample(const BatchKey& batch) const override;
  std::vector<ad::Var> losses(const Field& field, const PinnBatch& batch,
                              std::span<const std::size_t> which) const override;
  Matrix ground_truth(const Matrix& points) const override;

  /// u_t + u u_x - nu u_xx at the residual points, as a 1 x n node.
  ad::Var residual(const Field& field, const Matrix& points) const;
  double nu() const { return nu_; }

 private:
  std::shared_ptr<const BurgersGroundTruth> truth_;
  double nu_;
};

/// Burgers problem with the shared reference solution (1024 cells, 4096 steps), computed once.
std::unique_ptr<BurgersProblem> burgers_problem(PinnSettings settings);
std::shared_ptr<const BurgersGroundTruth> burgers_reference();

class KovasznayProblem : public PinnProblem {
 public:
  explicit KovasznayProblem(PinnSettings settings, double reynolds = 40.0);

  std::string name() const override { return "kovasznay"; }
  std::vector<std::string> loss_names() const override;
  Vector lower() const override { return make_vector({-0.5, -0.5}); }
  Vector upper() const override { return make_vector({1.0, 1.5}); }
  PinnBatch sample(const BatchKey& batch) const override;
  std::vector<ad::Var> losses(const Field& field, const PinnBatch& batch,
                              std::span<const std::size_t> which) const override;
  Matrix ground_truth(const Matrix& points) const override;

  /// Momentum (x, y) and continuity residuals at the points, each 1 x n.
  std::vector<ad::Var> residuals(const Field& field, const Matrix& points) const;
  /// The exact solution as a graph field, for validating the residual code.
  Field analytic_field() const;
  double lambda() const { return lambda_; }
  double nu() const { return 1.0 / reynolds_; }

 private:
  double reynolds_;
  double lambda_;
};

std::unique_ptr<KovasznayProblem> kovasznay_problem(PinnSettings settings, double reynolds = 40.0);

}  // namespace config
