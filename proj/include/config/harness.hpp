#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "config/optimizers.hpp"
#include "config/problems.hpp"

namespace config {

/// Malformed or invalid experiment configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Method { kAdamSum, kConfig, kMConfig, kMAConfig, kPcgrad, kImtlg };
enum class StepRule { kAdam, kGradientDescent };
enum class Schedule { kCosine, kConstant };

std::string to_string(Method m);
Method parse_method(const std::string& name);

/// Experiment description, read from `key = value` text. See `configs/` for examples.
struct ExperimentConfig {
  int schema = 1;
  std::string name = "experiment";
  /// burgers | kovasznay | toy | ripple | quadratic | failure_vectors
  std::string problem = "burgers";
  LossGrouping grouping = LossGrouping::kTwo;
  Method method = Method::kConfig;
  /// How the aggregated direction is applied. M-ConFIG and MA-ConFIG carry
  /// their own moments and only accept `adam`.
  StepRule step_rule = StepRule::kAdam;
  std::size_t iterations = 3000;
  Schedule schedule = Schedule::kCosine;
  double lr = 1e-3;        // initial (cosine) or constant rate
  double lr_final = 1e-4;  // cosine end point
  std::size_t warmup = 100;
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  std::size_t eval_every = 100;
  double eps = kDefaultEps;
  AdamHyperParams adam;
  std::string output = "runs";
  bool parallel = false;

  // PINN problems.
  std::vector<std::size_t> hidden = {32, 32, 32};
  std::size_t residual_points = 2000;
  std::size_t boundary_points = 100;
  std::size_t initial_points = 100;  // ignored by kovasznay
  std::size_t test_points = 10000;
  double reynolds = 40.0;

  // Analytic problems.
  double ripple_a = 6.0;
  std::size_t quadratic_losses = 2;
  std::size_t quadratic_dim = 32;
  std::uint64_t quadratic_seed = 0;

  /// Throws ConfigError on any inconsistency.
  void validate() const;
  /// Canonical `key = value` text; parses back to the same config.
  std::string to_text() const;
};

ExperimentConfig parse_config(const std::string& text);
/// Throws ConfigError naming the path when the file cannot be read.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Learning rate at 0-based iteration `it` of `total`: linear warmup to `lr`
/// over the first `warmup` iterations, then cosine decay reaching `lr_final`
/// at the last iteration.
double learning_rate(const ExperimentConfig& cfg, std::size_t it);

std::unique_ptr<LossSet> make_problem(const ExperimentConfig& cfg);

/// Gradient evaluations per training iteration.
std::size_t backprops_per_iteration(Method method, std::size_t losses);

struct TrainRecord {
  std::size_t iteration = 0;
  std::vector<double> losses;
  double test_mse = 0.0;
  std::uint64_t backprops = 0;
  std::uint64_t seed = 0;
};

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<TrainRecord> records;
  bool failed = false;
  std::string failure;
  double best_test_mse = 0.0;
  std::size_t best_iteration = 0;
  std::vector<double> best_losses;
  double final_test_mse = 0.0;
  std::uint64_t backprops = 0;
  /// Whether every aggregated direction was conflict-free against the gradients
  /// it was built from. Empty for methods that never see all gradients at once.
  std::optional<bool> conflict_free;
  Vector final_params;
};

struct ExperimentSummary {
  ExperimentConfig config;
  std::vector<std::string> loss_names;
  std::vector<SeedResult> seeds;
  /// Mean and sample standard deviation of the best test MSE; NaN when a seed failed.
  double mean_best = 0.0;
  double std_best = 0.0;
  bool any_failed = false;
};

/// Test hook: receives each aggregated direction before it is applied.
using UpdateHook = void (*)(Vector& update);

/// Trains one seed. `hook` (may be null) is a negative-control entry point.
SeedResult run_seed(const ExperimentConfig& cfg, const LossSet& problem, std::uint64_t seed,
                    UpdateHook hook = nullptr);

/// All seeds of one experiment. Seeds run concurrently when `cfg.parallel` is set,
/// capped by CONFIG_GRAD_THREADS (default: hardware concurrency).
ExperimentSummary run_experiment(const ExperimentConfig& cfg, UpdateHook hook = nullptr);
ExperimentSummary run_experiment(const ExperimentConfig& cfg, const LossSet& problem,
                                 UpdateHook hook = nullptr);

/// Mean and sample standard deviation (0 for a single value).
std::pair<double, double> mean_and_std(const std::vector<double>& xs);

/// Writes runs/<name>/seed<i>.csv, summary.csv and meta.txt under `root`.
/// Returns the run directory.
std::filesystem::path write_outputs(const ExperimentSummary& summary,
                                    const std::filesystem::path& root);

/// Git blob id (SHA-1 of "blob <size>\0" + content) as lowercase hex.
std::string git_blob_hash(const std::string& content);

/// +50 means half the baseline error, -100 twice the baseline error.
double relative_improvement(double baseline_mse, double method_mse);

struct ComparisonRow {
  std::string name;
  Method method = Method::kConfig;
  double mean_best = 0.0;
  double std_best = 0.0;
  double improvement = 0.0;
  std::optional<bool> conflict_free;
  std::uint64_t backprops = 0;
};

struct Comparison {
  std::vector<ExperimentSummary> runs;
  std::vector<ComparisonRow> rows;
};

/// Runs configs sharing a problem and seed list. Improvements are relative to the
/// first adam-sum config, or to the first config when there is none.
Comparison compare_methods(const std::vector<ExperimentConfig>& configs,
                           UpdateHook hook = nullptr);
/// Comparison table as CSV text.
std::string comparison_csv(const Comparison& comparison);

/// Same value formatting as the output files (round-trip precision, NaN as "NaN").
std::string format_double(double x);

}  // namespace config
