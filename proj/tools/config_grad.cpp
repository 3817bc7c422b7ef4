// Command-line front end: run | compare | validate | oracle | properties.
// Exit codes: 0 success, 1 invalid input or failed property, 2 runtime failure.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <cmath>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "config/burgers_oracle.hpp"
#include "config/harness.hpp"
#include "config/problems.hpp"
#include "config/properties.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kRuntime = 2;

struct Overrides {
  std::size_t seeds = 0;
  long long iters = -1;
  std::string out;
  bool parallel = false;
};

config::ExperimentConfig load_with_overrides(const std::string& path, const Overrides& o) {
  if (!std::filesystem::exists(path)) throw config::ConfigError("config file not found: " + path);
  config::ExperimentConfig cfg = config::load_config(path);
  if (o.seeds > 0) {
    cfg.seeds.clear();
    for (std::size_t i = 0; i < o.seeds; ++i) cfg.seeds.push_back(i);
  }
  if (o.iters >= 0) cfg.iterations = static_cast<std::size_t>(o.iters);
  if (!o.out.empty()) cfg.output = o.out;
  if (o.parallel) cfg.parallel = true;
  cfg.validate();
  return cfg;
}

void print_summary(const config::ExperimentSummary& s) {
  std::printf("%s  problem=%s method=%s iterations=%zu\n", s.config.name.c_str(),
              s.config.problem.c_str(), config::to_string(s.config.method).c_str(),
              s.config.iterations);
  std::printf("  %-6s %-14s %-10s %-10s %-9s %s\n", "seed", "best_test_mse", "best_iter",
              "backprops", "conflict", "status");
  for (const auto& r : s.seeds) {
    const char* conflict = !r.conflict_free ? "n/a" : (*r.conflict_free ? "free" : "conflict");
    std::printf("  %-6llu %-14.6e %-10zu %-10llu %-9s %s\n",
                static_cast<unsigned long long>(r.seed), r.best_test_mse, r.best_iteration,
                static_cast<unsigned long long>(r.backprops), conflict,
                r.failed ? ("failed: " + r.failure).c_str() : "ok");
  }
  std::printf("  best test MSE %.6e +- %.6e\n", s.mean_best, s.std_best);
}

int cmd_run(const std::string& path, const Overrides& o) {
  const auto cfg = load_with_overrides(path, o);
  const auto summary = config::run_experiment(cfg);
  const auto dir = config::write_outputs(summary, cfg.output);
  print_summary(summary);
  std::printf("wrote %s\n", dir.string().c_str());
  return kOk;
}

int cmd_compare(const std::vector<std::string>& paths, const Overrides& o) {
  std::vector<config::ExperimentConfig> configs;
  for (const auto& p : paths) configs.push_back(load_with_overrides(p, o));
  const auto cmp = config::compare_methods(configs);
  const std::filesystem::path root = configs.front().output;
  for (const auto& run : cmp.runs) config::write_outputs(run, root);
  const std::string table = config::comparison_csv(cmp);
  std::filesystem::create_directories(root);
  std::ofstream(root / "comparison.csv", std::ios::binary) << table;
  std::printf("%-20s %-10s %-14s %-14s %-12s %-9s %s\n", "name", "method", "mean_best",
              "std_best", "improvement%", "conflict", "backprops");
  for (const auto& row : cmp.rows) {
    const char* conflict =
        !row.conflict_free ? "n/a" : (*row.conflict_free ? "free" : "conflict");
    std::printf("%-20s %-10s %-14.6e %-14.6e %-12.2f %-9s %llu\n", row.name.c_str(),
                config::to_string(row.method).c_str(), row.mean_best, row.std_best,
                row.improvement, conflict, static_cast<unsigned long long>(row.backprops));
  }
  std::printf("wrote %s\n", (root / "comparison.csv").string().c_str());
  return kOk;
}

int cmd_validate(const std::vector<std::string>& paths) {
  for (const auto& p : paths) {
    const auto cfg = load_with_overrides(p, {});
    const auto problem = config::make_problem(cfg);
    std::printf("# %s: ok (%zu losses, %zu parameters)\n%s", p.c_str(), problem->num_losses(),
                problem->dimension(), cfg.to_text().c_str());
  }
  return kOk;
}

int cmd_oracle(const std::string& problem, std::size_t nx, std::size_t nt,
               const std::string& out) {
  const std::filesystem::path path(out);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (problem == "kovasznay") {
    const config::KovasznayProblem k(config::kovasznay_settings());
    std::ofstream csv(path, std::ios::binary);
    if (!csv) throw std::runtime_error("cannot write " + out);
    csv << "x,y,u,v,p\n";
    config::Matrix pts(2, 1);
    char line[160];
    for (std::size_t j = 0; j <= nt; ++j) {
      for (std::size_t i = 0; i <= nx; ++i) {
        pts(0, 0) = -0.5 + 1.5 * static_cast<double>(i) / static_cast<double>(nx);
        pts(1, 0) = -0.5 + 2.0 * static_cast<double>(j) / static_cast<double>(nt);
        const config::Matrix v = k.ground_truth(pts);
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g\n", pts(0, 0), pts(1, 0),
                      v(0, 0), v(1, 0), v(2, 0));
        csv << line;
      }
    }
    std::printf("wrote analytic Kovasznay grid (%zu x %zu) to %s\n", nx + 1, nt + 1, out.c_str());
    return kOk;
  }
  const double nu = config::burgers_default_nu();
  const auto coarse = config::fd_burgers_oracle(nx, nt, nu);
  // At most 257 time levels in the file.
  const std::size_t stride = nt > 256 && nt % 256 == 0 ? nt / 256 : 1;
  coarse.write_csv(out, stride);
  std::printf("wrote Burgers field (%zu cells, %zu steps, every %zu-th level) to %s\n", nx, nt,
              stride, out.c_str());
  const auto fine = config::fd_burgers_oracle(2 * nx, 4 * nt, nu);
  const double change = config::refinement_change(coarse, fine);
  std::printf("refinement %zu -> %zu cells: relative L2 change %.3e (%s 1e-3)\n", nx, 2 * nx,
              change, change < 1e-3 ? "below" : "ABOVE");
  return kOk;
}

int cmd_properties(const std::string& filter, bool negative_control) {
  config::PropertyOptions opt;
  opt.flip_sign = negative_control;
  const auto results = config::run_properties(opt, filter);
  if (results.empty()) {
    std::fprintf(stderr, "no property matches '%s'\n", filter.c_str());
    return kInvalid;
  }
  bool all = true;
  for (const auto& r : results) {
    std::printf("%-4s %-22s worst=%-12.4e limit=%-10.3g %6.2fs  %s\n", r.passed ? "PASS" : "FAIL",
                r.name.c_str(), r.worst, r.limit, r.seconds, r.detail.c_str());
    all = all && r.passed;
  }
  return all ? kOk : kInvalid;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conflict-free gradient aggregation: experiments, oracles and property checks"};
  app.require_subcommand(1);

  Overrides run_o;
  std::string run_config;
  auto* run = app.add_subcommand("run", "Train one configuration over its seeds");
  run->add_option("--config", run_config, "Experiment config file")->required();
  run->add_option("--seeds", run_o.seeds, "Use seeds 0..N-1");
  run->add_option("--iters", run_o.iters, "Override the iteration count")->check(CLI::NonNegativeNumber);
  run->add_option("--out", run_o.out, "Output root (default: config 'output')");
  run->add_flag("--parallel", run_o.parallel, "Run seeds concurrently (CONFIG_GRAD_THREADS caps)");

  Overrides cmp_o;
  std::vector<std::string> cmp_configs;
  auto* compare = app.add_subcommand("compare", "Run several configs on one problem and tabulate");
  compare->add_option("--config", cmp_configs, "Experiment config files")->required()->expected(1, -1);
  compare->add_option("--seeds", cmp_o.seeds, "Use seeds 0..N-1");
  compare->add_option("--iters", cmp_o.iters, "Override the iteration count")->check(CLI::NonNegativeNumber);
  compare->add_option("--out", cmp_o.out, "Output root");
  compare->add_flag("--parallel", cmp_o.parallel, "Run seeds concurrently");

  std::vector<std::string> val_configs;
  auto* validate = app.add_subcommand("validate", "Parse and validate config files");
  validate->add_option("--config", val_configs, "Experiment config files")->required()->expected(1, -1);

  std::string oracle_problem = "burgers";
  std::size_t nx = 512;
  std::size_t nt = 2048;
  std::string oracle_out;
  auto* oracle = app.add_subcommand("oracle", "Write a ground-truth grid as CSV");
  oracle->add_option("--problem", oracle_problem, "burgers or kovasznay")
      ->check(CLI::IsMember({"burgers", "kovasznay"}));
  oracle->add_option("--nx", nx, "Cells in x")->check(CLI::PositiveNumber);
  oracle->add_option("--nt", nt, "Time steps (burgers) or cells in y (kovasznay)")
      ->check(CLI::PositiveNumber);
  oracle->add_option("--out", oracle_out, "CSV path")->required();

  std::string filter;
  bool negative_control = false;
  auto* props = app.add_subcommand("properties", "Check the aggregation guarantees");
  props->add_option("--filter", filter, "Run only properties whose name contains this text");
  props->add_flag("--negative-control", negative_control,
                  "Flip the sign of every ConFIG update (the suite must then fail)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (*run) return cmd_run(run_config, run_o);
    if (*compare) return cmd_compare(cmp_configs, cmp_o);
    if (*validate) return cmd_validate(val_configs);
    if (*oracle) return cmd_oracle(oracle_problem, nx, nt, oracle_out);
    if (*props) return cmd_properties(filter, negative_control);
  } catch (const config::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInvalid;
  } catch (const config::CflError& e) {
    std::fprintf(stderr, "error: %s (suggested dt %.6g, at least %.0f steps)\n", e.what(),
                 e.suggested_dt(), std::ceil(1.0 / e.suggested_dt()));
    return kRuntime;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntime;
  }
  return kInvalid;
}
