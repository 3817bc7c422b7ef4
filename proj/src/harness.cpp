#include "config/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include <openssl/evp.h>

#include "config/aggregators.hpp"

namespace config {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) parts.push_back(trim(item));
  return parts;
}

double parse_double(const std::string& key, const std::string& text) {
  double value = 0.0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("'" + key + "': expected a number, got '" + text + "'");
  }
  return value;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& text) {
  std::uint64_t value = 0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("'" + key + "': expected a non-negative integer, got '" + text + "'");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  throw ConfigError("'" + key + "': expected true or false, got '" + text + "'");
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(xs[i]);
  }
  return out;
}

bool is_pinn(const std::string& problem) { return problem == "burgers" || problem == "kovasznay"; }

const std::set<std::string> kProblems = {"burgers", "kovasznay", "toy",
                                         "ripple",  "quadratic", "failure_vectors"};

std::string csv_header(std::size_t losses, const char* prefix) {
  std::string h;
  for (std::size_t i = 0; i < losses; ++i) h += std::string(prefix) + std::to_string(i + 1) + ",";
  return h;
}

std::string seed_csv(const SeedResult& r, std::size_t losses) {
  std::string out = "iteration," + csv_header(losses, "loss_") + "test_mse,backprops\n";
  for (const auto& rec : r.records) {
    out += std::to_string(rec.iteration) + ",";
    for (double v : rec.losses) out += format_double(v) + ",";
    out += format_double(rec.test_mse) + "," + std::to_string(rec.backprops) + "\n";
  }
  return out;
}

std::string conflict_label(const std::optional<bool>& flag) {
  if (!flag) return "n/a";
  return *flag ? "true" : "false";
}

std::string summary_csv(const ExperimentSummary& s) {
  const std::size_t m = s.loss_names.size();
  std::string out = "seed,best_test_mse,best_iteration," + csv_header(m, "best_loss_") +
                    "final_test_mse,backprops,conflict_free,status\n";
  for (const auto& r : s.seeds) {
    out += std::to_string(r.seed) + "," + format_double(r.best_test_mse) + "," +
           std::to_string(r.best_iteration) + ",";
    for (std::size_t i = 0; i < m; ++i) {
      out += format_double(i < r.best_losses.size() ? r.best_losses[i] : kNaN) + ",";
    }
    out += format_double(r.final_test_mse) + "," + std::to_string(r.backprops) + "," +
           conflict_label(r.conflict_free) + "," + (r.failed ? "failed" : "ok") + "\n";
  }
  const std::string blanks(m + 5, ',');
  out += "mean," + format_double(s.mean_best) + blanks + "\n";
  out += "std," + format_double(s.std_best) + blanks + "\n";
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::size_t thread_cap() {
  const char* env = std::getenv("CONFIG_GRAD_THREADS");
  if (env == nullptr || *env == '\0') {
    return std::max(1u, std::thread::hardware_concurrency());
  }
  const auto n = parse_unsigned("CONFIG_GRAD_THREADS", env);
  if (n == 0) throw ConfigError("CONFIG_GRAD_THREADS must be at least 1");
  return static_cast<std::size_t>(n);
}

// Per-iteration PCGrad shuffle seed.
std::uint64_t shuffle_seed(std::uint64_t seed, std::size_t it) {
  return seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(it) + 1;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

std::string to_string(Method m) {
  switch (m) {
    case Method::kAdamSum: return "adam-sum";
    case Method::kConfig: return "config";
    case Method::kMConfig: return "m-config";
    case Method::kMAConfig: return "ma-config";
    case Method::kPcgrad: return "pcgrad";
    case Method::kImtlg: return "imtlg";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::kAdamSum, Method::kConfig, Method::kMConfig, Method::kMAConfig,
                   Method::kPcgrad, Method::kImtlg}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("unknown method '" + name +
                    "' (expected adam-sum, config, m-config, ma-config, pcgrad or imtlg)");
}

void ExperimentConfig::validate() const {
  if (schema != 1) throw ConfigError("unsupported schema " + std::to_string(schema));
  if (name.empty() || name.find_first_not_of("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
                                             "0123456789_.-") != std::string::npos ||
      name == "." || name == "..") {
    throw ConfigError("name must be non-empty and use only letters, digits, '_', '.', '-'");
  }
  if (!kProblems.count(problem)) throw ConfigError("unknown problem '" + problem + "'");
  if (grouping == LossGrouping::kThree && problem != "burgers") {
    throw ConfigError("grouping = three is only defined for burgers");
  }
  if (step_rule == StepRule::kGradientDescent &&
      (method == Method::kMConfig || method == Method::kMAConfig)) {
    throw ConfigError(to_string(method) + " carries its own moments; use step_rule = adam");
  }
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be positive");
  if (schedule == Schedule::kCosine && (!(lr_final > 0.0) || !std::isfinite(lr_final))) {
    throw ConfigError("lr_final must be positive");
  }
  if (seeds.empty()) throw ConfigError("seeds must not be empty");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw ConfigError("seeds must be distinct");
  }
  if (eval_every == 0) throw ConfigError("eval_every must be at least 1");
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw ConfigError("eps must be >= 0");
  try {
    AdamHyperParams probe = adam;
    probe.lr = lr;
    probe.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (output.empty()) throw ConfigError("output must not be empty");
  if (is_pinn(problem)) {
    if (hidden.empty()) throw ConfigError("hidden must list at least one layer width");
    for (auto w : hidden) {
      if (w == 0) throw ConfigError("hidden layer widths must be positive");
    }
    if (residual_points == 0 || boundary_points == 0 || test_points == 0) {
      throw ConfigError("sample counts must be positive");
    }
    if (problem == "burgers" && initial_points == 0) {
      throw ConfigError("burgers needs initial_points > 0");
    }
    if (!(reynolds > 0.0)) throw ConfigError("reynolds must be positive");
  }
  if (!(ripple_a > 0.0)) throw ConfigError("ripple_a must be positive");
  if (quadratic_losses == 0 || quadratic_dim == 0) {
    throw ConfigError("quadratic_losses and quadratic_dim must be positive");
  }
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream out;
  out << "schema = " << schema << "\n"
      << "name = " << name << "\n"
      << "problem = " << problem << "\n"
      << "grouping = " << (grouping == LossGrouping::kTwo ? "two" : "three") << "\n"
      << "method = " << to_string(method) << "\n"
      << "step_rule = " << (step_rule == StepRule::kAdam ? "adam" : "gd") << "\n"
      << "iterations = " << iterations << "\n"
      << "schedule = " << (schedule == Schedule::kCosine ? "cosine" : "constant") << "\n"
      << "lr = " << format_double(lr) << "\n"
      << "lr_final = " << format_double(lr_final) << "\n"
      << "warmup = " << warmup << "\n"
      << "seeds = " << join(seeds) << "\n"
      << "eval_every = " << eval_every << "\n"
      << "eps = " << format_double(eps) << "\n"
      << "beta1 = " << format_double(adam.beta1) << "\n"
      << "beta2 = " << format_double(adam.beta2) << "\n"
      << "adam_eps = " << format_double(adam.eps) << "\n"
      << "output = " << output << "\n"
      << "parallel = " << (parallel ? "true" : "false") << "\n"
      << "hidden = " << join(hidden) << "\n"
      << "residual_points = " << residual_points << "\n"
      << "boundary_points = " << boundary_points << "\n"
      << "initial_points = " << initial_points << "\n"
      << "test_points = " << test_points << "\n"
      << "reynolds = " << format_double(reynolds) << "\n"
      << "ripple_a = " << format_double(ripple_a) << "\n"
      << "quadratic_losses = " << quadratic_losses << "\n"
      << "quadratic_dim = " << quadratic_dim << "\n"
      << "quadratic_seed = " << quadratic_seed << "\n";
  return out.str();
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::map<std::string, std::string> entries;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
    }
    if (!entries.emplace(key, value).second) throw ConfigError("duplicate key '" + key + "'");
  }
  if (!entries.count("schema")) throw ConfigError("missing 'schema = 1'");

  auto size = [](const std::string& k, const std::string& v) {
    return static_cast<std::size_t>(parse_unsigned(k, v));
  };
  for (const auto& [key, value] : entries) {
    if (key == "schema") {
      cfg.schema = static_cast<int>(std::min<std::uint64_t>(parse_unsigned(key, value), 1000));
    } else if (key == "name") {
      cfg.name = value;
    } else if (key == "problem") {
      cfg.problem = value;
    } else if (key == "grouping") {
      if (value == "two") {
        cfg.grouping = LossGrouping::kTwo;
      } else if (value == "three") {
        cfg.grouping = LossGrouping::kThree;
      } else {
        throw ConfigError("grouping must be two or three");
      }
    } else if (key == "method") {
      cfg.method = parse_method(value);
    } else if (key == "step_rule") {
      if (value == "adam") {
        cfg.step_rule = StepRule::kAdam;
      } else if (value == "gd") {
        cfg.step_rule = StepRule::kGradientDescent;
      } else {
        throw ConfigError("step_rule must be adam or gd");
      }
    } else if (key == "iterations") {
      cfg.iterations = size(key, value);
    } else if (key == "schedule") {
      if (value == "cosine") {
        cfg.schedule = Schedule::kCosine;
      } else if (value == "constant") {
        cfg.schedule = Schedule::kConstant;
      } else {
        throw ConfigError("schedule must be cosine or constant");
      }
    } else if (key == "lr") {
      cfg.lr = parse_double(key, value);
    } else if (key == "lr_final") {
      cfg.lr_final = parse_double(key, value);
    } else if (key == "warmup") {
      cfg.warmup = size(key, value);
    } else if (key == "seeds") {
      cfg.seeds.clear();
      for (const auto& s : split_list(value)) cfg.seeds.push_back(parse_unsigned(key, s));
    } else if (key == "eval_every") {
      cfg.eval_every = size(key, value);
    } else if (key == "eps") {
      cfg.eps = parse_double(key, value);
    } else if (key == "beta1") {
      cfg.adam.beta1 = parse_double(key, value);
    } else if (key == "beta2") {
      cfg.adam.beta2 = parse_double(key, value);
    } else if (key == "adam_eps") {
      cfg.adam.eps = parse_double(key, value);
    } else if (key == "output") {
      cfg.output = value;
    } else if (key == "parallel") {
      cfg.parallel = parse_bool(key, value);
    } else if (key == "hidden") {
      cfg.hidden.clear();
      for (const auto& s : split_list(value)) cfg.hidden.push_back(size(key, s));
    } else if (key == "residual_points") {
      cfg.residual_points = size(key, value);
    } else if (key == "boundary_points") {
      cfg.boundary_points = size(key, value);
    } else if (key == "initial_points") {
      cfg.initial_points = size(key, value);
    } else if (key == "test_points") {
      cfg.test_points = size(key, value);
    } else if (key == "reynolds") {
      cfg.reynolds = parse_double(key, value);
    } else if (key == "ripple_a") {
      cfg.ripple_a = parse_double(key, value);
    } else if (key == "quadratic_losses") {
      cfg.quadratic_losses = size(key, value);
    } else if (key == "quadratic_dim") {
      cfg.quadratic_dim = size(key, value);
    } else if (key == "quadratic_seed") {
      cfg.quadratic_seed = parse_unsigned(key, value);
    } else {
      throw ConfigError("unknown key '" + key + "'");
    }
  }
  cfg.adam.lr = cfg.lr;
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

double learning_rate(const ExperimentConfig& cfg, std::size_t it) {
  if (cfg.schedule == Schedule::kConstant) return cfg.lr;
  if (it < cfg.warmup) {
    return cfg.lr * static_cast<double>(it + 1) / static_cast<double>(cfg.warmup);
  }
  const std::size_t span = cfg.iterations > cfg.warmup + 1 ? cfg.iterations - 1 - cfg.warmup : 0;
  const double progress =
      span == 0 ? 1.0
                : std::min(1.0, static_cast<double>(it - cfg.warmup) / static_cast<double>(span));
  return cfg.lr_final +
         0.5 * (cfg.lr - cfg.lr_final) * (1.0 + std::cos(std::numbers::pi * progress));
}

std::unique_ptr<LossSet> make_problem(const ExperimentConfig& cfg) {
  cfg.validate();
  if (is_pinn(cfg.problem)) {
    PinnSettings s = cfg.problem == "burgers" ? burgers_settings() : kovasznay_settings();
    s.net.hidden = cfg.hidden;
    s.residual_points = cfg.residual_points;
    s.boundary_points = cfg.boundary_points;
    s.test_points = cfg.test_points;
    s.grouping = cfg.grouping;
    if (cfg.problem == "burgers") {
      s.initial_points = cfg.initial_points;
      return burgers_problem(s);
    }
    return kovasznay_problem(s, cfg.reynolds);
  }
  if (cfg.problem == "toy") return toy_landscape();
  if (cfg.problem == "ripple") {
    return ripple_landscape(cfg.ripple_a, Vector::Zero(2), make_vector({1.0, 1.0}));
  }
  if (cfg.problem == "quadratic") {
    return quadratic_suite(cfg.quadratic_losses, cfg.quadratic_dim, cfg.quadratic_seed);
  }
  return failure_vector_losses();
}

std::size_t backprops_per_iteration(Method method, std::size_t losses) {
  switch (method) {
    case Method::kAdamSum:
    case Method::kMConfig:
    case Method::kMAConfig:
      return 1;
    default:
      return losses;
  }
}

// ---------------------------------------------------------------------------
// Training

SeedResult run_seed(const ExperimentConfig& cfg, const LossSet& problem, std::uint64_t seed,
                    UpdateHook hook) {
  const std::size_t m = problem.num_losses();
  const std::size_t dim = problem.dimension();
  AdamHyperParams hp = cfg.adam;
  hp.lr = cfg.lr;

  SeedResult r;
  r.seed = seed;
  r.best_test_mse = kNaN;
  r.final_test_mse = kNaN;
  Vector params = problem.initial_parameters(seed);

  AdamState adam(dim, hp);
  MConfigState mconfig;
  MAConfigState maconfig;
  if (cfg.method == Method::kMConfig) {
    mconfig = MConfigState(m, dim, hp);
    mconfig.config_eps = cfg.eps;
  } else if (cfg.method == Method::kMAConfig) {
    maconfig = MAConfigState(m, dim, hp);
    maconfig.config_eps = cfg.eps;
  }
  const bool sees_all = cfg.method == Method::kConfig || cfg.method == Method::kPcgrad ||
                        cfg.method == Method::kImtlg;
  if (sees_all) r.conflict_free = true;

  std::vector<std::size_t> all_losses(m);
  for (std::size_t i = 0; i < m; ++i) all_losses[i] = i;

  std::uint64_t backprops = 0;
  auto fail = [&](const std::string& why) {
    r.failed = true;
    r.failure = why;
  };
  // Returns false when the iterate is no longer finite.
  auto checkpoint = [&](std::size_t it) {
    TrainRecord rec{it, problem.values(params, {seed, it}), problem.test_error(params), backprops,
                    seed};
    const bool finite = std::isfinite(rec.test_mse) &&
                        std::all_of(rec.losses.begin(), rec.losses.end(),
                                    [](double v) { return std::isfinite(v); });
    if (finite && (r.records.empty() || !(rec.test_mse >= r.best_test_mse))) {
      r.best_test_mse = rec.test_mse;
      r.best_iteration = it;
      r.best_losses = rec.losses;
    }
    r.final_test_mse = rec.test_mse;
    r.records.push_back(std::move(rec));
    return finite;
  };
  auto apply = [&](const Vector& direction, double lr) {
    if (cfg.step_rule == StepRule::kAdam) {
      adam.hyper.lr = lr;
      adam_step(adam, direction, params);
    } else {
      if (!direction.allFinite()) throw NonFiniteError("non-finite update direction");
      params -= lr * direction;
    }
  };

  try {
    for (std::size_t it = 0; it < cfg.iterations && !r.failed; ++it) {
      if (it % cfg.eval_every == 0 && !checkpoint(it)) {
        fail("NaN at iteration " + std::to_string(it));
        break;
      }
      const double lr = learning_rate(cfg, it);
      const BatchKey key{seed, it};
      switch (cfg.method) {
        case Method::kAdamSum: {
          auto ev = problem.evaluate(params, key, {.gradients = {}, .summed_gradient = true, .all_values = false});
          backprops += ev.backprops;
          if (hook) hook(ev.summed);
          apply(ev.summed, lr);
          break;
        }
        case Method::kConfig:
        case Method::kPcgrad:
        case Method::kImtlg: {
          auto ev = problem.evaluate(params, key, {.gradients = all_losses, .all_values = false});
          backprops += ev.backprops;
          for (const auto& g : ev.gradients) {
            if (!g.allFinite()) throw NonFiniteError("non-finite loss gradient");
          }
          const GradientSet grads(ev.gradients);
          AggregationResult agg = cfg.method == Method::kConfig ? config_update(grads, cfg.eps)
                                  : cfg.method == Method::kPcgrad
                                      ? pcgrad_update(grads, shuffle_seed(seed, it))
                                      : imtlg_update(grads, cfg.eps);
          if (hook) hook(agg.update);
          if (!diagnose(grads, agg.update, cfg.eps).conflict_free) r.conflict_free = false;
          apply(agg.update, lr);
          break;
        }
        case Method::kMConfig: {
          const std::size_t i = round_robin_index(mconfig.step + 1, m);
          auto ev = problem.evaluate(params, key, {.gradients = {i}, .all_values = false});
          backprops += ev.backprops;
          mconfig.hyper.lr = lr;
          mconfig_step(mconfig, i, ev.gradients[0], params);
          break;
        }
        case Method::kMAConfig: {
          const std::size_t i = round_robin_index(maconfig.step + 1, m);
          auto ev = problem.evaluate(params, key, {.gradients = {i}, .all_values = false});
          backprops += ev.backprops;
          maconfig.hyper.lr = lr;
          maconfig_step(maconfig, i, ev.gradients[0], params);
          break;
        }
      }
      if (!params.allFinite()) fail("non-finite parameters after iteration " + std::to_string(it));
    }
    if (!r.failed && !checkpoint(cfg.iterations)) {
      fail("NaN at iteration " + std::to_string(cfg.iterations));
    }
  } catch (const NonFiniteError& e) {
    fail(e.what());
  }
  if (r.failed) r.best_test_mse = kNaN;
  r.backprops = backprops;
  r.final_params = params;
  return r;
}

std::pair<double, double> mean_and_std(const std::vector<double>& xs) {
  if (xs.empty()) return {kNaN, kNaN};
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / static_cast<double>(xs.size());
  if (xs.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

ExperimentSummary run_experiment(const ExperimentConfig& cfg, UpdateHook hook) {
  const auto problem = make_problem(cfg);
  return run_experiment(cfg, *problem, hook);
}

ExperimentSummary run_experiment(const ExperimentConfig& cfg, const LossSet& problem,
                                 UpdateHook hook) {
  cfg.validate();
  ExperimentSummary s;
  s.config = cfg;
  s.loss_names = problem.loss_names();
  s.seeds.resize(cfg.seeds.size());

  const std::size_t workers =
      cfg.parallel ? std::min(cfg.seeds.size(), thread_cap()) : std::size_t{1};
  if (workers <= 1) {
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
      s.seeds[i] = run_seed(cfg, problem, cfg.seeds[i], hook);
    }
  } else {
    std::vector<std::exception_ptr> errors(cfg.seeds.size());
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < cfg.seeds.size(); i = next++) {
          try {
            s.seeds[i] = run_seed(cfg, problem, cfg.seeds[i], hook);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  std::vector<double> best;
  for (const auto& r : s.seeds) {
    s.any_failed = s.any_failed || r.failed;
    best.push_back(r.best_test_mse);
  }
  if (s.any_failed) {
    s.mean_best = kNaN;
    s.std_best = kNaN;
  } else {
    std::tie(s.mean_best, s.std_best) = mean_and_std(best);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Persistence

std::string format_double(double x) {
  if (std::isnan(x)) return "NaN";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string git_blob_hash(const std::string& content) {
  const std::string blob = "blob " + std::to_string(content.size()) + '\0' + content;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(blob.data(), blob.size(), digest, &length, EVP_sha1(), nullptr) != 1) {
    throw std::runtime_error("SHA-1 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < length; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 0xF];
  }
  return hex;
}

std::filesystem::path write_outputs(const ExperimentSummary& summary,
                                    const std::filesystem::path& root) {
  const auto dir = root / summary.config.name;
  std::filesystem::create_directories(dir);
  const std::size_t m = summary.loss_names.size();

  std::string listing;
  for (const auto& r : summary.seeds) {
    const std::string file = "seed" + std::to_string(r.seed) + ".csv";
    const std::string content = seed_csv(r, m);
    write_file(dir / file, content);
    listing += file + " " + git_blob_hash(content) + "\n";
  }
  const std::string sum = summary_csv(summary);
  write_file(dir / "summary.csv", sum);
  listing += "summary.csv " + git_blob_hash(sum) + "\n";

  std::string losses;
  for (std::size_t i = 0; i < m; ++i) {
    losses += "# loss_" + std::to_string(i + 1) + " = " + summary.loss_names[i] + "\n";
  }
  const std::string body = summary.config.to_text() + losses + listing;
  write_file(dir / "meta.txt", body + "content_hash " + git_blob_hash(body) + "\n");
  return dir;
}

// ---------------------------------------------------------------------------
// Comparisons

double relative_improvement(double baseline_mse, double method_mse) {
  if (!(baseline_mse > 0.0) || !std::isfinite(baseline_mse)) {
    throw std::invalid_argument("relative_improvement: baseline must be positive and finite");
  }
  if (std::isnan(method_mse)) return kNaN;
  const double ratio = method_mse / baseline_mse;
  return ratio <= 1.0 ? 100.0 * (1.0 - ratio) : -100.0 * (ratio - 1.0);
}

Comparison compare_methods(const std::vector<ExperimentConfig>& configs, UpdateHook hook) {
  if (configs.empty()) throw ConfigError("compare_methods: no configs");
  const auto& first = configs.front();
  std::set<std::string> names;
  for (const auto& c : configs) {
    c.validate();
    const bool same = c.problem == first.problem && c.grouping == first.grouping &&
                      c.seeds == first.seeds && c.hidden == first.hidden &&
                      c.residual_points == first.residual_points &&
                      c.boundary_points == first.boundary_points &&
                      c.initial_points == first.initial_points &&
                      c.test_points == first.test_points && c.reynolds == first.reynolds &&
                      c.ripple_a == first.ripple_a && c.quadratic_losses == first.quadratic_losses &&
                      c.quadratic_dim == first.quadratic_dim &&
                      c.quadratic_seed == first.quadratic_seed;
    if (!same) {
      throw ConfigError("compare_methods: '" + c.name + "' does not share the problem and seeds of '" +
                        first.name + "'");
    }
    if (!names.insert(c.name).second) {
      throw ConfigError("compare_methods: duplicate run name '" + c.name + "'");
    }
  }

  const auto problem = make_problem(first);
  Comparison out;
  for (const auto& c : configs) out.runs.push_back(run_experiment(c, *problem, hook));

  std::size_t baseline = 0;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    if (configs[i].method == Method::kAdamSum) {
      baseline = i;
      break;
    }
  }
  const double base = out.runs[baseline].mean_best;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const auto& run = out.runs[i];
    ComparisonRow row;
    row.name = configs[i].name;
    row.method = configs[i].method;
    row.mean_best = run.mean_best;
    row.std_best = run.std_best;
    row.improvement = base > 0.0 && std::isfinite(base) ? relative_improvement(base, run.mean_best)
                                                        : kNaN;
    row.conflict_free = run.seeds.front().conflict_free;
    for (const auto& r : run.seeds) {
      if (r.conflict_free && row.conflict_free) {
        row.conflict_free = *row.conflict_free && *r.conflict_free;
      }
      row.backprops += r.backprops;
    }
    out.rows.push_back(row);
  }
  return out;
}

std::string comparison_csv(const Comparison& comparison) {
  std::string out =
      "name,method,mean_best_test_mse,std_best_test_mse,improvement_percent,conflict_free,"
      "backprops\n";
  for (const auto& row : comparison.rows) {
    out += row.name + "," + to_string(row.method) + "," + format_double(row.mean_best) + "," +
           format_double(row.std_best) + "," + format_double(row.improvement) + "," +
           conflict_label(row.conflict_free) + "," + std::to_string(row.backprops) + "\n";
  }
  return out;
}

}  // namespace config
