#include "config/properties.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "config/aggregators.hpp"
#include "config/problems.hpp"

namespace config {

namespace {

Vector normal_vector(std::mt19937_64& rng, Eigen::Index k) {
  std::normal_distribution<double> dist;
  Vector v(k);
  for (Eigen::Index i = 0; i < k; ++i) v(i) = dist(rng);
  return v;
}

// The random trial family shared by the first three properties.
template <typename Visit>
void for_each_random_set(const PropertyOptions& opt, Visit visit) {
  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<std::size_t> losses(2, 5);
  std::uniform_int_distribution<Eigen::Index> dims(8, 256);
  for (std::size_t t = 0; t < opt.trials; ++t) {
    const std::size_t m = losses(rng);
    const Eigen::Index k = dims(rng);
    std::vector<Vector> rows;
    for (std::size_t i = 0; i < m; ++i) rows.push_back(normal_vector(rng, k));
    GradientSet grads(rows);
    AggregationResult r = config_update(grads);
    if (opt.flip_sign) r.update = -r.update;
    visit(grads, r.update);
  }
}

// Exact cosine, independent of the library's eps-regularized version.
double exact_cosine(const Vector& a, const Vector& b) { return a.dot(b) / (a.norm() * b.norm()); }

PropertyResult timed(const std::string& name, const std::function<void(PropertyResult&)>& body) {
  PropertyResult r;
  r.name = name;
  const auto start = std::chrono::steady_clock::now();
  body(r);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::string fmt(double x) {
  std::ostringstream out;
  out.precision(6);
  out << x;
  return out.str();
}

}  // namespace

PropertyResult check_conflict_freedom(const PropertyOptions& opt) {
  return timed("conflict_freedom", [&](PropertyResult& r) {
    r.limit = -1e-9;
    double worst = 1.0;
    std::size_t violations = 0;
    for_each_random_set(opt, [&](const GradientSet& g, const Vector& u) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double c = exact_cosine(g.row(i), u);
        worst = std::min(worst, c);
        if (!(c >= r.limit)) ++violations;
      }
    });
    r.worst = worst;
    r.passed = violations == 0;
    r.detail = "min cosine " + fmt(worst) + ", violating pairs " + std::to_string(violations) +
               " over " + std::to_string(opt.trials) + " sets";
  });
}

PropertyResult check_equal_projection(const PropertyOptions& opt) {
  return timed("equal_projection", [&](PropertyResult& r) {
    r.limit = 1e-6;
    double worst = 0.0;
    for_each_random_set(opt, [&](const GradientSet& g, const Vector& u) {
      double lo = 2.0;
      double hi = -2.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double c = exact_cosine(g.row(i), u);
        lo = std::min(lo, c);
        hi = std::max(hi, c);
      }
      const double spread = (hi - lo) / std::max(std::abs(hi), std::abs(lo));
      worst = std::max(worst, std::isnan(spread) ? INFINITY : spread);
    });
    r.worst = worst;
    r.passed = worst < r.limit;
    r.detail = "max relative cosine spread " + fmt(worst);
  });
}

PropertyResult check_magnitude_law(const PropertyOptions& opt) {
  return timed("magnitude_law", [&](PropertyResult& r) {
    r.limit = 1e-6;
    double worst = 0.0;
    for_each_random_set(opt, [&](const GradientSet& g, const Vector& u) {
      const Vector direction = u / u.norm();
      double projected = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        projected += g.row(i).norm() * exact_cosine(g.row(i), direction);
      }
      const double gap = std::abs(u.norm() - projected) / std::abs(projected);
      // A flipped update has negative projections, so the signed sum no longer matches.
      worst = std::max(worst, std::isnan(gap) ? INFINITY : gap);
    });
    r.worst = worst;
    r.passed = worst < r.limit;
    r.detail = "max relative gap |g_c| vs sum |g_i| S_c " + fmt(worst);
  });
}

PropertyResult check_two_loss_equivalence(const PropertyOptions& opt) {
  return timed("two_loss_equivalence", [&](PropertyResult& r) {
    r.limit = 1e-8;
    std::mt19937_64 rng(opt.seed + 1);
    std::uniform_int_distribution<Eigen::Index> dims(8, 256);
    double worst_cos = 0.0;
    double worst_mag = 0.0;
    double default_eps_mag = 0.0;
    for (std::size_t t = 0; t < opt.trials; ++t) {
      const Eigen::Index k = dims(rng);
      const Vector g1 = normal_vector(rng, k);
      const Vector g2 = normal_vector(rng, k);
      const GradientSet pair({g1, g2});
      Vector general = config_update(pair, 0.0).update;
      const Vector closed = config_update_two(g1, g2, 0.0).update;
      if (opt.flip_sign) general = -general;
      worst_cos = std::max(worst_cos, 1.0 - exact_cosine(general, closed));
      worst_mag = std::max(worst_mag, std::abs(general.norm() - closed.norm()) / closed.norm());
      const Vector g_eps = config_update(pair).update;
      const Vector c_eps = config_update_two(g1, g2).update;
      default_eps_mag = std::max(default_eps_mag, std::abs(g_eps.norm() - c_eps.norm()) / c_eps.norm());
    }
    r.worst = std::max(worst_mag, worst_cos * 100.0);
    r.passed = worst_cos <= 1e-10 && worst_mag <= 1e-8;
    r.detail = "eps=0: max 1-cos " + fmt(worst_cos) + ", max magnitude gap " + fmt(worst_mag) +
               "; default eps magnitude gap " + fmt(default_eps_mag);
  });
}

PropertyResult check_failure_vectors(const PropertyOptions& opt) {
  return timed("failure_vectors", [&](PropertyResult& r) {
    r.limit = 2e-3;
    const auto pc = pcgrad_failure_vectors();
    const GradientSet pcset(pc);

    Vector cf = config_update(pcset).update;
    if (opt.flip_sign) cf = -cf;
    const double config_err = (cf - make_vector({0.0, 0.0, 0.3})).cwiseAbs().maxCoeff();

    std::vector<Vector> unit;
    for (const auto& g : pc) unit.push_back(g.normalized());
    const GradientSet unitset(unit);
    std::vector<std::vector<std::size_t>> natural;
    for (std::size_t i = 0; i < 3; ++i) {
      std::vector<std::size_t> order;
      for (std::size_t j = 0; j < 3; ++j) {
        if (j != i) order.push_back(j);
      }
      order.push_back(i);
      natural.push_back(order);
    }
    const Vector pcg = pcgrad_update_ordered(unitset, natural).update;
    const double pcgrad_err = (pcg - make_vector({-0.351, -0.203, 0.658})).cwiseAbs().maxCoeff();
    const bool pcgrad_conflicts = pc[0].dot(pcg) < 0.0;

    const GradientSet imset(imtlg_failure_vectors());
    const Vector im = imtlg_update(imset).update;
    Vector cim = config_update(imset).update;
    if (opt.flip_sign) cim = -cim;
    double imtl_err = 0.0;
    double config_im_err = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      imtl_err = std::max(imtl_err, std::abs(exact_cosine(imset.row(i), im) + 0.7086));
      config_im_err = std::max(config_im_err, std::abs(exact_cosine(imset.row(i), cim) - 0.7086));
    }

    r.worst = std::max({config_err, pcgrad_err, imtl_err, config_im_err});
    r.passed = config_err <= 1e-3 && pcgrad_err <= 2e-3 && pcgrad_conflicts && imtl_err <= 1e-3 &&
               config_im_err <= 1e-3;
    r.detail = "ConFIG err " + fmt(config_err) + ", PCGrad err " + fmt(pcgrad_err) +
               (pcgrad_conflicts ? " (conflicts with g1)" : " (no conflict with g1)") +
               ", IMTL-G cosine err " + fmt(imtl_err) + ", ConFIG cosine err " + fmt(config_im_err);
  });
}

PropertyResult check_theorem1_monotonicity(const PropertyOptions& opt) {
  return timed("theorem1_monotonicity", [&](PropertyResult& r) {
    r.limit = 1e-12;
    double worst = -INFINITY;
    std::size_t suites = 0;
    for (std::size_t m : {2u, 4u}) {
      for (std::uint64_t s = 0; s < 2; ++s) {
        const auto suite = quadratic_suite(m, 32, opt.seed + 10 * m + s);
        const double gamma = 2.0 / suite->lipschitz();
        Vector theta = suite->initial_parameters(0);
        double loss = suite->total(theta);
        for (std::size_t step = 0; step < opt.descent_steps; ++step) {
          std::vector<Vector> grads;
          for (std::size_t i = 0; i < m; ++i) grads.push_back(suite->gradient(i, theta));
          Vector u = config_update(GradientSet(grads)).update;
          if (opt.flip_sign) u = -u;
          theta -= gamma * u;
          const double next = suite->total(theta);
          worst = std::max(worst, next - loss);
          loss = next;
        }
        ++suites;
      }
    }
    r.worst = worst;
    r.passed = worst <= r.limit;
    r.detail = "largest per-step increase " + fmt(worst) + " over " + std::to_string(suites) +
               " suites x " + std::to_string(opt.descent_steps) + " steps at gamma = 2/L";
  });
}

PropertyResult check_theorem2_bound(const PropertyOptions& opt) {
  return timed("theorem2_bound", [&](PropertyResult& r) {
    r.limit = 1.0;
    const double a = 6.0;
    const auto ripple = ripple_landscape(a, Vector::Zero(2), make_vector({1.0, 1.0}));
    const double gamma = 1.0 / ripple_lipschitz(a);
    Vector theta = ripple->initial_parameters(0);
    const double first_loss = ripple->total(theta);
    double min_grad2 = INFINITY;
    double alpha = INFINITY;
    double previous_min = INFINITY;
    double worst_ratio = 0.0;
    bool monotone = true;
    std::size_t stop_step = 0;
    const std::size_t checkpoints[] = {10, 100, 1000, 5000};
    std::size_t next = 0;
    for (std::size_t k = 1; k <= checkpoints[3]; ++k) {
      const Vector g1 = ripple->gradient(0, theta);
      const Vector g2 = ripple->gradient(1, theta);
      const Vector g = g1 + g2;
      min_grad2 = std::min(min_grad2, g.squaredNorm());
      Vector u = config_update(GradientSet({g1, g2})).update;
      if (opt.flip_sign) u = -u;
      // A vanishing ConFIG direction is the theorem's other limit; S_c is then rounding noise.
      if (stop_step == 0 && u.norm() <= 1e-10 * (g1.norm() + g2.norm())) stop_step = k;
      if (stop_step == 0) {
        alpha = std::min({alpha, exact_cosine(g1, u), exact_cosine(g2, u)});
        theta -= gamma * u;
      }
      if (k == checkpoints[next]) {
        const double bound =
            2.0 * (first_loss - ripple->total(theta)) / (gamma * alpha * alpha * static_cast<double>(k));
        const double ratio = alpha > 0.0 && bound > 0.0 ? min_grad2 / bound : INFINITY;
        worst_ratio = std::max(worst_ratio, ratio);
        monotone = monotone && min_grad2 <= previous_min;
        previous_min = min_grad2;
        ++next;
      }
    }
    r.worst = worst_ratio;
    r.passed = monotone && worst_ratio <= r.limit;
    r.detail = "max min|g|^2 / bound " + fmt(worst_ratio) + ", final min|g|^2 " + fmt(min_grad2) +
               ", alpha " + fmt(alpha) +
               (stop_step ? ", |g_c| vanished at step " + std::to_string(stop_step) : "");
  });
}

std::vector<std::string> property_names() {
  return {"conflict_freedom",      "equal_projection",     "magnitude_law",
          "two_loss_equivalence",  "failure_vectors",      "theorem1_monotonicity",
          "theorem2_bound"};
}

std::vector<PropertyResult> run_properties(const PropertyOptions& opt, const std::string& filter) {
  using Check = PropertyResult (*)(const PropertyOptions&);
  const Check checks[] = {check_conflict_freedom,       check_equal_projection,
                          check_magnitude_law,          check_two_loss_equivalence,
                          check_failure_vectors,        check_theorem1_monotonicity,
                          check_theorem2_bound};
  const auto names = property_names();
  std::vector<PropertyResult> out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (filter.empty() || names[i].find(filter) != std::string::npos) out.push_back(checks[i](opt));
  }
  return out;
}

}  // namespace config
