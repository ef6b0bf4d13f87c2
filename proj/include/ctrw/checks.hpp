#ifndef CTRW_CHECKS_HPP
#define CTRW_CHECKS_HPP

// Self-contained consistency suite: algebraic identities between the
// parameter maps under random parameters, normalization and moments of psi by
// quadrature, and the superposition integral against the closed forms.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ctrw/extreme_model.hpp"
#include "ctrw/mc_sim.hpp"
#include "ctrw/quadrature.hpp"
#include "ctrw/special_functions.hpp"
#include "ctrw/superposition.hpp"
#include "ctrw/superstat.hpp"

namespace ctrw {

struct CheckResult {
  std::string name;
  bool passed = false;
  double max_error = 0.0;
  double tolerance = 0.0;
  std::size_t n_cases = 0;
  std::string detail;
};

struct CheckReport {
  std::vector<CheckResult> checks;

  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
  }
  const CheckResult* find(const std::string& name) const {
    for (const auto& c : checks) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }
};

struct CheckOptions {
  double identity_tol = 1e-10;
  double normalization_tol = 1e-8;
  double superposition_tol = 1e-6;
  double moment_tol = 1e-6;
  std::size_t n_random = 1000;
  std::uint64_t seed = 20100512;
  /// Name of a check whose left-hand side is scaled by (1 + perturbation);
  /// used to confirm the suite notices a broken identity.
  std::string perturb;
  double perturbation = 1e-6;
  bool include_quadrature = true;
};

inline const std::vector<std::string>& identity_check_names() {
  static const std::vector<std::string> names = {
      "quantile_roundtrip",      "alpha_bq_roundtrip",     "tau_ratio_rq",
      "tau_ratio_power",         "bq_two_forms",           "superscaling_alpha",
      "superscaling_tau_ratio",  "elementary_roundtrip",   "gamma_complement",
  };
  return names;
}

namespace detail {

inline double rel_err(double a, double b) {
  if (a == b) return 0.0;
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

struct RandomCase {
  WeibullParams w;
  double q;
  double alpha;
  double tau_q;
  ScalingLaw law;
  double a;  // incomplete gamma shape
  double x;  // incomplete gamma argument
};

inline RandomCase random_case(const CounterRng& rng, std::size_t i) {
  const std::uint64_t base = 16 * static_cast<std::uint64_t>(i);
  auto uni = [&](int k, double lo, double hi) { return lo + (hi - lo) * rng.uniform(base + k); };
  auto log_uni = [&](int k, double lo, double hi) {
    return std::exp(uni(k, std::log(lo), std::log(hi)));
  };
  RandomCase c;
  c.w.eta = uni(0, 0.3, 1.5);
  c.w.eps_bar = log_uni(1, 1e-3, 1.0);
  c.w.calib = 1.0;
  c.q = c.w.eps_bar * uni(2, 0.1, 5.0);
  c.alpha = log_uni(3, 0.2, 20.0);
  c.tau_q = log_uni(4, 1e-3, 1e3);
  c.law.b = log_uni(5, 0.01, 0.2);
  c.law.zeta = uni(6, 1.0, 3.0);
  c.a = log_uni(7, 0.05, 50.0);
  c.x = log_uni(8, 1e-3, 100.0);
  return c;
}

/// One identity evaluated on a case: returns (lhs, rhs).
using IdentityFn = std::function<std::pair<double, double>(const RandomCase&)>;

inline RelaxationSpec relaxation_for(const RandomCase& c) {
  RelaxationSpec r;
  r.eta = c.w.eta;
  r.b_q = bq_from_alpha(c.alpha, c.w.eps_bar, c.w.eta);
  r.tau0 = tau0_from_tauq(c.tau_q, rq_of_q(c.w, c.q), c.alpha);
  return r;
}

inline std::vector<std::pair<std::string, IdentityFn>> identities() {
  std::vector<std::pair<std::string, IdentityFn>> out;
  out.emplace_back("quantile_roundtrip", [](const RandomCase& c) {
    return std::pair{q_of_log_rq(c.w, log_rq_of_q(c.w, c.q)), c.q};
  });
  out.emplace_back("alpha_bq_roundtrip", [](const RandomCase& c) {
    return std::pair{alpha_from_bq(bq_from_alpha(c.alpha, c.w.eps_bar, c.w.eta), c.w.eps_bar,
                                   c.w.eta),
                     c.alpha};
  });
  out.emplace_back("tau_ratio_rq", [](const RandomCase& c) {
    const auto r = relaxation_for(c);
    const double lhs = log_rq_from_tau_ratios(relaxation_time(r, c.q),
                                              relaxation_time(r, c.w.eps_bar), r.tau0);
    return std::pair{lhs, log_rq_of_q(c.w, c.q)};
  });
  out.emplace_back("tau_ratio_power", [](const RandomCase& c) {
    const auto r = relaxation_for(c);
    const double alpha = alpha_from_bq(r.b_q, c.w.eps_bar, r.eta);
    return std::pair{log_relaxation_time(r, c.q) - std::log(r.tau0),
                     log_rq_of_q(c.w, c.q) / alpha};
  });
  out.emplace_back("bq_two_forms", [](const RandomCase& c) {
    return std::pair{scaling_bq(c.law, c.w, c.q),
                     scaling_bq_from_rq(c.law, c.w.eps_bar, c.w.eta, rq_of_q(c.w, c.q))};
  });
  out.emplace_back("superscaling_alpha", [](const RandomCase& c) {
    return std::pair{alpha_from_bq(scaling_bq(c.law, c.w, c.q), c.w.eps_bar, c.w.eta),
                     alpha_from_scaling(c.law, rq_of_q(c.w, c.q))};
  });
  out.emplace_back("superscaling_tau_ratio", [](const RandomCase& c) {
    RelaxationSpec r;
    r.eta = c.w.eta;
    r.b_q = scaling_bq(c.law, c.w, c.q);
    r.tau0 = c.tau_q;
    return std::pair{log_relaxation_time(r, c.q) - std::log(r.tau0),
                     log_tauq_ratio_from_scaling(c.law, rq_of_q(c.w, c.q))};
  });
  out.emplace_back("elementary_roundtrip", [](const RandomCase& c) {
    const auto r = relaxation_for(c);
    const auto sp = superstat_from_relaxation(r, c.w, c.q);
    // tau_Q(0) recovered from the derived (alpha, tau_q) pair.
    return std::pair{log_tau0_from_tauq(sp.tau_q, rq_of_q(c.w, c.q), sp.alpha), std::log(r.tau0)};
  });
  out.emplace_back("gamma_complement", [](const RandomCase& c) {
    return std::pair{upper_incomplete_gamma(c.a, c.x) + lower_incomplete_gamma(c.a, c.x),
                     gamma_complete(c.a)};
  });
  return out;
}

inline double perturb_factor(const CheckOptions& o, const std::string& name) {
  return o.perturb == name ? 1.0 + o.perturbation : 1.0;
}

inline const std::vector<double>& reference_alphas() {
  static const std::vector<double> a = {0.47, 0.95, 1.9, 3.0};
  return a;
}

// Integral of dt^m psi over [0, inf): adaptive panels up to X plus the
// power-law tail closure, exact to O(exp(-X/tau)).
inline double psi_moment_by_quadrature(const SuperstatParams& sp, int m) {
  const double x_max = 1e6;
  auto f = [&](double x) { return std::pow(x, m) * psi(sp, x * sp.tau_q) * sp.tau_q; };
  const auto breaks = log_breaks(1e-8, x_max, 3, true);
  const double body = integrate_panels(f, breaks, {1e-13, 0.0, 2000}).value;
  const double a = sp.alpha;
  const double tail = a * std::exp(log_gamma(1.0 + a)) * std::pow(x_max, m - a) / (a - m);
  return (body + tail) * std::pow(sp.tau_q, m);
}

}  // namespace detail

inline CheckReport run_checks(const CheckOptions& opts = {}) {
  CheckReport report;
  const CounterRng rng(opts.seed, 7);
  for (const auto& [name, fn] : detail::identities()) {
    CheckResult res;
    res.name = name;
    res.tolerance = opts.identity_tol;
    const double factor = detail::perturb_factor(opts, name);
    for (std::size_t i = 0; i < opts.n_random; ++i) {
      const auto c = detail::random_case(rng, i);
      const auto [lhs, rhs] = fn(c);
      res.max_error = std::max(res.max_error, detail::rel_err(lhs * factor, rhs));
      ++res.n_cases;
    }
    res.passed = res.max_error <= res.tolerance;
    report.checks.push_back(res);
  }
  if (!opts.include_quadrature) return report;

  {
    CheckResult res;
    res.name = "normalization";
    res.tolerance = opts.normalization_tol;
    const double factor = detail::perturb_factor(opts, res.name);
    for (double a : detail::reference_alphas()) {
      const SuperstatParams sp{a, 1.0};
      res.max_error = std::max(res.max_error,
                               std::abs(detail::psi_moment_by_quadrature(sp, 0) * factor - 1.0));
      ++res.n_cases;
    }
    res.passed = res.max_error <= res.tolerance;
    report.checks.push_back(res);
  }
  {
    CheckResult res;
    res.name = "moments";
    res.tolerance = opts.moment_tol;
    const double factor = detail::perturb_factor(opts, res.name);
    bool divergence_ok = true;
    for (double a : detail::reference_alphas()) {
      const SuperstatParams sp{a, 1.7};
      for (int m : {1, 2}) {
        const auto closed = moment(sp, 1.0, m, MomentConvention::conditional);
        if (a <= m) {
          divergence_ok = divergence_ok && !closed.has_value();
          continue;
        }
        if (!closed) {
          divergence_ok = false;
          continue;
        }
        res.max_error = std::max(
            res.max_error, detail::rel_err(detail::psi_moment_by_quadrature(sp, m) * factor, *closed));
        ++res.n_cases;
      }
    }
    res.passed = divergence_ok && res.max_error <= res.tolerance;
    if (!divergence_ok) res.detail = "divergent moment not signaled";
    report.checks.push_back(res);
  }
  {
    CheckResult res;
    res.name = "superposition";
    res.tolerance = opts.superposition_tol;
    const double factor = detail::perturb_factor(opts, res.name);
    const WeibullParams w{0.8246, 0.0078, 1.0};
    const double q = q_of_rq(w, 10.0);
    for (double a : detail::reference_alphas()) {
      for (Direction dir : {Direction::expanding, Direction::clustering}) {
        if (dir == Direction::clustering && a != 0.47) continue;
        RelaxationSpec r;
        r.eta = w.eta;
        r.direction = dir;
        r.b_q = bq_from_alpha(a, w.eps_bar, w.eta);
        const double tau_q = 1.0;
        const double log_ratio = std::log(10.0) / a;
        r.tau0 = std::exp(std::log(tau_q) + (dir == Direction::expanding ? -log_ratio : log_ratio));
        const SuperstatParams sp{a, tau_q, dir};
        const double lo = dir == Direction::expanding ? 1e-3 : 1e-2;
        const double hi = dir == Direction::expanding ? 1e3 : 50.0;
        for (int k = 0; k < 9; ++k) {
          const double x = lo * std::pow(hi / lo, k / 8.0);
          const double closed = dir == Direction::expanding ? psi(sp, x) : psi_clustering(sp, x);
          const double numeric = psi_by_superposition(r, w, q, x).value;
          res.max_error = std::max(res.max_error, detail::rel_err(numeric * factor, closed));
          ++res.n_cases;
        }
      }
    }
    res.passed = res.max_error <= res.tolerance;
    report.checks.push_back(res);
  }
  return report;
}

}  // namespace ctrw

#endif  // CTRW_CHECKS_HPP
