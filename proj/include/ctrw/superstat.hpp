#ifndef CTRW_SUPERSTAT_HPP
#define CTRW_SUPERSTAT_HPP

// Closed-form interevent-time superstatistics of the CTRW valley model with
// Weibull-distributed extremes.
//
// Conventions
//   x = dt / tau_q is the relative interevent time.
//   psi(...) is the conditional (normalized) density: it integrates to 1 and
//   equals R_Q times the raw superposition integral over eps >= Q, which
//   psi_unconditional(...) returns.
//   Relaxation time: tau(eps) = tau0 * exp(+-(B_Q eps)^eta), '+' for the
//   expanding hierarchy, '-' for clustering.

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "ctrw/extreme_model.hpp"
#include "ctrw/special_functions.hpp"

namespace ctrw {

enum class Direction { expanding, clustering };

inline std::string_view to_string(Direction d) {
  return d == Direction::expanding ? "expanding" : "clustering";
}

inline Direction direction_from_string(std::string_view s) {
  if (s == "expanding") return Direction::expanding;
  if (s == "clustering") return Direction::clustering;
  throw std::invalid_argument("unknown direction '" + std::string(s) + "'");
}

/// Selects the clustering density: `superposition` is the form obtained by
/// integrating the conditional exponential against the Weibull law; `printed`
/// is the historical formula with exponent -(1+alpha) and upper gamma of
/// argument 1+alpha, kept for comparison only.
enum class ClusteringForm { superposition, printed };

/// Above this alpha the density is evaluated as its exponential limit.
inline constexpr double kExponentialAlpha = 500.0;

struct RelaxationSpec {
  double tau0 = 1.0;
  double b_q = 1.0;
  double eta = 1.0;
  Direction direction = Direction::expanding;

  void validate() const {
    if (!(tau0 > 0.0) || !(b_q > 0.0) || !(eta > 0.0) || !std::isfinite(tau0) ||
        !std::isfinite(b_q) || !std::isfinite(eta)) {
      throw std::domain_error("RelaxationSpec: tau0, b_q, eta must be finite and > 0");
    }
  }
};

struct SuperstatParams {
  double alpha = 1.0;
  double tau_q = 1.0;
  Direction direction = Direction::expanding;
  double weight = 1.0;

  void validate() const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
      throw std::domain_error("SuperstatParams: alpha must be finite and > 0");
    }
    if (!(tau_q > 0.0) || !std::isfinite(tau_q)) {
      throw std::domain_error("SuperstatParams: tau_q must be finite and > 0");
    }
    if (!(weight >= 0.0 && weight <= 1.0)) {
      throw std::domain_error("SuperstatParams: weight must lie in [0, 1]");
    }
  }
};

/// Universal prefactor B and exponent zeta of 1/alpha_Q = B ln^zeta R_Q.
struct ScalingLaw {
  double b = 1.0;
  double zeta = 1.0;

  void validate() const {
    if (!(b > 0.0) || !(zeta > 0.0) || !std::isfinite(b) || !std::isfinite(zeta)) {
      throw std::domain_error("ScalingLaw: b and zeta must be finite and > 0");
    }
  }
};

namespace detail {

inline double relative_time(const SuperstatParams& sp, double dt, const char* fn) {
  sp.validate();
  if (!(dt >= 0.0)) throw std::domain_error(std::string(fn) + ": dt must be >= 0");
  return dt / sp.tau_q;
}

inline void require_direction(const SuperstatParams& sp, Direction d, const char* fn) {
  if (sp.direction != d) {
    throw std::invalid_argument(std::string(fn) + ": expects " + std::string(to_string(d)) +
                                " parameters");
  }
}

inline double exp_or_throw(double log_value, const char* fn) {
  if (log_value > std::log(std::numeric_limits<double>::max())) {
    throw std::overflow_error(std::string(fn) + ": result overflows double");
  }
  return std::exp(log_value);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Relaxation-time law and parameter maps

/// ln tau(eps).
inline double log_relaxation_time(const RelaxationSpec& r, double eps) {
  r.validate();
  if (!(eps >= 0.0)) throw std::domain_error("relaxation_time: eps must be >= 0");
  const double s = std::pow(r.b_q * eps, r.eta);
  return std::log(r.tau0) + (r.direction == Direction::expanding ? s : -s);
}

/// tau(eps) = tau0 exp(+-(B_Q eps)^eta); tau(0) == tau0 exactly.
inline double relaxation_time(const RelaxationSpec& r, double eps) {
  if (eps == 0.0) {
    r.validate();
    return r.tau0;
  }
  return detail::exp_or_throw(log_relaxation_time(r, eps), "relaxation_time");
}

/// alpha_Q = 1 / (B_Q eps_bar)^eta.
inline double alpha_from_bq(double b_q, double eps_bar, double eta) {
  if (!(b_q > 0.0) || !(eps_bar > 0.0) || !(eta > 0.0)) {
    throw std::domain_error("alpha_from_bq: arguments must be > 0");
  }
  return std::exp(-eta * std::log(b_q * eps_bar));
}

/// B_Q = (1/alpha)^(1/eta) / eps_bar.
inline double bq_from_alpha(double alpha, double eps_bar, double eta) {
  if (!(alpha > 0.0) || !(eps_bar > 0.0) || !(eta > 0.0)) {
    throw std::domain_error("bq_from_alpha: arguments must be > 0");
  }
  return std::exp(-std::log(alpha) / eta) / eps_bar;
}

/// ln tau_Q(0) = ln tau_Q(Q) - ln(R_Q)/alpha.
inline double log_tau0_from_tauq(double tau_q, double r_q, double alpha) {
  if (!(tau_q > 0.0) || !(r_q > 0.0) || !(alpha > 0.0)) {
    throw std::domain_error("tau0_from_tauq: arguments must be > 0");
  }
  return std::log(tau_q) - std::log(r_q) / alpha;
}

/// tau_Q(0) = tau_Q(Q) R_Q^(-1/alpha). May underflow to 0 for tiny alpha;
/// check log_tau0_from_tauq when that matters.
inline double tau0_from_tauq(double tau_q, double r_q, double alpha) {
  return std::exp(log_tau0_from_tauq(tau_q, r_q, alpha));
}

/// ln R_Q = ln(tau(Q)/tau(0)) / ln(tau(eps_bar)/tau(0)).
inline double log_rq_from_tau_ratios(double tau_at_q, double tau_at_eps_bar, double tau0) {
  if (!(tau_at_q > 0.0) || !(tau_at_eps_bar > 0.0) || !(tau0 > 0.0)) {
    throw std::domain_error("rq_from_tau_ratios: relaxation times must be > 0");
  }
  const double den = std::log(tau_at_eps_bar / tau0);
  if (den == 0.0 || !std::isfinite(den)) {
    throw std::domain_error("rq_from_tau_ratios: tau(eps_bar) must differ from tau(0)");
  }
  return std::log(tau_at_q / tau0) / den;
}

inline double rq_from_tau_ratios(double tau_at_q, double tau_at_eps_bar, double tau0) {
  return detail::exp_or_throw(log_rq_from_tau_ratios(tau_at_q, tau_at_eps_bar, tau0),
                              "rq_from_tau_ratios");
}

/// Expanding-hierarchy density parameters implied by a relaxation law and a
/// Weibull scale at threshold q: alpha from B_Q and tau_q = tau(q).
inline SuperstatParams superstat_from_relaxation(const RelaxationSpec& r, const WeibullParams& w,
                                                 double q) {
  r.validate();
  w.validate();
  SuperstatParams sp;
  sp.alpha = alpha_from_bq(r.b_q, w.eps_bar, r.eta);
  sp.tau_q = relaxation_time(r, q);
  sp.direction = r.direction;
  return sp;
}

// ---------------------------------------------------------------------------
// Superscaling

/// B_Q = B^(1/eta) Q^zeta / eps_bar^(1+zeta).
inline double scaling_bq(const ScalingLaw& law, const WeibullParams& p, double q) {
  law.validate();
  p.validate();
  if (!(q > 0.0)) throw std::domain_error("scaling_bq: q must be > 0");
  return std::exp(std::log(law.b) / p.eta + law.zeta * std::log(q) -
                  (1.0 + law.zeta) * std::log(p.eps_bar));
}

/// Same B_Q written through the scaling variable: (B^(1/eta)/eps_bar) ln^(zeta/eta) R_Q.
inline double scaling_bq_from_rq(const ScalingLaw& law, double eps_bar, double eta, double r_q) {
  law.validate();
  if (!(r_q > 1.0)) throw std::domain_error("scaling_bq_from_rq: R_Q must be > 1");
  if (!(eps_bar > 0.0) || !(eta > 0.0)) {
    throw std::domain_error("scaling_bq_from_rq: eps_bar and eta must be > 0");
  }
  return std::exp(std::log(law.b) / eta - std::log(eps_bar) +
                  (law.zeta / eta) * std::log(std::log(r_q)));
}

/// alpha_Q from 1/alpha_Q = B ln^zeta R_Q.
inline double alpha_from_scaling(const ScalingLaw& law, double r_q) {
  law.validate();
  if (!(r_q > 1.0)) throw std::domain_error("alpha_from_scaling: R_Q must be > 1");
  return 1.0 / (law.b * std::pow(std::log(r_q), law.zeta));
}

/// ln(tau_Q(Q)/tau_Q(0)) = B ln^(1+zeta) R_Q.
inline double log_tauq_ratio_from_scaling(const ScalingLaw& law, double r_q) {
  law.validate();
  if (!(r_q > 1.0)) throw std::domain_error("tauq_ratio_from_scaling: R_Q must be > 1");
  return law.b * std::pow(std::log(r_q), 1.0 + law.zeta);
}

inline double tauq_ratio_from_scaling(const ScalingLaw& law, double r_q) {
  return detail::exp_or_throw(log_tauq_ratio_from_scaling(law, r_q), "tauq_ratio_from_scaling");
}

// ---------------------------------------------------------------------------
// Densities

/// (1/tau) exp(-dt/tau), the large-alpha limit.
inline double psi_exponential(double tau_q, double dt) {
  if (!(tau_q > 0.0)) throw std::domain_error("psi_exponential: tau must be > 0");
  if (!(dt >= 0.0)) throw std::domain_error("psi_exponential: dt must be >= 0");
  return std::exp(-dt / tau_q) / tau_q;
}

/// Expanding-hierarchy density
///   psi(dt) = (alpha/tau) x^-(1+alpha) gamma(1+alpha, x),  x = dt/tau,
/// with the removable singularity at dt = 0 filled by alpha/(tau(1+alpha)).
inline double psi(const SuperstatParams& sp, double dt) {
  const double x = detail::relative_time(sp, dt, "psi");
  detail::require_direction(sp, Direction::expanding, "psi");
  if (sp.alpha > kExponentialAlpha) return psi_exponential(sp.tau_q, dt);
  return sp.alpha / sp.tau_q * lower_gamma_scaled(1.0 + sp.alpha, x);
}

/// The raw superposition integral, psi / R_Q; integrates to 1/R_Q.
inline double psi_unconditional(const SuperstatParams& sp, double r_q, double dt) {
  if (!(r_q >= 1.0)) throw std::domain_error("psi_unconditional: R_Q must be >= 1");
  return psi(sp, dt) / r_q;
}

/// Power-law asymptote (alpha/tau) x^-(1+alpha) Gamma(1+alpha), for x >> 1.
inline double psi_tail(const SuperstatParams& sp, double dt) {
  const double x = detail::relative_time(sp, dt, "psi_tail");
  if (x == 0.0) return std::numeric_limits<double>::infinity();
  return std::exp(std::log(sp.alpha / sp.tau_q) - (1.0 + sp.alpha) * std::log(x) +
                  log_gamma(1.0 + sp.alpha));
}

/// Short-time exponential form (1/tau)(alpha/(1+alpha)) exp(-(1+alpha)/(2+alpha) x).
inline double psi_initial(const SuperstatParams& sp, double dt) {
  const double x = detail::relative_time(sp, dt, "psi_initial");
  const double a = sp.alpha;
  return (a / (1.0 + a)) * std::exp(-(1.0 + a) / (2.0 + a) * x) / sp.tau_q;
}

/// P(dt' > dt) under psi: alpha x^-alpha gamma(alpha, x).
inline double psi_survival(const SuperstatParams& sp, double dt) {
  const double x = detail::relative_time(sp, dt, "psi_survival");
  if (sp.alpha > kExponentialAlpha) return std::exp(-x);
  return sp.alpha * lower_gamma_scaled(sp.alpha, x);
}

inline double psi_cdf(const SuperstatParams& sp, double dt) {
  const double x = detail::relative_time(sp, dt, "psi_cdf");
  if (sp.alpha > kExponentialAlpha) return -std::expm1(-x);
  return 1.0 - psi_survival(sp, dt);
}

/// Clustering-hierarchy density with tau_q = tau'(Q).
///
/// `superposition` form: (alpha/tau) x^(alpha-1) Gamma'(1-alpha, x). Normalized
/// for every alpha; power law x^(alpha-1) at small x when alpha < 1, finite
/// limit alpha/(tau(alpha-1)) when alpha > 1, exponential truncation at large x.
/// `printed` form: (alpha/tau) x^-(1+alpha) Gamma'(1+alpha, x).
inline double psi_clustering(const SuperstatParams& sp, double dt,
                             ClusteringForm form = ClusteringForm::superposition) {
  const double x = detail::relative_time(sp, dt, "psi_clustering");
  detail::require_direction(sp, Direction::clustering, "psi_clustering");
  const double a = sp.alpha;
  if (form == ClusteringForm::printed) {
    if (x == 0.0) throw std::domain_error("psi_clustering: printed form diverges at dt = 0");
    return std::exp(std::log(a / sp.tau_q) - (1.0 + a) * std::log(x) +
                    log_upper_incomplete_gamma(1.0 + a, x));
  }
  if (a > kExponentialAlpha) return psi_exponential(sp.tau_q, dt);
  if (x == 0.0) {
    if (a <= 1.0) {
      throw std::domain_error("psi_clustering: density diverges at dt = 0 for alpha <= 1");
    }
    return a / (sp.tau_q * (a - 1.0));
  }
  // x^(alpha-1) Gamma'(1-alpha, x) = e^-x * upper_gamma_scaled(1-alpha, x)
  return a / sp.tau_q * std::exp(-x) * upper_gamma_scaled(1.0 - a, x);
}

/// P(dt' > dt) under the superposition clustering density:
/// alpha x^alpha Gamma'(-alpha, x).
inline double psi_clustering_survival(const SuperstatParams& sp, double dt) {
  const double x = detail::relative_time(sp, dt, "psi_clustering_survival");
  detail::require_direction(sp, Direction::clustering, "psi_clustering_survival");
  if (sp.alpha > kExponentialAlpha) return std::exp(-x);
  if (x == 0.0) return 1.0;
  return sp.alpha * std::exp(-x) * upper_gamma_scaled(-sp.alpha, x);
}

/// Leading small-time behaviour of psi_clustering. For the printed form this
/// is the power law (alpha/tau) x^-(1+alpha) Gamma(1+alpha); for the
/// superposition form (alpha/tau) Gamma(1-alpha) x^(alpha-1) when alpha < 1 and
/// the constant alpha/(tau(alpha-1)) when alpha > 1.
inline double psi_clustering_initial(const SuperstatParams& sp, double dt,
                                     ClusteringForm form = ClusteringForm::superposition) {
  const double x = detail::relative_time(sp, dt, "psi_clustering_initial");
  const double a = sp.alpha;
  if (form == ClusteringForm::printed) {
    if (x == 0.0) return std::numeric_limits<double>::infinity();
    return std::exp(std::log(a / sp.tau_q) - (1.0 + a) * std::log(x) + log_gamma(1.0 + a));
  }
  if (a > 1.0) return a / (sp.tau_q * (a - 1.0));
  if (a == 1.0 || x == 0.0) return std::numeric_limits<double>::infinity();
  return a / sp.tau_q * std::tgamma(1.0 - a) * std::pow(x, a - 1.0);
}

/// w * psi + (1 - w) * psi_clustering; each term is skipped when its weight is 0.
inline double psi_mixture(const SuperstatParams& expanding, const SuperstatParams& clustering,
                          double w, double dt,
                          ClusteringForm form = ClusteringForm::superposition) {
  if (!(w >= 0.0 && w <= 1.0)) throw std::domain_error("psi_mixture: weight must lie in [0, 1]");
  double out = 0.0;
  if (w > 0.0) out += w * psi(expanding, dt);
  if (w < 1.0) out += (1.0 - w) * psi_clustering(clustering, dt, form);
  return out;
}

// ---------------------------------------------------------------------------
// Moments

enum class MomentConvention {
  /// R_Q tau^m m! / (1 - m/alpha): the closed form as usually quoted, equal to
  /// R_Q at m = 0.
  with_rq,
  /// tau^m m! / (1 - m/alpha) = int dt^m psi(dt) d(dt), psi normalized.
  conditional,
};

/// m-th interevent moment, or nullopt when it diverges (alpha <= m).
inline std::optional<double> moment(const SuperstatParams& sp, double r_q, int m,
                                    MomentConvention conv = MomentConvention::with_rq) {
  sp.validate();
  if (m < 0) throw std::domain_error("moment: order must be >= 0");
  if (conv == MomentConvention::with_rq && !(r_q >= 1.0)) {
    throw std::domain_error("moment: R_Q must be >= 1");
  }
  if (sp.alpha <= m) return std::nullopt;
  const double factor = conv == MomentConvention::with_rq ? r_q : 1.0;
  // ln(m!) + m ln(tau)
  const double log_core = detail::lgamma_positive(m + 1.0) + m * std::log(sp.tau_q);
  const double shape = sp.alpha > kExponentialAlpha ? 1.0 : 1.0 / (1.0 - m / sp.alpha);
  return factor * shape * std::exp(log_core);
}

}  // namespace ctrw

#endif  // CTRW_SUPERSTAT_HPP
