#ifndef CTRW_EXTREME_MODEL_HPP
#define CTRW_EXTREME_MODEL_HPP

// Weibull law of extreme return magnitudes and the threshold <-> mean
// interevent time relation it implies. Time is measured in sampling ticks
// throughout (the time unit is fixed to 1).

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "ctrw/special_functions.hpp"

namespace ctrw {

/// Shape `eta` and scale `eps_bar` of the extreme-return density, plus the
/// multiplicative calibration constant applied to R_Q curves.
struct WeibullParams {
  double eta = 1.0;
  double eps_bar = 1.0;
  double calib = 1.0;

  void validate() const {
    if (!(eta > 0.0) || !std::isfinite(eta) || !(eps_bar > 0.0) || !std::isfinite(eps_bar) ||
        !(calib > 0.0) || !std::isfinite(calib)) {
      throw std::domain_error("WeibullParams: eta, eps_bar and calib must be finite and > 0");
    }
  }
  /// The model regime of interest has eta < 1; fits flag anything else.
  bool in_heavy_regime() const { return eta < 1.0; }
};

/// A threshold Q and its mean interevent time R_Q.
struct ThresholdPoint {
  double q = 0.0;
  double r_q = 1.0;
};

struct WeibullMoments {
  double relative_mean;      // <eps> / eps_bar
  double relative_variance;  // sigma^2 / <eps>^2
};

/// Weibull density (eta/eps_bar)(eps/eps_bar)^(eta-1) exp(-(eps/eps_bar)^eta).
/// For eta < 1 the density diverges at the origin and +inf is returned there.
inline double weibull_pdf(const WeibullParams& p, double eps) {
  p.validate();
  if (!(eps >= 0.0)) throw std::domain_error("weibull_pdf: eps must be >= 0");
  if (eps == 0.0) {
    if (p.eta < 1.0) return std::numeric_limits<double>::infinity();
    return p.eta == 1.0 ? 1.0 / p.eps_bar : 0.0;
  }
  const double z = eps / p.eps_bar;
  const double zeta = std::pow(z, p.eta);
  return (p.eta / p.eps_bar) * (zeta / z) * std::exp(-zeta);
}

/// P(eps >= q) = exp(-(q/eps_bar)^eta).
inline double weibull_survival(const WeibullParams& p, double q) {
  p.validate();
  if (!(q >= 0.0)) throw std::domain_error("weibull_survival: q must be >= 0");
  return std::exp(-std::pow(q / p.eps_bar, p.eta));
}

/// Relative mean and variance; functions of eta alone.
inline WeibullMoments weibull_moments(const WeibullParams& p) {
  p.validate();
  const double inv = 1.0 / p.eta;
  const double lg1 = log_gamma(inv);
  const double lg2 = log_gamma(2.0 * inv);
  const double mean = std::exp(lg1 - std::log(p.eta));
  const double var = 2.0 * p.eta * std::exp(lg2 - 2.0 * lg1) - 1.0;
  return {mean, var};
}

/// ln R_Q = ln(calib) + (q/eps_bar)^eta. Never overflows.
inline double log_rq_of_q(const WeibullParams& p, double q) {
  p.validate();
  if (!(q >= 0.0)) throw std::domain_error("log_rq_of_q: q must be >= 0");
  return std::log(p.calib) + std::pow(q / p.eps_bar, p.eta);
}

/// Mean interevent time R_Q = calib * exp((q/eps_bar)^eta).
inline double rq_of_q(const WeibullParams& p, double q) {
  const double log_r = log_rq_of_q(p, q);
  if (log_r > std::log(std::numeric_limits<double>::max())) {
    throw std::overflow_error("rq_of_q: R_Q overflows (ln R_Q = " + std::to_string(log_r) +
                              "); use log_rq_of_q");
  }
  return std::exp(log_r);
}

/// Threshold for a given ln R_Q.
inline double q_of_log_rq(const WeibullParams& p, double log_r_q) {
  p.validate();
  const double excess = log_r_q - std::log(p.calib);
  if (!(excess >= -1e-15 * std::max(1.0, std::abs(log_r_q)))) {
    throw std::domain_error("q_of_rq: R_Q must be >= calib");
  }
  if (excess <= 0.0) return 0.0;
  return p.eps_bar * std::pow(excess, 1.0 / p.eta);
}

/// Inverse of rq_of_q: eps_bar * ln(r_q/calib)^(1/eta).
inline double q_of_rq(const WeibullParams& p, double r_q) {
  if (!(r_q > 0.0)) throw std::domain_error("q_of_rq: R_Q must be > 0");
  p.validate();
  if (r_q < p.calib) throw std::domain_error("q_of_rq: R_Q must be >= calib");
  return q_of_log_rq(p, std::log(r_q));
}

/// Draw from the Weibull conditioned on eps >= q by inverse CDF:
/// eps = eps_bar * ((q/eps_bar)^eta - ln u)^(1/eta). Monotone decreasing in u.
inline double sample_excess(const WeibullParams& p, double q, double u) {
  p.validate();
  if (!(q >= 0.0)) throw std::domain_error("sample_excess: q must be >= 0");
  if (!(u > 0.0 && u < 1.0)) throw std::domain_error("sample_excess: u must lie in (0, 1)");
  const double base = std::pow(q / p.eps_bar, p.eta);
  const double eps = p.eps_bar * std::pow(base - std::log(u), 1.0 / p.eta);
  return std::max(eps, q);
}

/// CDF of the conditional law sampled by sample_excess.
inline double excess_cdf(const WeibullParams& p, double q, double eps) {
  p.validate();
  if (eps <= q) return 0.0;
  const double base = std::pow(q / p.eps_bar, p.eta);
  return -std::expm1(base - std::pow(eps / p.eps_bar, p.eta));
}

}  // namespace ctrw

#endif  // CTRW_EXTREME_MODEL_HPP
