#ifndef CTRW_SUPERPOSITION_HPP
#define CTRW_SUPERPOSITION_HPP

// Numerical route to the interevent density: integrate the conditional
// exponential law against the Weibull density over eps >= Q directly, with no
// change of variables that would reproduce the closed form. Used by the
// consistency checks to validate psi() and psi_clustering().

#include <algorithm>
#include <cmath>
#include <vector>

#include "ctrw/extreme_model.hpp"
#include "ctrw/quadrature.hpp"
#include "ctrw/superstat.hpp"

namespace ctrw {

/// R_Q * int_Q^inf (1/tau(eps)) exp(-dt/tau(eps)) D(eps) d(eps), with
/// R_Q = 1 / P(eps >= Q) (calibration ignored). The integral runs over eps
/// panels whose edges are equally spaced in (eps/eps_bar)^eta, which keeps the
/// stretched-exponential factor resolved.
inline QuadratureResult psi_by_superposition(const RelaxationSpec& r, const WeibullParams& w,
                                             double q, double dt,
                                             const QuadratureOptions& opts = {1e-12, 0.0, 4000}) {
  r.validate();
  w.validate();
  if (!(q >= 0.0) || !(dt > 0.0)) {
    throw std::domain_error("psi_by_superposition: need q >= 0 and dt > 0");
  }
  const double u_q = std::pow(q / w.eps_bar, w.eta);
  // (B_Q eps)^eta = u / alpha with u = (eps/eps_bar)^eta.
  const double alpha = alpha_from_bq(r.b_q, w.eps_bar, r.eta);
  // Conditional mass concentrates where dt / tau(eps) ~ alpha; extend the
  // panels well past that point in u.
  const double shift = alpha * std::abs(std::log(dt / r.tau0)) + alpha * 50.0;
  const double u_end = u_q + std::max(80.0, shift + 80.0);
  const int n_panels = static_cast<int>(std::ceil(u_end - u_q));
  std::vector<double> breaks;
  breaks.reserve(n_panels + 1);
  for (int k = 0; k <= n_panels; ++k) {
    const double u = std::min(u_q + k, u_end);
    breaks.push_back(w.eps_bar * std::pow(u, 1.0 / w.eta));
  }
  breaks.front() = q;

  auto integrand = [&](double eps) {
    const double log_tau = log_relaxation_time(r, eps);
    const double rate = std::exp(-log_tau);
    return rate * std::exp(-dt * rate) * weibull_pdf(w, eps);
  };
  auto out = integrate_panels(integrand, breaks, opts);
  out.value *= std::exp(u_q);
  out.error *= std::exp(u_q);
  return out;
}

}  // namespace ctrw

#endif  // CTRW_SUPERPOSITION_HPP
