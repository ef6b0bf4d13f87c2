#ifndef CTRW_ESTIMATION_HPP
#define CTRW_ESTIMATION_HPP

// Parameter estimation:
//   fit_rq_curve       (eta, eps_bar, calib) from (Q, R_Q) points
//   fit_psi            (alpha, tau_q) from an interevent histogram
//   fit_superscaling   (B, zeta) from (R_Q, alpha) pairs
//   fit_piecewise_tau  two straight lines tau_q = a_s R_Q + b_s
//   derive_elementary  (B_Q, tau0) from (alpha, tau_q, R_Q) and the Weibull scale
//
// Nonlinear fits start from a linearized or grid seed, run a Nelder-Mead
// simplex, and finish with a monotone Levenberg-Marquardt polish. Standard
// errors come from the Gauss-Newton curvature at the optimum.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ctrw/detail/optimize.hpp"
#include "ctrw/events.hpp"
#include "ctrw/extreme_model.hpp"
#include "ctrw/superstat.hpp"

namespace ctrw {

template <class Params>
struct FitReport {
  Params params{};
  std::vector<std::string> names;
  std::vector<double> values;
  std::vector<double> stderrs;
  std::vector<std::vector<double>> covariance;
  /// Final (weighted) sum of squared residuals in the fit space.
  double objective = 0.0;
  std::size_t n_points = 0;
  bool converged = false;
  bool under_determined = false;
  bool degenerate = false;
  bool alpha_clamped = false;
  std::vector<std::string> notes;
  /// Best objective after each refinement iteration, in order.
  std::vector<double> objective_history;
};

namespace detail {

template <class P>
void set_values(FitReport<P>& rep, std::vector<std::string> names, std::vector<double> values,
                std::vector<double> stderrs, const Eigen::MatrixXd& cov) {
  rep.names = std::move(names);
  rep.values = std::move(values);
  rep.stderrs = std::move(stderrs);
  rep.covariance.assign(static_cast<std::size_t>(cov.rows()),
                        std::vector<double>(static_cast<std::size_t>(cov.cols()), 0.0));
  for (Eigen::Index i = 0; i < cov.rows(); ++i) {
    for (Eigen::Index j = 0; j < cov.cols(); ++j) {
      rep.covariance[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = cov(i, j);
    }
  }
}

/// Delta-method covariance for parameters p_i = exp(theta_i) (log_mask[i]) or
/// p_i = theta_i.
inline Eigen::MatrixXd transform_covariance(const Eigen::MatrixXd& cov_theta,
                                            const std::vector<double>& values,
                                            const std::vector<bool>& log_mask) {
  Eigen::MatrixXd jac = Eigen::MatrixXd::Identity(cov_theta.rows(), cov_theta.cols());
  for (Eigen::Index i = 0; i < jac.rows(); ++i) {
    if (log_mask[static_cast<std::size_t>(i)]) jac(i, i) = values[static_cast<std::size_t>(i)];
  }
  return jac * cov_theta * jac.transpose();
}

inline std::vector<double> diag_sqrt(const Eigen::MatrixXd& cov) {
  std::vector<double> out(static_cast<std::size_t>(cov.rows()));
  for (Eigen::Index i = 0; i < cov.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = std::sqrt(std::max(0.0, cov(i, i)));
  }
  return out;
}

inline void append_history(std::vector<double>& dst, const std::vector<double>& src) {
  for (double v : src) {
    if (dst.empty() || v <= dst.back()) {
      dst.push_back(v);
    } else {
      dst.push_back(dst.back());
    }
  }
}

/// NM then LM on the residual function, keeping whichever is better.
inline LeastSquaresResult refine(const ResidualFn& residuals, const Vector& seed,
                                 std::vector<double>& history, double nm_step = 0.1) {
  auto objective = [&](const Vector& x) {
    const double v = sum_squares(residuals(x));
    return std::isfinite(v) ? v : std::numeric_limits<double>::max();
  };
  NelderMeadOptions nm_opts;
  nm_opts.step = nm_step;
  Minimum nm = nelder_mead(objective, seed, nm_opts);
  // A restart from the simplex optimum shakes loose premature collapse.
  Minimum again = nelder_mead(objective, nm.x, nm_opts);
  history = nm.history;
  for (double v : again.history) history.push_back(std::min(v, history.back()));
  const Vector& start = again.value <= nm.value ? again.x : nm.x;
  LeastSquaresResult lm = levenberg_marquardt(residuals, start);
  for (double v : lm.minimum.history) history.push_back(std::min(v, history.back()));
  lm.minimum.converged = lm.minimum.converged && (nm.converged || again.converged);
  return lm;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// R_Q curve

struct RqFitOptions {
  /// Fit the multiplicative calibration constant; otherwise hold it at `calib`.
  bool fit_calib = true;
  double calib = 1.0;
};

/// Least squares in ln R_Q space for ln R_Q = ln calib + (Q/eps_bar)^eta,
/// seeded by the straight line ln ln(R_Q/calib) = eta ln Q - eta ln eps_bar.
/// Two points are interpolated exactly with calib held fixed.
inline FitReport<WeibullParams> fit_rq_curve(std::span<const ThresholdPoint> points,
                                             std::span<const double> weights = {},
                                             const RqFitOptions& opts = {}) {
  if (points.size() < 2) throw std::invalid_argument("fit_rq_curve: need at least two points");
  if (!weights.empty() && weights.size() != points.size()) {
    throw std::invalid_argument("fit_rq_curve: weights size mismatch");
  }
  for (const auto& p : points) {
    if (!(p.q > 0.0) || !(p.r_q > 1.0) || !std::isfinite(p.r_q)) {
      throw std::domain_error("fit_rq_curve: need q > 0 and R_Q > 1 at every point");
    }
  }
  FitReport<WeibullParams> rep;
  rep.n_points = points.size();
  auto weight = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };

  // Linearized seed with calib held at opts.calib.
  std::vector<double> lx;
  std::vector<double> ly;
  std::vector<double> lw;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double excess = std::log(points[i].r_q / opts.calib);
    if (excess <= 0.0) continue;
    lx.push_back(std::log(points[i].q));
    ly.push_back(std::log(excess));
    lw.push_back(weight(i));
  }
  if (lx.size() < 2) {
    throw std::invalid_argument("fit_rq_curve: fewer than two points with R_Q above calib");
  }
  const auto line = detail::fit_line(lx, ly, lw);
  if (line.degenerate || !(line.slope > 0.0)) {
    rep.degenerate = true;
    rep.converged = false;
    rep.params = {1.0, 1.0, opts.calib};
    rep.notes.push_back(line.degenerate ? "degenerate input: all thresholds coincide"
                                        : "linearized slope is not positive");
    detail::set_values(rep, {"eta", "eps_bar", "calib"}, {1.0, 1.0, opts.calib}, {0.0, 0.0, 0.0},
                       Eigen::MatrixXd::Zero(3, 3));
    return rep;
  }
  const double eta0 = line.slope;
  const double eps0 = std::exp(-line.intercept / eta0);

  const bool fit_calib = opts.fit_calib && points.size() >= 3;
  if (points.size() == 2) {
    rep.under_determined = true;
    rep.notes.push_back("two points: exact interpolation with calib held fixed");
  }

  auto residuals = [&](const detail::Vector& th) {
    const double eta = std::exp(th[0]);
    const double eps_bar = std::exp(th[1]);
    const double log_c = fit_calib ? th[2] : std::log(opts.calib);
    detail::Vector r(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double model = log_c + std::pow(points[i].q / eps_bar, eta);
      r[i] = std::sqrt(weight(i)) * (std::log(points[i].r_q) - model);
    }
    return r;
  };
  detail::Vector seed = {std::log(eta0), std::log(eps0)};
  if (fit_calib) seed.push_back(std::log(opts.calib));
  auto lm = detail::refine(residuals, seed, rep.objective_history);
  const auto& th = lm.minimum.x;

  WeibullParams p;
  p.eta = std::exp(th[0]);
  p.eps_bar = std::exp(th[1]);
  p.calib = fit_calib ? std::exp(th[2]) : opts.calib;
  rep.params = p;
  rep.objective = lm.minimum.value;
  rep.converged = lm.minimum.converged;

  Eigen::MatrixXd cov_theta = detail::covariance_from_jacobian(lm.jacobian, rep.objective);
  std::vector<double> vals = {p.eta, p.eps_bar};
  std::vector<bool> mask = {true, true};
  if (fit_calib) {
    vals.push_back(p.calib);
    mask.push_back(true);
  }
  Eigen::MatrixXd cov = detail::transform_covariance(cov_theta, vals, mask);
  if (!fit_calib) {
    Eigen::MatrixXd full = Eigen::MatrixXd::Zero(3, 3);
    full.topLeftCorner(2, 2) = cov;
    cov = full;
    vals.push_back(p.calib);
  }
  detail::set_values(rep, {"eta", "eps_bar", "calib"}, vals, detail::diag_sqrt(cov), cov);
  if (!p.in_heavy_regime()) rep.notes.push_back("eta >= 1: outside the heavy-tailed regime");
  return rep;
}

// ---------------------------------------------------------------------------
// Interevent density

struct PsiFitOptions {
  double alpha_cap = 1000.0;
  ClusteringForm form = ClusteringForm::superposition;
};

namespace detail {

inline double model_survival(const SuperstatParams& sp, double dt) {
  return sp.direction == Direction::expanding ? psi_survival(sp, dt)
                                              : psi_clustering_survival(sp, dt);
}

}  // namespace detail

/// Weighted least squares of ln(histogram density) against ln(model density)
/// over non-empty bins, weights = bin counts. The model density of a bin is
/// its exact probability mass (from the closed-form survival function) over
/// the bin width, renormalized to the histogram's covered range. Fitted alpha
/// at or beyond the exponential regime is reported as `alpha_cap`.
inline FitReport<SuperstatParams> fit_psi(const Histogram& h,
                                          Direction direction = Direction::expanding,
                                          const PsiFitOptions& opts = {}) {
  if (direction == Direction::clustering && opts.form == ClusteringForm::printed) {
    throw std::invalid_argument("fit_psi: the printed clustering form has no normalized law");
  }
  if (!(opts.alpha_cap > 0.0)) throw std::domain_error("fit_psi: alpha_cap must be > 0");
  std::vector<std::size_t> bins;
  for (std::size_t i = 0; i < h.n_bins(); ++i) {
    if (h.counts[i] > 0 && h.densities[i] > 0.0) bins.push_back(i);
  }
  if (bins.size() < 4) {
    throw std::invalid_argument("fit_psi: need at least 4 non-empty bins, got " +
                                std::to_string(bins.size()));
  }
  if (!(h.edges.front() >= 0.0)) throw std::domain_error("fit_psi: negative interevent times");

  FitReport<SuperstatParams> rep;
  rep.n_points = bins.size();
  const double lo = h.edges.front();
  const double hi = h.edges.back();
  const double log_cap = std::log(opts.alpha_cap);

  auto make = [&](double alpha, double tau) {
    SuperstatParams sp;
    sp.alpha = alpha;
    sp.tau_q = tau;
    sp.direction = direction;
    return sp;
  };
  auto residuals = [&](const detail::Vector& th) {
    const double alpha = std::exp(std::min(th[0], log_cap));
    const double tau = std::exp(th[1]);
    detail::Vector r(bins.size());
    const auto sp = make(alpha, tau);
    double mass = 0.0;
    try {
      mass = detail::model_survival(sp, lo) - detail::model_survival(sp, hi);
    } catch (const std::exception&) {
      mass = 0.0;
    }
    for (std::size_t k = 0; k < bins.size(); ++k) {
      const std::size_t i = bins[k];
      double model = 0.0;
      try {
        model = (detail::model_survival(sp, h.edges[i]) - detail::model_survival(sp, h.edges[i + 1])) /
                (mass * h.width(i));
      } catch (const std::exception&) {
        model = 0.0;
      }
      const double w = std::sqrt(static_cast<double>(h.counts[i]));
      r[k] = model > 0.0 && std::isfinite(model)
                 ? w * (std::log(h.densities[i]) - std::log(model))
                 : w * 50.0;
    }
    return r;
  };

  // Coarse grid seed over alpha and tau around the sample scale.
  double mean = 0.0;
  for (std::size_t i = 0; i < h.n_bins(); ++i) mean += h.centre(i) * h.densities[i] * h.width(i);
  mean = std::max(mean, 1e-12);
  detail::Vector best = {0.0, std::log(mean)};
  double best_value = std::numeric_limits<double>::infinity();
  for (double alpha : {0.2, 0.35, 0.5, 0.7, 1.0, 1.5, 2.0, 3.0, 5.0, 10.0, 30.0, 100.0, 1000.0}) {
    if (alpha > opts.alpha_cap) continue;
    for (double f : {0.02, 0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0, 1.5, 2.0}) {
      const detail::Vector th = {std::log(alpha), std::log(mean * f)};
      const double v = detail::sum_squares(residuals(th));
      if (v < best_value) {
        best_value = v;
        best = th;
      }
    }
  }
  auto lm = detail::refine(residuals, best, rep.objective_history, 0.2);
  double alpha = std::exp(std::min(lm.minimum.x[0], log_cap));
  double tau = std::exp(lm.minimum.x[1]);
  rep.objective = lm.minimum.value;
  rep.converged = lm.minimum.converged;

  Eigen::MatrixXd cov_theta = detail::covariance_from_jacobian(lm.jacobian, rep.objective);
  // Past half the exponential regime the shape is not identifiable from binned data.
  if (alpha >= std::min(0.5 * kExponentialAlpha, opts.alpha_cap)) {
    alpha = opts.alpha_cap;
    rep.alpha_clamped = true;
    rep.notes.push_back("alpha clamped at cap: density indistinguishable from an exponential");
    auto tau_only = [&](const detail::Vector& th) { return residuals({log_cap, th[0]}); };
    const auto refit = detail::levenberg_marquardt(tau_only, {lm.minimum.x[1]});
    tau = std::exp(refit.minimum.x[0]);
    rep.objective = refit.minimum.value;
    const Eigen::MatrixXd cov_tau = detail::covariance_from_jacobian(refit.jacobian, rep.objective);
    cov_theta = Eigen::MatrixXd::Zero(2, 2);
    cov_theta(1, 1) = cov_tau(0, 0);
  }
  rep.params = make(alpha, tau);
  Eigen::MatrixXd cov = detail::transform_covariance(cov_theta, {alpha, tau}, {true, true});
  detail::set_values(rep, {"alpha", "tau_q"}, {alpha, tau}, detail::diag_sqrt(cov), cov);
  return rep;
}

// ---------------------------------------------------------------------------
// Superscaling

struct ScalingPoint {
  double r_q = 0.0;
  double alpha = 0.0;
};

enum class SuperscalingObjective {
  /// Nonlinear least squares of 1/alpha against B ln^zeta R_Q.
  inverse_alpha,
  /// Straight line ln(1/alpha) = ln B + zeta ln ln R_Q.
  log_log,
};

struct SuperscalingOptions {
  SuperscalingObjective objective = SuperscalingObjective::inverse_alpha;
  /// Points with alpha at or above this are cap sentinels and are dropped.
  double sentinel_alpha = kExponentialAlpha;
};

inline FitReport<ScalingLaw> fit_superscaling(std::span<const ScalingPoint> points,
                                              const SuperscalingOptions& opts = {}) {
  std::vector<ScalingPoint> used;
  std::size_t dropped = 0;
  for (const auto& p : points) {
    if (!(p.r_q > 1.0)) throw std::domain_error("fit_superscaling: R_Q must be > 1");
    if (!(p.alpha > 0.0)) throw std::domain_error("fit_superscaling: alpha must be > 0");
    if (p.alpha >= opts.sentinel_alpha) {
      ++dropped;
      continue;
    }
    used.push_back(p);
  }
  if (used.size() < 3) {
    throw std::invalid_argument("fit_superscaling: need at least 3 non-sentinel points, got " +
                                std::to_string(used.size()));
  }
  // Order-independent sums.
  std::sort(used.begin(), used.end(), [](const ScalingPoint& a, const ScalingPoint& b) {
    return a.r_q != b.r_q ? a.r_q < b.r_q : a.alpha < b.alpha;
  });
  FitReport<ScalingLaw> rep;
  rep.n_points = used.size();
  if (dropped > 0) {
    rep.notes.push_back("dropped " + std::to_string(dropped) + " sentinel alpha point(s)");
  }
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& p : used) {
    x.push_back(std::log(std::log(p.r_q)));
    y.push_back(-std::log(p.alpha));
  }
  const auto line = detail::fit_line(x, y);
  if (line.degenerate) {
    throw std::invalid_argument("fit_superscaling: all R_Q values coincide");
  }
  if (opts.objective == SuperscalingObjective::log_log) {
    ScalingLaw law{std::exp(line.intercept), line.slope};
    rep.params = law;
    rep.objective = line.ssr;
    rep.converged = true;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(2, 2);
    cov(0, 0) = std::pow(law.b * line.intercept_stderr, 2);
    cov(1, 1) = line.slope_stderr * line.slope_stderr;
    detail::set_values(rep, {"b", "zeta"}, {law.b, law.zeta}, detail::diag_sqrt(cov), cov);
    if (!(law.zeta > 0.0)) rep.notes.push_back("fitted zeta is not positive");
    return rep;
  }
  auto residuals = [&](const detail::Vector& th) {
    const double b = std::exp(th[0]);
    detail::Vector r(used.size());
    for (std::size_t i = 0; i < used.size(); ++i) {
      r[i] = 1.0 / used[i].alpha - b * std::pow(std::log(used[i].r_q), th[1]);
    }
    return r;
  };
  auto lm = detail::refine(residuals, {line.intercept, line.slope}, rep.objective_history);
  ScalingLaw law{std::exp(lm.minimum.x[0]), lm.minimum.x[1]};
  rep.params = law;
  rep.objective = lm.minimum.value;
  rep.converged = lm.minimum.converged;
  Eigen::MatrixXd cov_theta = detail::covariance_from_jacobian(lm.jacobian, rep.objective);
  Eigen::MatrixXd cov = detail::transform_covariance(cov_theta, {law.b, law.zeta}, {true, false});
  detail::set_values(rep, {"b", "zeta"}, {law.b, law.zeta}, detail::diag_sqrt(cov), cov);
  if (!(law.zeta > 0.0)) rep.notes.push_back("fitted zeta is not positive");
  return rep;
}

// ---------------------------------------------------------------------------
// Two-line calibration of tau_q against R_Q

struct PiecewiseLinear {
  double a_l = 0.0;
  double b_l = 0.0;
  double a_r = 0.0;
  double b_r = 0.0;
  /// R_Q where the lines cross (or the shared pivot point when they do not
  /// cross next to it).
  double breakpoint = 0.0;

  double operator()(double r_q) const {
    return r_q <= breakpoint ? a_l * r_q + b_l : a_r * r_q + b_r;
  }
  /// Left line extrapolated to R_Q = 1, i.e. Q = 0.
  double tau_at_zero_threshold() const { return a_l + b_l; }
};

struct TauPoint {
  double r_q = 0.0;
  double tau_q = 0.0;
};

/// Scans every interior pivot k of the R_Q-sorted points; the left line is
/// fit to points [0..k], the right one to [k..n-1] (the pivot belongs to both)
/// and the split with the smallest total residual wins.
inline FitReport<PiecewiseLinear> fit_piecewise_tau(std::span<const TauPoint> points) {
  if (points.size() < 4) {
    throw std::invalid_argument("fit_piecewise_tau: need at least 4 points, got " +
                                std::to_string(points.size()));
  }
  std::vector<TauPoint> sorted(points.begin(), points.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const TauPoint& a, const TauPoint& b) { return a.r_q < b.r_q; });
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& p : sorted) {
    if (!std::isfinite(p.r_q) || !std::isfinite(p.tau_q)) {
      throw std::domain_error("fit_piecewise_tau: non-finite point");
    }
    x.push_back(p.r_q);
    y.push_back(p.tau_q);
  }
  const std::size_t n = sorted.size();
  std::optional<std::size_t> best_k;
  detail::LineFit best_left;
  detail::LineFit best_right;
  double best_ssr = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const std::span<const double> xs(x);
    const std::span<const double> ys(y);
    const auto left = detail::fit_line(xs.subspan(0, k + 1), ys.subspan(0, k + 1));
    const auto right = detail::fit_line(xs.subspan(k), ys.subspan(k));
    if (left.degenerate || right.degenerate) continue;
    const double ssr = left.ssr + right.ssr;
    if (ssr < best_ssr) {
      best_ssr = ssr;
      best_k = k;
      best_left = left;
      best_right = right;
    }
  }
  if (!best_k) throw std::invalid_argument("fit_piecewise_tau: no admissible split");

  const std::size_t k = *best_k;
  PiecewiseLinear pl{best_left.slope, best_left.intercept, best_right.slope, best_right.intercept,
                     x[k]};
  FitReport<PiecewiseLinear> rep;
  const double slope_gap = pl.a_l - pl.a_r;
  if (std::abs(slope_gap) > 1e-12 * std::max(std::abs(pl.a_l), std::abs(pl.a_r))) {
    const double cross = (pl.b_r - pl.b_l) / slope_gap;
    if (cross >= x[k - 1] && cross <= x[k + 1]) pl.breakpoint = cross;
  }
  const double scale = std::max(1.0, std::abs(pl.b_l) + std::abs(pl.a_l));
  if (std::abs(pl.a_l - pl.a_r) <= 1e-9 * scale && std::abs(pl.b_l - pl.b_r) <= 1e-9 * scale) {
    rep.degenerate = true;
    rep.notes.push_back("collinear points: one line on both sides, breakpoint arbitrary");
  }
  if (k + 1 == n - 1 || k == 1) {
    rep.notes.push_back("one side has only two points: its line interpolates exactly");
  }
  rep.params = pl;
  rep.objective = best_ssr;
  rep.n_points = n;
  rep.converged = true;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(5, 5);
  cov(0, 0) = best_left.slope_stderr * best_left.slope_stderr;
  cov(1, 1) = best_left.intercept_stderr * best_left.intercept_stderr;
  cov(2, 2) = best_right.slope_stderr * best_right.slope_stderr;
  cov(3, 3) = best_right.intercept_stderr * best_right.intercept_stderr;
  detail::set_values(rep, {"a_l", "b_l", "a_r", "b_r", "breakpoint"},
                     {pl.a_l, pl.b_l, pl.a_r, pl.b_r, pl.breakpoint}, detail::diag_sqrt(cov), cov);
  rep.names.push_back("tau0_at_zero");
  rep.values.push_back(pl.tau_at_zero_threshold());
  rep.stderrs.push_back(0.0);
  return rep;
}

// ---------------------------------------------------------------------------
// Elementary quantities

struct ElementaryQuantities {
  double b_q = 0.0;
  double tau0 = 0.0;
  double log_tau0 = 0.0;
  /// tau0 underflowed double precision; log_tau0 still holds the value.
  bool tau0_underflow = false;
};

/// B_Q from alpha and the Weibull scale, tau_Q(0) from tau_q and R_Q.
inline ElementaryQuantities derive_elementary(const SuperstatParams& sp, double r_q,
                                              const WeibullParams& p) {
  sp.validate();
  p.validate();
  ElementaryQuantities out;
  out.b_q = bq_from_alpha(sp.alpha, p.eps_bar, p.eta);
  out.log_tau0 = log_tau0_from_tauq(sp.tau_q, r_q, sp.alpha);
  out.tau0 = std::exp(out.log_tau0);
  out.tau0_underflow = out.tau0 == 0.0 || out.tau0 < std::numeric_limits<double>::min();
  return out;
}

}  // namespace ctrw

#endif  // CTRW_ESTIMATION_HPP
