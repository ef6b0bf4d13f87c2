#ifndef CTRW_DETAIL_OPTIMIZE_HPP
#define CTRW_DETAIL_OPTIMIZE_HPP

// Small dense optimizers for two- and three-parameter fits: Nelder-Mead,
// a Levenberg-Marquardt polish with finite-difference Jacobian, and weighted
// ordinary least squares for straight lines. Every minimizer here keeps the
// best objective value non-increasing across iterations and records it.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace ctrw::detail {

using Vector = std::vector<double>;

struct Minimum {
  Vector x;
  double value = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  /// Best objective after each iteration.
  std::vector<double> history;
};

struct NelderMeadOptions {
  int max_iterations = 4000;
  double f_tol = 1e-15;
  double x_tol = 1e-12;
  /// Initial simplex offset per coordinate (absolute).
  double step = 0.1;
};

template <class F>
Minimum nelder_mead(F&& f, Vector x0, const NelderMeadOptions& opts = {}) {
  const std::size_t n = x0.size();
  std::vector<Vector> simplex(n + 1, x0);
  Vector values(n + 1);
  for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += opts.step;
  for (std::size_t i = 0; i <= n; ++i) values[i] = f(simplex[i]);

  Minimum out;
  std::vector<std::size_t> order(n + 1);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<Vector> s(n + 1);
    Vector v(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      s[i] = simplex[order[i]];
      v[i] = values[order[i]];
    }
    simplex.swap(s);
    values.swap(v);
  };
  auto affine = [&](const Vector& centroid, const Vector& p, double t) {
    Vector r(n);
    for (std::size_t j = 0; j < n; ++j) r[j] = centroid[j] + t * (p[j] - centroid[j]);
    return r;
  };

  sort_simplex();
  for (out.iterations = 0; out.iterations < opts.max_iterations; ++out.iterations) {
    out.history.push_back(values[0]);
    double size = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        size = std::max(size, std::abs(simplex[i][j] - simplex[0][j]));
      }
    }
    const double spread = std::abs(values[n] - values[0]);
    if (size < opts.x_tol ||
        (spread <= opts.f_tol * (std::abs(values[0]) + opts.f_tol) && size < 1e3 * opts.x_tol)) {
      out.converged = true;
      break;
    }
    Vector centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j] / static_cast<double>(n);
    }
    const Vector reflected = affine(centroid, simplex[n], -1.0);
    const double fr = f(reflected);
    if (fr < values[0]) {
      const Vector expanded = affine(centroid, simplex[n], -2.0);
      const double fe = f(expanded);
      if (fe < fr) {
        simplex[n] = expanded;
        values[n] = fe;
      } else {
        simplex[n] = reflected;
        values[n] = fr;
      }
    } else if (fr < values[n - 1]) {
      simplex[n] = reflected;
      values[n] = fr;
    } else {
      const bool outside = fr < values[n];
      const Vector contracted = affine(centroid, outside ? reflected : simplex[n], 0.5);
      const double fc = f(contracted);
      if (fc < std::min(fr, values[n])) {
        simplex[n] = contracted;
        values[n] = fc;
      } else {
        for (std::size_t i = 1; i <= n; ++i) {
          simplex[i] = affine(simplex[0], simplex[i], 0.5);
          values[i] = f(simplex[i]);
        }
      }
    }
    sort_simplex();
  }
  out.x = simplex[0];
  out.value = values[0];
  out.history.push_back(values[0]);
  return out;
}

/// Residual vector function: theta -> r(theta). Objective is sum r_i^2.
using ResidualFn = std::function<Vector(const Vector&)>;

inline double sum_squares(const Vector& r) {
  double s = 0.0;
  for (double v : r) s += v * v;
  return s;
}

inline Eigen::MatrixXd numeric_jacobian(const ResidualFn& fn, const Vector& x, const Vector& r0) {
  const std::size_t m = r0.size();
  const std::size_t n = x.size();
  Eigen::MatrixXd jac(m, n);
  for (std::size_t j = 0; j < n; ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[j]));
    Vector xp = x;
    Vector xm = x;
    xp[j] += h;
    xm[j] -= h;
    const Vector rp = fn(xp);
    const Vector rm = fn(xm);
    for (std::size_t i = 0; i < m; ++i) jac(i, j) = (rp[i] - rm[i]) / (2.0 * h);
  }
  return jac;
}

struct LeastSquaresResult {
  Minimum minimum;
  Eigen::MatrixXd jacobian;
};

/// Levenberg-Marquardt with steps accepted only when they lower the
/// objective.
inline LeastSquaresResult levenberg_marquardt(const ResidualFn& fn, Vector x0,
                                              int max_iterations = 200) {
  LeastSquaresResult out;
  Vector x = std::move(x0);
  Vector r = fn(x);
  double cost = sum_squares(r);
  double lambda = 1e-3;
  Minimum& m = out.minimum;
  m.history.push_back(cost);
  for (m.iterations = 0; m.iterations < max_iterations; ++m.iterations) {
    const Eigen::MatrixXd jac = numeric_jacobian(fn, x, r);
    const Eigen::Map<const Eigen::VectorXd> rv(r.data(), static_cast<Eigen::Index>(r.size()));
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd grad = jac.transpose() * rv;
    bool improved = false;
    for (int attempt = 0; attempt < 30; ++attempt) {
      Eigen::MatrixXd damped = jtj;
      for (Eigen::Index i = 0; i < damped.rows(); ++i) {
        damped(i, i) += lambda * std::max(jtj(i, i), 1e-12);
      }
      const Eigen::VectorXd step = damped.ldlt().solve(-grad);
      if (!step.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      Vector trial = x;
      for (std::size_t j = 0; j < x.size(); ++j) trial[j] += step(static_cast<Eigen::Index>(j));
      const Vector rt = fn(trial);
      const double ct = sum_squares(rt);
      if (std::isfinite(ct) && ct < cost) {
        const double gain = cost - ct;
        x = std::move(trial);
        r = rt;
        cost = ct;
        lambda = std::max(lambda / 10.0, 1e-12);
        improved = true;
        if (gain <= 1e-15 * cost + 1e-300) m.converged = true;
        break;
      }
      lambda *= 10.0;
    }
    m.history.push_back(cost);
    if (!improved) {
      m.converged = true;
      break;
    }
    if (m.converged) break;
  }
  m.x = x;
  m.value = cost;
  out.jacobian = numeric_jacobian(fn, x, r);
  return out;
}

/// Covariance s^2 (J^T J)^-1 with s^2 = SSR / (n - p); zero when n <= p.
inline Eigen::MatrixXd covariance_from_jacobian(const Eigen::MatrixXd& jac, double ssr) {
  const auto n = jac.rows();
  const auto p = jac.cols();
  if (n <= p) return Eigen::MatrixXd::Zero(p, p);
  const double s2 = ssr / static_cast<double>(n - p);
  const Eigen::MatrixXd jtj = jac.transpose() * jac;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(jtj);
  return s2 * cod.pseudoInverse();
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double ssr = 0.0;
  double slope_stderr = 0.0;
  double intercept_stderr = 0.0;
  bool degenerate = false;  // all x equal
};

/// Weighted OLS y = slope * x + intercept. Empty weights mean unit weights.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y,
                        std::span<const double> w = {}) {
  if (x.size() != y.size() || (!w.empty() && w.size() != x.size())) {
    throw std::invalid_argument("fit_line: size mismatch");
  }
  if (x.size() < 2) throw std::invalid_argument("fit_line: need at least two points");
  auto weight = [&](std::size_t i) { return w.empty() ? 1.0 : w[i]; };
  double sw = 0.0;
  double sx = 0.0;
  double sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sw += weight(i);
    sx += weight(i) * x[i];
    sy += weight(i) * y[i];
  }
  const double mx = sx / sw;
  const double my = sy / sw;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += weight(i) * (x[i] - mx) * (x[i] - mx);
    sxy += weight(i) * (x[i] - mx) * (y[i] - my);
  }
  LineFit out;
  if (sxx <= 1e-300) {
    out.degenerate = true;
    out.intercept = my;
    return out;
  }
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - out.slope * x[i] - out.intercept;
    out.ssr += weight(i) * e * e;
  }
  if (x.size() > 2) {
    const double s2 = out.ssr / static_cast<double>(x.size() - 2);
    out.slope_stderr = std::sqrt(s2 / sxx);
    out.intercept_stderr = std::sqrt(s2 * (1.0 / sw + mx * mx / sxx));
  }
  return out;
}

}  // namespace ctrw::detail

#endif  // CTRW_DETAIL_OPTIMIZE_HPP
