#ifndef CTRW_QUADRATURE_HPP
#define CTRW_QUADRATURE_HPP

// Globally adaptive Gauss-Kronrod (7/15) integration on finite intervals,
// plus a panel helper for integrands that span many decades.

#include <array>
#include <cmath>
#include <cstddef>
#include <queue>
#include <span>
#include <stdexcept>
#include <vector>

namespace ctrw {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t evaluations = 0;
  bool converged = true;
};

struct QuadratureOptions {
  double rel_tol = 1e-9;
  double abs_tol = 0.0;
  std::size_t max_intervals = 2000;
};

namespace detail {

inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double lo;
  double hi;
  double value;
  double error;
  bool operator<(const Segment& other) const { return error < other.error; }
};

template <class F>
Segment kronrod15(F& f, double lo, double hi) {
  const double centre = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  const double fc = f(centre);
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  for (std::size_t i = 0; i < 7; ++i) {
    const double dx = half * kKronrodNodes[i];
    const double pair = f(centre - dx) + f(centre + dx);
    kronrod += kKronrodWeights[i] * pair;
    if (i % 2 == 1) gauss += kGaussWeights[i / 2] * pair;
  }
  kronrod *= half;
  gauss *= half;
  return {lo, hi, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace detail

/// Integrates f over [lo, hi] by bisecting the worst segment until the summed
/// error estimate meets max(abs_tol, rel_tol * |I|).
template <class F>
QuadratureResult integrate(F&& f, double lo, double hi, const QuadratureOptions& opts = {}) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    throw std::domain_error("integrate: bounds must be finite");
  }
  QuadratureResult out;
  if (lo == hi) return out;
  std::priority_queue<detail::Segment> heap;
  heap.push(detail::kronrod15(f, lo, hi));
  out.evaluations = 15;
  double total = heap.top().value;
  double error = heap.top().error;
  while (error > std::max(opts.abs_tol, opts.rel_tol * std::abs(total))) {
    if (heap.size() >= opts.max_intervals) {
      out.converged = false;
      break;
    }
    const detail::Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.lo + worst.hi);
    if (mid <= worst.lo || mid >= worst.hi) {
      heap.push(worst);
      out.converged = false;
      break;
    }
    const auto left = detail::kronrod15(f, worst.lo, mid);
    const auto right = detail::kronrod15(f, mid, worst.hi);
    out.evaluations += 30;
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum to shed accumulated rounding from the running updates.
  total = 0.0;
  error = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    error += heap.top().error;
    heap.pop();
  }
  out.value = total;
  out.error = error;
  return out;
}

/// Sums adaptive integrals over consecutive panels [b0,b1], [b1,b2], ...
/// Each panel gets the full relative tolerance.
template <class F>
QuadratureResult integrate_panels(F&& f, std::span<const double> breaks,
                                  const QuadratureOptions& opts = {}) {
  QuadratureResult out;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const auto part = integrate(f, breaks[i], breaks[i + 1], opts);
    out.value += part.value;
    out.error += part.error;
    out.evaluations += part.evaluations;
    out.converged = out.converged && part.converged;
  }
  return out;
}

/// Geometric break points lo, lo*r, ..., hi with roughly `per_decade` panels
/// per decade. Prepends 0 when `from_zero` is set.
inline std::vector<double> log_breaks(double lo, double hi, int per_decade, bool from_zero) {
  if (!(lo > 0.0) || !(hi > lo)) throw std::domain_error("log_breaks: need 0 < lo < hi");
  const int n = std::max(1, static_cast<int>(std::ceil(per_decade * std::log10(hi / lo))));
  std::vector<double> out;
  out.reserve(n + 2);
  if (from_zero) out.push_back(0.0);
  for (int i = 0; i <= n; ++i) {
    out.push_back(i == n ? hi : lo * std::pow(hi / lo, static_cast<double>(i) / n));
  }
  return out;
}

}  // namespace ctrw

#endif  // CTRW_QUADRATURE_HPP
