#ifndef CTRW_EVENTS_HPP
#define CTRW_EVENTS_HPP

// Event extraction from return series: ticks whose loss (or profit) magnitude
// reaches a threshold Q, the interevent times between them, the empirical
// mean interevent time R_Q, and interevent histograms.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ctrw/extreme_model.hpp"

namespace ctrw {

enum class Mode { loss, profit };

inline std::string_view to_string(Mode m) { return m == Mode::loss ? "loss" : "profit"; }

inline Mode mode_from_string(std::string_view s) {
  if (s == "loss") return Mode::loss;
  if (s == "profit") return Mode::profit;
  throw std::invalid_argument("unknown mode '" + std::string(s) + "'");
}

/// Whether a return exactly at the threshold counts as an event.
enum class ThresholdRule { closed, open };

struct ReturnSeries {
  std::vector<std::int64_t> timestamps;
  std::vector<double> returns;

  std::size_t size() const { return returns.size(); }

  void validate() const {
    if (timestamps.size() != returns.size()) {
      throw std::invalid_argument("ReturnSeries: timestamps and returns differ in length");
    }
    for (std::size_t i = 0; i < returns.size(); ++i) {
      if (!std::isfinite(returns[i])) {
        throw std::invalid_argument("ReturnSeries: non-finite return at index " +
                                    std::to_string(i));
      }
      if (i > 0 && timestamps[i] <= timestamps[i - 1]) {
        throw std::invalid_argument("ReturnSeries: timestamps not strictly increasing at index " +
                                    std::to_string(i));
      }
    }
  }

  /// Series with timestamps 0..n-1.
  static ReturnSeries from_returns(std::vector<double> r) {
    ReturnSeries s;
    s.timestamps.resize(r.size());
    std::iota(s.timestamps.begin(), s.timestamps.end(), std::int64_t{0});
    s.returns = std::move(r);
    return s;
  }
};

struct InterEventSample {
  Mode mode = Mode::loss;
  double q = 0.0;
  /// Tick of each event. Empty for simulated samples, which carry only deltas.
  std::vector<std::int64_t> event_times;
  /// Event magnitude (|return| for extracted events, eps for simulated draws).
  std::vector<double> magnitudes;
  std::vector<double> deltas;
  /// Arithmetic mean of deltas; nullopt when there are none.
  std::optional<double> r_q_empirical;
  /// Series length / number of events, the quantile reading of R_Q.
  std::optional<double> r_q_quantile;
  std::size_t n_events = 0;
  bool reliable = false;

  bool empty() const { return deltas.empty(); }
};

struct ExtractOptions {
  ThresholdRule rule = ThresholdRule::closed;
  /// Samples with fewer interevent times than this are flagged unreliable.
  std::size_t min_events = 10;
};

namespace detail {

inline void finish_sample(InterEventSample& s, std::size_t min_events) {
  s.n_events = std::max(s.event_times.size(), s.magnitudes.size());
  if (!s.deltas.empty()) {
    const double sum = std::accumulate(s.deltas.begin(), s.deltas.end(), 0.0);
    s.r_q_empirical = sum / static_cast<double>(s.deltas.size());
  } else {
    s.r_q_empirical.reset();
  }
  s.reliable = s.deltas.size() >= min_events && !s.deltas.empty();
}

}  // namespace detail

/// Loss mode selects ticks with -return >= q (magnitudes stored positive),
/// profit mode ticks with return >= q. Interevent times are tick differences.
inline InterEventSample extract_events(const ReturnSeries& s, Mode mode, double q,
                                       const ExtractOptions& opts = {}) {
  if (!(q > 0.0) || !std::isfinite(q)) throw std::domain_error("extract_events: q must be > 0");
  if (s.size() == 0) throw std::invalid_argument("extract_events: empty series");
  s.validate();
  InterEventSample out;
  out.mode = mode;
  out.q = q;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double magnitude = mode == Mode::loss ? -s.returns[i] : s.returns[i];
    const bool hit = opts.rule == ThresholdRule::closed ? magnitude >= q : magnitude > q;
    if (!hit) continue;
    if (!out.event_times.empty()) {
      out.deltas.push_back(static_cast<double>(s.timestamps[i] - out.event_times.back()));
    }
    out.event_times.push_back(s.timestamps[i]);
    out.magnitudes.push_back(magnitude);
  }
  detail::finish_sample(out, opts.min_events);
  if (!out.event_times.empty()) {
    const double span = static_cast<double>(s.timestamps.back() - s.timestamps.front() + 1);
    out.r_q_quantile = span / static_cast<double>(out.event_times.size());
  }
  return out;
}

struct DetrendResult {
  ReturnSeries detrended;
  /// Centered moving average that was subtracted; detrended + trend == input.
  std::vector<double> trend;
};

/// Subtracts a centered moving average of `window` ticks (window/2 ahead,
/// (window-1)/2 behind); windows are truncated at the series ends.
inline DetrendResult detrend(const ReturnSeries& s, std::size_t window) {
  s.validate();
  if (window < 2) throw std::domain_error("detrend: window must be >= 2");
  if (window > s.size()) throw std::domain_error("detrend: window exceeds series length");
  const std::size_t n = s.size();
  const std::size_t behind = (window - 1) / 2;
  const std::size_t ahead = window / 2;
  std::vector<long double> prefix(n + 1, 0.0L);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + s.returns[i];
  DetrendResult out;
  out.detrended.timestamps = s.timestamps;
  out.detrended.returns.resize(n);
  out.trend.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= behind ? i - behind : 0;
    const std::size_t hi = std::min(n - 1, i + ahead);
    const long double mean = (prefix[hi + 1] - prefix[lo]) / static_cast<long double>(hi - lo + 1);
    out.trend[i] = static_cast<double>(mean);
    out.detrended.returns[i] = static_cast<double>(s.returns[i] - mean);
  }
  return out;
}

/// ln(1 + r) for every return.
inline ReturnSeries to_log_returns(const ReturnSeries& s) {
  ReturnSeries out = s;
  for (double& r : out.returns) {
    if (!(r > -1.0)) throw std::domain_error("to_log_returns: return <= -1 has no log return");
    r = std::log1p(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Histograms

enum class Binning { linear, logarithmic };

inline std::string_view to_string(Binning b) {
  return b == Binning::linear ? "linear" : "logarithmic";
}

inline Binning binning_from_string(std::string_view s) {
  if (s == "linear" || s == "lin") return Binning::linear;
  if (s == "logarithmic" || s == "log") return Binning::logarithmic;
  throw std::invalid_argument("unknown binning '" + std::string(s) + "'");
}

struct Histogram {
  std::vector<double> edges;
  std::vector<std::uint64_t> counts;
  /// counts / (total * width): sum(densities * widths) == 1.
  std::vector<double> densities;
  Binning binning = Binning::linear;
  /// Set when all samples coincide and a single unit bin was used.
  bool degenerate = false;

  std::size_t n_bins() const { return counts.size(); }
  std::uint64_t total() const { return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}); }
  double width(std::size_t i) const { return edges[i + 1] - edges[i]; }
  double centre(std::size_t i) const {
    return binning == Binning::logarithmic ? std::sqrt(edges[i] * edges[i + 1])
                                           : 0.5 * (edges[i] + edges[i + 1]);
  }
};

/// Bins values between their min and max (max lands in the last bin).
/// Logarithmic binning uses geometric edges and needs positive values.
inline Histogram histogram(std::span<const double> values, Binning binning, std::size_t n_bins) {
  if (values.empty()) throw std::invalid_argument("histogram: empty sample");
  if (n_bins == 0) throw std::domain_error("histogram: n_bins must be >= 1");
  const auto [min_it, max_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *min_it;
  const double hi = *max_it;
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    throw std::invalid_argument("histogram: non-finite value");
  }
  if (binning == Binning::logarithmic && !(lo > 0.0)) {
    throw std::domain_error("histogram: logarithmic binning needs positive values");
  }
  Histogram h;
  h.binning = binning;
  if (lo == hi) {
    h.degenerate = true;
    const double half = lo != 0.0 ? 0.5 * std::abs(lo) : 0.5;
    h.edges = {lo - half, lo + half};
    h.counts = {values.size()};
    h.densities = {1.0 / (2.0 * half)};
    return h;
  }
  h.edges.resize(n_bins + 1);
  for (std::size_t i = 0; i <= n_bins; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(n_bins);
    h.edges[i] = binning == Binning::linear ? lo + (hi - lo) * f : lo * std::pow(hi / lo, f);
  }
  h.edges.front() = lo;
  h.edges.back() = hi;
  h.counts.assign(n_bins, 0);
  const double log_span = std::log(hi / std::max(lo, std::numeric_limits<double>::min()));
  for (double v : values) {
    double f = binning == Binning::linear ? (v - lo) / (hi - lo) : std::log(v / lo) / log_span;
    auto k = static_cast<std::size_t>(std::clamp(f * static_cast<double>(n_bins), 0.0,
                                                 static_cast<double>(n_bins - 1)));
    while (k > 0 && v < h.edges[k]) --k;
    while (k + 1 < n_bins && v >= h.edges[k + 1]) ++k;
    ++h.counts[k];
  }
  const double total = static_cast<double>(values.size());
  h.densities.resize(n_bins);
  for (std::size_t i = 0; i < n_bins; ++i) {
    h.densities[i] = static_cast<double>(h.counts[i]) / (total * h.width(i));
  }
  return h;
}

inline Histogram histogram(const InterEventSample& sample, Binning binning, std::size_t n_bins) {
  return histogram(std::span<const double>(sample.deltas), binning, n_bins);
}

// ---------------------------------------------------------------------------
// Empirical R_Q curve

struct RqCurvePoint {
  double q = 0.0;
  /// Mean interevent time; NaN when fewer than two events were found.
  double r_q = std::numeric_limits<double>::quiet_NaN();
  /// Series span / event count.
  double r_q_quantile = std::numeric_limits<double>::quiet_NaN();
  std::size_t n_events = 0;
  bool reliable = false;

  ThresholdPoint point() const { return {q, r_q}; }
};

/// One extraction per threshold. Thresholds must be positive and increasing.
inline std::vector<RqCurvePoint> rq_curve(const ReturnSeries& s, Mode mode,
                                          std::span<const double> q_grid,
                                          const ExtractOptions& opts = {}) {
  for (std::size_t i = 0; i < q_grid.size(); ++i) {
    if (!(q_grid[i] > 0.0) || (i > 0 && !(q_grid[i] > q_grid[i - 1]))) {
      throw std::domain_error("rq_curve: thresholds must be positive and strictly increasing");
    }
  }
  std::vector<RqCurvePoint> out;
  out.reserve(q_grid.size());
  for (double q : q_grid) {
    const auto sample = extract_events(s, mode, q, opts);
    RqCurvePoint p;
    p.q = q;
    p.n_events = sample.n_events;
    if (sample.r_q_empirical) p.r_q = *sample.r_q_empirical;
    if (sample.r_q_quantile) p.r_q_quantile = *sample.r_q_quantile;
    p.reliable = sample.reliable;
    out.push_back(p);
  }
  return out;
}

}  // namespace ctrw

#endif  // CTRW_EVENTS_HPP
