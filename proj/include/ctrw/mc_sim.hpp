#ifndef CTRW_MC_SIM_HPP
#define CTRW_MC_SIM_HPP

// Monte Carlo sampling of the valley model.
//
// Every random number is a pure function of (seed, stream, counter): a
// SplitMix64 finalizer applied to a Weyl sequence. Workers split the draw
// index range, so results do not depend on how many threads ran.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "ctrw/events.hpp"
#include "ctrw/extreme_model.hpp"
#include "ctrw/superstat.hpp"

namespace ctrw {

class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix(seed ^ mix(stream + 0x243F6A8885A308D3ULL))) {}

  std::uint64_t bits(std::uint64_t counter) const {
    return mix(key_ + (counter + 1) * 0x9E3779B97F4A7C15ULL);
  }

  /// Uniform on the open interval (0, 1).
  double uniform(std::uint64_t counter) const {
    return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
  }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t key_;
};

namespace detail {

inline constexpr std::uint64_t kStreamInterevent = 1;
inline constexpr std::uint64_t kStreamSeries = 2;

/// Runs body(begin, end) over [0, n) split into contiguous chunks.
template <class Body>
void parallel_ranges(std::size_t n, std::size_t workers, Body&& body) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    body(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = std::min(n, w * chunk);
    const std::size_t end = std::min(n, begin + chunk);
    threads.emplace_back([&, w, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace detail

struct SimConfig {
  WeibullParams weibull;
  RelaxationSpec relaxation;
  double q = 0.0;
  std::size_t n_samples = 1;
  std::uint64_t seed = 0;
  std::size_t n_workers = 1;

  void validate() const {
    weibull.validate();
    relaxation.validate();
    if (!(q >= 0.0) || !std::isfinite(q)) throw std::domain_error("SimConfig: q must be >= 0");
    if (n_samples < 1) throw std::domain_error("SimConfig: n_samples must be >= 1");
    if (n_workers < 1) throw std::domain_error("SimConfig: n_workers must be >= 1");
  }

  /// Closed-form parameters of the marginal interevent law.
  SuperstatParams superstat() const { return superstat_from_relaxation(relaxation, weibull, q); }
};

struct SimResult {
  InterEventSample sample;
  /// Draws dropped because tau(eps) overflowed.
  std::size_t n_aborted = 0;
  std::vector<std::size_t> aborted_indices;
};

/// Draw i uses counters 2i and 2i+1: eps = sample_excess(u0), then
/// dt = -tau(eps) ln u1.
inline SimResult sample_interevents(const SimConfig& c) {
  c.validate();
  const CounterRng rng(c.seed, detail::kStreamInterevent);
  std::vector<double> eps(c.n_samples);
  std::vector<double> dt(c.n_samples);
  std::vector<char> ok(c.n_samples, 1);
  detail::parallel_ranges(c.n_samples, c.n_workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const double u0 = rng.uniform(2 * i);
      const double u1 = rng.uniform(2 * i + 1);
      eps[i] = sample_excess(c.weibull, c.q, u0);
      const double log_tau = log_relaxation_time(c.relaxation, eps[i]);
      const double value = -std::exp(log_tau) * std::log(u1);
      if (!std::isfinite(value) || !(value > 0.0)) {
        ok[i] = 0;
        continue;
      }
      dt[i] = value;
    }
  });
  SimResult out;
  out.sample.q = c.q;
  out.sample.deltas.reserve(c.n_samples);
  out.sample.magnitudes.reserve(c.n_samples);
  for (std::size_t i = 0; i < c.n_samples; ++i) {
    if (!ok[i]) {
      ++out.n_aborted;
      out.aborted_indices.push_back(i);
      continue;
    }
    out.sample.magnitudes.push_back(eps[i]);
    out.sample.deltas.push_back(dt[i]);
  }
  detail::finish_sample(out.sample, 1);
  return out;
}

/// i.i.d. returns with |r| ~ Weibull(eta, eps_bar), negative with probability
/// sign_prob. Tick i uses counters 2i (magnitude) and 2i+1 (sign).
inline ReturnSeries generate_series(const WeibullParams& p, std::size_t n, double sign_prob,
                                    std::uint64_t seed, std::size_t n_workers = 1) {
  p.validate();
  if (n < 1) throw std::domain_error("generate_series: n must be >= 1");
  if (!(sign_prob >= 0.0 && sign_prob <= 1.0)) {
    throw std::domain_error("generate_series: sign_prob must lie in [0, 1]");
  }
  if (n_workers < 1) throw std::domain_error("generate_series: n_workers must be >= 1");
  const CounterRng rng(seed, detail::kStreamSeries);
  std::vector<double> r(n);
  detail::parallel_ranges(n, n_workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const double magnitude = p.eps_bar * std::pow(-std::log(rng.uniform(2 * i)), 1.0 / p.eta);
      r[i] = rng.uniform(2 * i + 1) < sign_prob ? -magnitude : magnitude;
    }
  });
  return ReturnSeries::from_returns(std::move(r));
}

}  // namespace ctrw

#endif  // CTRW_MC_SIM_HPP
