#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "ctrw/estimation.hpp"

namespace {

using ctrw::ScalingPoint;
using ctrw::ThresholdPoint;
using ctrw::TauPoint;
using ctrw::WeibullParams;

const WeibullParams kIbm{0.8246, 0.0078, 1.0};

// Exact bin masses of the closed-form law on geometric edges.
ctrw::Histogram exact_histogram(const ctrw::SuperstatParams& sp, double lo, double hi, int n) {
  ctrw::Histogram h;
  h.binning = ctrw::Binning::logarithmic;
  for (int i = 0; i <= n; ++i) h.edges.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / n));
  auto surv = [&](double t) {
    return sp.direction == ctrw::Direction::expanding ? ctrw::psi_survival(sp, t)
                                                       : ctrw::psi_clustering_survival(sp, t);
  };
  const double total = surv(lo) - surv(hi);
  for (int i = 0; i < n; ++i) {
    const double mass = (surv(h.edges[i]) - surv(h.edges[i + 1])) / total;
    h.counts.push_back(static_cast<std::uint64_t>(std::max(1.0, std::round(1e5 * mass))));
    h.densities.push_back(mass / h.width(i));
  }
  return h;
}

}  // namespace

TEST(FitRqCurve, NoiselessRecovery) {
  const WeibullParams truth{0.7, 0.004, 1.3};
  std::vector<ThresholdPoint> pts;
  for (double q = 0.002; q < 0.05; q *= 1.4) pts.push_back({q, ctrw::rq_of_q(truth, q)});
  const auto rep = ctrw::fit_rq_curve(pts);
  EXPECT_TRUE(rep.converged);
  EXPECT_NEAR(rep.params.eta, truth.eta, 1e-10);
  EXPECT_NEAR(rep.params.eps_bar, truth.eps_bar, 1e-10 * truth.eps_bar);
  EXPECT_NEAR(rep.params.calib, truth.calib, 1e-9);
  EXPECT_EQ(rep.names, (std::vector<std::string>{"eta", "eps_bar", "calib"}));
}

TEST(FitRqCurve, FixedCalibration) {
  std::vector<ThresholdPoint> pts;
  for (double q = 0.005; q < 0.05; q *= 1.5) pts.push_back({q, ctrw::rq_of_q(kIbm, q)});
  ctrw::RqFitOptions opts;
  opts.fit_calib = false;
  const auto rep = ctrw::fit_rq_curve(pts, {}, opts);
  EXPECT_NEAR(rep.params.eta, kIbm.eta, 1e-10);
  EXPECT_NEAR(rep.params.eps_bar, kIbm.eps_bar, 1e-12);
  EXPECT_EQ(rep.values.at(2), 1.0);
  EXPECT_EQ(rep.stderrs.at(2), 0.0);
}

TEST(FitRqCurve, TwoPointsInterpolateAndFlag) {
  const std::vector<ThresholdPoint> pts = {{0.01, ctrw::rq_of_q(kIbm, 0.01)},
                                           {0.03, ctrw::rq_of_q(kIbm, 0.03)}};
  const auto rep = ctrw::fit_rq_curve(pts);
  EXPECT_TRUE(rep.under_determined);
  EXPECT_FALSE(rep.notes.empty());
  for (const auto& p : pts) EXPECT_NEAR(ctrw::rq_of_q(rep.params, p.q), p.r_q, 1e-8 * p.r_q);
}

TEST(FitRqCurve, RejectsBadInput) {
  const std::vector<ThresholdPoint> one = {{0.01, 3.0}};
  EXPECT_THROW(ctrw::fit_rq_curve(one), std::invalid_argument);
  const std::vector<ThresholdPoint> bad = {{0.01, 3.0}, {0.02, 0.5}, {0.03, 9.0}};
  EXPECT_THROW(ctrw::fit_rq_curve(bad), std::domain_error);
}

TEST(FitRqCurve, ObjectiveHistoryIsMonotone) {
  std::vector<ThresholdPoint> pts;
  double wiggle = 1.03;
  for (double q = 0.003; q < 0.05; q *= 1.3) {
    pts.push_back({q, ctrw::rq_of_q(kIbm, q) * wiggle});
    wiggle = 2.0 - wiggle;
  }
  const auto rep = ctrw::fit_rq_curve(pts);
  ASSERT_FALSE(rep.objective_history.empty());
  for (std::size_t i = 1; i < rep.objective_history.size(); ++i) {
    EXPECT_LE(rep.objective_history[i], rep.objective_history[i - 1]);
  }
  EXPECT_NEAR(rep.objective_history.back(), rep.objective, 1e-12);
}

TEST(FitPsi, NoiselessRecovery) {
  for (double alpha : {0.6, 1.9, 4.0}) {
    const ctrw::SuperstatParams truth{alpha, 3.0};
    const auto rep = ctrw::fit_psi(exact_histogram(truth, 0.01, 3000.0, 40));
    EXPECT_NEAR(rep.params.alpha, alpha, 1e-6 * alpha) << alpha;
    EXPECT_NEAR(rep.params.tau_q, 3.0, 3e-6) << alpha;
    EXPECT_FALSE(rep.alpha_clamped);
  }
}

TEST(FitPsi, ClusteringRecovery) {
  const ctrw::SuperstatParams truth{0.47, 0.8, ctrw::Direction::clustering};
  const auto rep = ctrw::fit_psi(exact_histogram(truth, 1e-3, 20.0, 30), ctrw::Direction::clustering);
  EXPECT_NEAR(rep.params.alpha, 0.47, 1e-6);
  EXPECT_NEAR(rep.params.tau_q, 0.8, 1e-6);
  ctrw::PsiFitOptions printed;
  printed.form = ctrw::ClusteringForm::printed;
  EXPECT_THROW(ctrw::fit_psi(exact_histogram(truth, 1e-3, 20.0, 30), ctrw::Direction::clustering, printed),
               std::invalid_argument);
}

TEST(FitPsi, ExponentialDataClampsAlpha) {
  ctrw::Histogram h;
  h.binning = ctrw::Binning::linear;
  for (int i = 0; i <= 30; ++i) h.edges.push_back(0.25 * i);
  const double total = -std::expm1(-h.edges.back() / 1.4);
  for (int i = 0; i < 30; ++i) {
    const double mass = (std::exp(-h.edges[i] / 1.4) - std::exp(-h.edges[i + 1] / 1.4)) / total;
    h.counts.push_back(static_cast<std::uint64_t>(std::max(1.0, std::round(1e5 * mass))));
    h.densities.push_back(mass / h.width(i));
  }
  const auto rep = ctrw::fit_psi(h);
  EXPECT_TRUE(rep.alpha_clamped);
  EXPECT_EQ(rep.params.alpha, 1000.0);
  EXPECT_NEAR(rep.params.tau_q, 1.4, 1e-3);
}

TEST(FitPsi, TooFewBins) {
  ctrw::Histogram h;
  h.edges = {1.0, 2.0, 3.0};
  h.counts = {5, 5};
  h.densities = {0.5, 0.5};
  EXPECT_THROW(ctrw::fit_psi(h), std::invalid_argument);
}

TEST(FitSuperscaling, NoiselessRecovery) {
  const ctrw::ScalingLaw truth{0.06, 2.3};
  std::vector<ScalingPoint> pts;
  for (double r : {3.0, 5.0, 10.0, 30.0, 70.0}) pts.push_back({r, ctrw::alpha_from_scaling(truth, r)});
  for (auto obj : {ctrw::SuperscalingObjective::inverse_alpha, ctrw::SuperscalingObjective::log_log}) {
    ctrw::SuperscalingOptions opts;
    opts.objective = obj;
    const auto rep = ctrw::fit_superscaling(pts, opts);
    EXPECT_NEAR(rep.params.b, 0.06, 1e-10);
    EXPECT_NEAR(rep.params.zeta, 2.3, 1e-10);
  }
}

TEST(FitSuperscaling, IbmPairs) {
  const std::vector<ScalingPoint> pts = {{2, 1000}, {5, 3.0}, {10, 1.90}, {30, 0.95}, {70, 0.47}};
  const auto rep = ctrw::fit_superscaling(pts);
  EXPECT_EQ(rep.n_points, 4u);
  EXPECT_FALSE(rep.notes.empty());
  EXPECT_NEAR(rep.params.b, 0.04798, 0.0249);
  EXPECT_NEAR(rep.params.zeta, 2.6096, 0.3478);
  EXPECT_GT(rep.stderrs[0], 0.0);
}

TEST(FitSuperscaling, OrderEquivariance) {
  std::vector<ScalingPoint> pts = {{5, 3.0}, {10, 1.90}, {30, 0.95}, {70, 0.47}};
  const auto a = ctrw::fit_superscaling(pts);
  std::reverse(pts.begin(), pts.end());
  const auto b = ctrw::fit_superscaling(pts);
  EXPECT_EQ(a.params.b, b.params.b);
  EXPECT_EQ(a.params.zeta, b.params.zeta);
}

TEST(FitSuperscaling, RejectsBadInput) {
  const std::vector<ScalingPoint> one = {{10, 1.9}};
  EXPECT_THROW(ctrw::fit_superscaling(one), std::invalid_argument);
  const std::vector<ScalingPoint> bad = {{1.0, 1.9}, {5, 3.0}, {10, 1.9}};
  EXPECT_THROW(ctrw::fit_superscaling(bad), std::domain_error);
}

TEST(FitPiecewise, IbmPoints) {
  const std::vector<TauPoint> pts = {{2, 1.4286}, {5, 3.33}, {10, 5.0}, {30, 4.55}, {70, 3.85}};
  const auto rep = ctrw::fit_piecewise_tau(pts);
  EXPECT_NEAR(rep.params.a_l, 0.435, 0.1 * 0.435);
  EXPECT_NEAR(rep.params.b_l, 0.788, 0.1 * 0.788);
  EXPECT_NEAR(rep.params.a_r, -0.0189, 0.1 * 0.0189);
  EXPECT_NEAR(rep.params.b_r, 5.16, 0.1 * 5.16);
  EXPECT_GT(rep.params.breakpoint, 5.0);
  EXPECT_LT(rep.params.breakpoint, 30.0);
  EXPECT_NEAR(rep.params.tau_at_zero_threshold(), rep.params.a_l + rep.params.b_l, 0.0);
  // Continuity is not imposed, but both lines pass near the pivot.
  EXPECT_NEAR(rep.params(10.0), 5.0, 0.5);
}

TEST(FitPiecewise, CollinearInputFlagged) {
  std::vector<TauPoint> pts;
  for (double r : {1.0, 2.0, 4.0, 8.0, 16.0}) pts.push_back({r, 0.5 * r + 1.0});
  const auto rep = ctrw::fit_piecewise_tau(pts);
  EXPECT_TRUE(rep.degenerate);
  EXPECT_NEAR(rep.params(3.0), 2.5, 1e-12);
  EXPECT_NEAR(rep.params(12.0), 7.0, 1e-12);
}

TEST(FitPiecewise, TooFewPoints) {
  const std::vector<TauPoint> pts = {{1, 1}, {2, 2}, {3, 1}};
  EXPECT_THROW(ctrw::fit_piecewise_tau(pts), std::invalid_argument);
}

TEST(DeriveElementary, IbmRows) {
  const auto row2 = ctrw::derive_elementary({1000.0, 1.4286}, 2.0, kIbm);
  EXPECT_NEAR(row2.b_q, 0.0295, 1e-4);
  EXPECT_NEAR(row2.tau0, 1.4286 * std::pow(2.0, -0.001), 1e-12);
  const auto row70 = ctrw::derive_elementary({0.47, 3.85}, 70.0, kIbm);
  EXPECT_NEAR(row70.b_q, 320.29882, 0.001 * 320.29882);
  EXPECT_NEAR(row70.tau0, 4.566e-4, 0.005 * 4.566e-4);
  EXPECT_FALSE(row70.tau0_underflow);

  const auto tiny = ctrw::derive_elementary({1e-3, 1.0}, 70.0, kIbm);
  EXPECT_TRUE(tiny.tau0_underflow);
  EXPECT_NEAR(tiny.log_tau0, -std::log(70.0) * 1e3, 1e-9);
}

TEST(DeriveElementary, RoundTrip) {
  for (double alpha : {0.3, 1.9, 17.0}) {
    const auto e = ctrw::derive_elementary({alpha, 2.0}, 10.0, kIbm);
    EXPECT_NEAR(ctrw::alpha_from_bq(e.b_q, kIbm.eps_bar, kIbm.eta), alpha, 1e-12 * alpha);
    EXPECT_NEAR(e.tau0 * std::pow(10.0, 1.0 / alpha), 2.0, 1e-12);
  }
}
