#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <gtest/gtest.h>

#include "ctrw/superposition.hpp"
#include "ctrw/superstat.hpp"

namespace {

using ctrw::Direction;
using ctrw::RelaxationSpec;
using ctrw::SuperstatParams;
using ctrw::WeibullParams;

const WeibullParams kIbm{0.8246, 0.0078, 1.0};

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

template <class F>
double gk(F&& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 20, 1e-14);
}

// R_Q * int_Q^inf (1/tau(eps)) exp(-dt/tau(eps)) D(eps) d(eps), written in
// u = (eps/eps_bar)^eta so that D(eps) d(eps) = e^-u du and
// tau(eps) = tau0 exp(+-u/alpha). Integrated piecewise around the peak of
// the conditional exponential.
double superposition_oracle(double alpha, double tau_q, Direction dir, double r_q, double dt) {
  const double u_q = std::log(r_q);
  const double sign = dir == Direction::expanding ? 1.0 : -1.0;
  const double log_tau0 = std::log(tau_q) - sign * u_q / alpha;
  auto f = [&](double u) {
    const double log_tau = log_tau0 + sign * u / alpha;
    const double log_decay = dt > 0.0 ? std::log(dt) - log_tau : -std::numeric_limits<double>::infinity();
    if (log_decay > 700.0) return 0.0;
    return std::exp(-log_tau - std::exp(log_decay) - (u - u_q));
  };
  std::vector<double> cuts = {u_q};
  const double peak = dir == Direction::expanding ? alpha * (std::log(dt) - log_tau0) : u_q;
  if (peak > u_q) {
    for (double d : {-20.0, -5.0, -1.0, 0.0, 1.0, 5.0, 20.0}) {
      const double c = peak + d * alpha;
      if (c > cuts.back()) cuts.push_back(c);
    }
  }
  for (double step : {1.0, 5.0, 20.0, 60.0}) cuts.push_back(cuts.back() + step);
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) sum += gk(f, cuts[i], cuts[i + 1]);
  sum += boost::math::quadrature::exp_sinh<double>().integrate(
      f, cuts.back(), std::numeric_limits<double>::infinity(), 1e-14);
  // R_Q * e^{-u_q} cancels against the shifted exponent above.
  return sum;
}

// int_0^inf dt^m psi(dt) by tanh-sinh on [0, tau] and exp-sinh beyond.
double moment_oracle(const SuperstatParams& sp, int m) {
  auto f = [&](double t) { return std::pow(t, m) * ctrw::psi(sp, t); };
  return boost::math::quadrature::tanh_sinh<double>().integrate(f, 0.0, sp.tau_q, 1e-15) +
         boost::math::quadrature::exp_sinh<double>().integrate(
             f, sp.tau_q, std::numeric_limits<double>::infinity(), 1e-15);
}

}  // namespace

TEST(Relaxation, IbmRow) {
  const RelaxationSpec r{1.48793, 58.86516, 0.8246, Direction::expanding};
  EXPECT_DOUBLE_EQ(ctrw::relaxation_time(r, 0.0), r.tau0);
  EXPECT_NEAR(ctrw::relaxation_time(r, 0.02145), 5.0, 0.01);
  RelaxationSpec c = r;
  c.direction = Direction::clustering;
  const double expanding = ctrw::relaxation_time(r, 0.02145);
  EXPECT_NEAR(ctrw::relaxation_time(c, 0.02145), r.tau0 * r.tau0 / expanding, 1e-12);
  EXPECT_NEAR(ctrw::relaxation_time(c, 0.02145), 0.4428, 1e-3);
}

TEST(Relaxation, MonotoneHierarchy) {
  RelaxationSpec r{0.3, 40.0, 0.7, Direction::expanding};
  RelaxationSpec c = r;
  c.direction = Direction::clustering;
  double prev_e = 0.0;
  double prev_c = std::numeric_limits<double>::infinity();
  for (double eps = 0.0; eps < 0.2; eps += 0.004) {
    EXPECT_GE(ctrw::relaxation_time(r, eps), prev_e);
    EXPECT_LE(ctrw::relaxation_time(c, eps), prev_c);
    prev_e = ctrw::relaxation_time(r, eps);
    prev_c = ctrw::relaxation_time(c, eps);
  }
  EXPECT_THROW(ctrw::relaxation_time({1.0, 1e4, 1.0}, 1.0), std::overflow_error);
  EXPECT_EQ(ctrw::relaxation_time({1.0, 1e4, 1.0, Direction::clustering}, 1.0), 0.0);
}

TEST(ParameterMaps, ShapeExponent) {
  EXPECT_NEAR(ctrw::alpha_from_bq(1.0 / 0.3, 0.3, 0.77), 1.0, 1e-15);
  EXPECT_NEAR(ctrw::alpha_from_bq(58.86516, 0.0078, 0.8246), 1.90, 1e-4);
  EXPECT_NEAR(ctrw::alpha_from_bq(320.29882, 0.0078, 0.8246), 0.47, 1e-4);
  EXPECT_NEAR(ctrw::bq_from_alpha(1.0, 1.0, 0.5), 1.0, 1e-15);
  EXPECT_NEAR(ctrw::bq_from_alpha(1000.0, 0.0078, 0.8246), 0.0295, 1e-4);
  EXPECT_NEAR(ctrw::bq_from_alpha(0.95, 0.0078, 0.8246), 136.43, 0.01);
}

TEST(ParameterMaps, TauRatios) {
  EXPECT_NEAR(ctrw::rq_from_tau_ratios(3.0, 3.0, 1.0), std::exp(1.0), 1e-14);
  const RelaxationSpec r{1.48793, 58.86516, 0.8246};
  const double rq = ctrw::rq_from_tau_ratios(ctrw::relaxation_time(r, 0.02145),
                                             ctrw::relaxation_time(r, 0.0078), r.tau0);
  EXPECT_NEAR(rq, 10.0, 0.05);
  EXPECT_THROW(ctrw::rq_from_tau_ratios(2.0, 1.0, 1.0), std::domain_error);

  EXPECT_NEAR(ctrw::tau0_from_tauq(5.0, 10.0, 1.90), 1.488, 1e-3);
  EXPECT_NEAR(ctrw::tau0_from_tauq(3.85, 70.0, 0.47), 4.566e-4, 0.005 * 4.566e-4);
  EXPECT_DOUBLE_EQ(ctrw::tau0_from_tauq(2.5, 1.0, 0.3), 2.5);
}

TEST(Superscaling, IbmUniversalParameters) {
  const ctrw::ScalingLaw law{0.04798, 2.6096};
  EXPECT_NEAR(ctrw::alpha_from_scaling(law, 10.0), 2.36, 0.01);
  EXPECT_NEAR(ctrw::alpha_from_scaling(law, std::exp(1.0)), 1.0 / 0.04798, 1e-10);
  EXPECT_NEAR(ctrw::log_tauq_ratio_from_scaling(law, 70.0), 8.89, 0.01);
  const double tau0 = 3.85 / ctrw::tauq_ratio_from_scaling(law, 70.0);
  EXPECT_GT(tau0, 4.57e-4 / 2.0);
  EXPECT_LT(tau0, 4.57e-4 * 2.0);
  EXPECT_NEAR(ctrw::tauq_ratio_from_scaling(law, 1.0 + 1e-12), 1.0, 1e-12);
  EXPECT_THROW(ctrw::alpha_from_scaling(law, 1.0), std::domain_error);

  // B_Q = 58.865 at R_Q = 10 lies inside the band spanned by B, zeta and their errors.
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (double b : {0.04798 - 0.0249, 0.04798, 0.04798 + 0.0249}) {
    for (double z : {2.6096 - 0.3478, 2.6096, 2.6096 + 0.3478}) {
      const double bq = ctrw::scaling_bq({b, z}, kIbm, 0.02145);
      lo = std::min(lo, bq);
      hi = std::max(hi, bq);
    }
  }
  EXPECT_LT(lo, 58.865);
  EXPECT_GT(hi, 58.865);

  for (double q : {0.01, 0.02145, 0.045}) {
    EXPECT_LT(rel(ctrw::scaling_bq(law, kIbm, q),
                  ctrw::scaling_bq_from_rq(law, kIbm.eps_bar, kIbm.eta, ctrw::rq_of_q(kIbm, q))),
              1e-12);
  }

  const ctrw::ScalingLaw flat{0.05, 1e-14};
  EXPECT_NEAR(ctrw::scaling_bq(flat, kIbm, 0.01), ctrw::scaling_bq(flat, kIbm, 0.04), 1e-9);
}

TEST(Psi, Examples) {
  EXPECT_DOUBLE_EQ(ctrw::psi({1.0, 1.0}, 0.0), 0.5);
  EXPECT_DOUBLE_EQ(ctrw::psi_initial({1.0, 1.0}, 0.0), ctrw::psi({1.0, 1.0}, 0.0));
  const double exp_limit = std::exp(-3.0 / 1.4286) / 1.4286;
  EXPECT_LT(rel(ctrw::psi({1000.0, 1.4286}, 3.0), exp_limit), 0.01);
  EXPECT_THROW(ctrw::psi({1.0, 1.0, Direction::clustering}, 1.0), std::invalid_argument);
  EXPECT_THROW(ctrw::psi({1.0, 1.0}, -1.0), std::domain_error);
}

TEST(Psi, MatchesSuperpositionIntegral) {
  for (double alpha : {0.47, 0.95, 1.9, 3.0}) {
    for (double x = 1e-3; x <= 1e3 * 1.0001; x *= std::pow(10.0, 0.25)) {
      const SuperstatParams sp{alpha, 5.0};
      const double oracle = superposition_oracle(alpha, 5.0, Direction::expanding, 10.0, x * 5.0);
      EXPECT_LT(rel(ctrw::psi(sp, x * 5.0), oracle), 1e-8) << alpha << " " << x;
    }
  }
  // Reference point alpha = 1.9, tau = 5, dt = 50 at R_Q = 10.
  EXPECT_LT(rel(ctrw::psi({1.9, 5.0}, 50.0),
                superposition_oracle(1.9, 5.0, Direction::expanding, 10.0, 50.0)),
            1e-10);
}

TEST(Psi, LibrarySuperpositionAgreesWithOracle) {
  const double q = ctrw::q_of_rq(kIbm, 10.0);
  const RelaxationSpec r{ctrw::tau0_from_tauq(5.0, 10.0, 1.9), ctrw::bq_from_alpha(1.9, 0.0078, 0.8246),
                         0.8246};
  for (double dt : {0.01, 1.0, 50.0, 3000.0}) {
    const double lib = ctrw::psi_by_superposition(r, kIbm, q, dt).value;
    EXPECT_LT(rel(lib, superposition_oracle(1.9, 5.0, Direction::expanding, 10.0, dt)), 1e-9);
  }
}

TEST(Psi, Normalization) {
  for (double alpha : {0.47, 0.95, 1.9, 3.0, 10.0}) {
    EXPECT_NEAR(moment_oracle({alpha, 2.0}, 0), 1.0, 1e-8) << alpha;
  }
}

TEST(Psi, UnconditionalScaling) {
  EXPECT_DOUBLE_EQ(ctrw::psi_unconditional({1.9, 5.0}, 10.0, 7.0), ctrw::psi({1.9, 5.0}, 7.0) / 10.0);
  EXPECT_THROW(ctrw::psi_unconditional({1.9, 5.0}, 0.5, 7.0), std::domain_error);
}

TEST(Psi, SurvivalMatchesIntegral) {
  for (double alpha : {0.47, 1.9, 30.0, 800.0}) {
    const SuperstatParams sp{alpha, 1.3};
    for (double dt : {0.05, 1.0, 4.0, 40.0}) {
      const double cdf = boost::math::quadrature::tanh_sinh<double>().integrate(
          [&](double t) { return ctrw::psi(sp, t); }, 0.0, dt, 1e-14);
      EXPECT_NEAR(ctrw::psi_cdf(sp, dt), cdf, 1e-10) << alpha << " " << dt;
      EXPECT_NEAR(ctrw::psi_survival(sp, dt) + ctrw::psi_cdf(sp, dt), 1.0, 1e-14);
    }
  }
}

TEST(Psi, TailAndInitialRegimes) {
  EXPECT_NEAR(ctrw::psi_tail({1.0, 1.0}, 10.0), 0.01, 1e-15);
  for (double alpha = 0.4; alpha <= 4.0; alpha += 0.3) {
    const SuperstatParams sp{alpha, 5.0};
    EXPECT_LT(rel(ctrw::psi(sp, 50.0 * 5.0), ctrw::psi_tail(sp, 50.0 * 5.0)), 1e-6) << alpha;
    EXPECT_LT(rel(ctrw::psi(sp, 0.01 * 5.0), ctrw::psi_initial(sp, 0.01 * 5.0)), 1e-3) << alpha;
  }
  const SuperstatParams sp{1.9, 5.0};
  const double slope = std::log(ctrw::psi(sp, 5e3) / ctrw::psi(sp, 5e2)) / std::log(10.0);
  EXPECT_NEAR(slope, -2.9, 1e-3);
  // Large-alpha limit of the initial form.
  EXPECT_LT(rel(ctrw::psi_initial({1e7, 2.0}, 3.0), std::exp(-1.5) / 2.0), 1e-6);
}

TEST(PsiClustering, MatchesSuperpositionIntegral) {
  for (double alpha : {0.47, 1.9}) {
    for (double x = 1e-2; x <= 50.0 * 1.0001; x *= std::pow(5000.0, 1.0 / 24.0)) {
      const SuperstatParams sp{alpha, 0.7, Direction::clustering};
      const double oracle = superposition_oracle(alpha, 0.7, Direction::clustering, 10.0, x * 0.7);
      EXPECT_LT(rel(ctrw::psi_clustering(sp, x * 0.7), oracle), 1e-8) << alpha << " " << x;
    }
  }
}

TEST(PsiClustering, NormalizedAndSurvival) {
  for (double alpha : {0.47, 0.95, 1.9, 3.0}) {
    const SuperstatParams sp{alpha, 0.7, Direction::clustering};
    auto f = [&](double t) { return ctrw::psi_clustering(sp, t); };
    const double mass = boost::math::quadrature::tanh_sinh<double>().integrate(f, 0.0, 0.7, 1e-13) +
                        boost::math::quadrature::exp_sinh<double>().integrate(
                            f, 0.7, std::numeric_limits<double>::infinity(), 1e-13);
    EXPECT_NEAR(mass, 1.0, 1e-8) << alpha;
    const double tail = boost::math::quadrature::exp_sinh<double>().integrate(
        f, 1.4, std::numeric_limits<double>::infinity(), 1e-13);
    EXPECT_NEAR(ctrw::psi_clustering_survival(sp, 1.4), tail, 1e-10);
  }
}

TEST(PsiClustering, SmallAndLargeTimeBehaviour) {
  const SuperstatParams low{0.47, 1.0, Direction::clustering};
  EXPECT_THROW(ctrw::psi_clustering(low, 0.0), std::domain_error);
  EXPECT_LT(rel(ctrw::psi_clustering(low, 1e-6), ctrw::psi_clustering_initial(low, 1e-6)), 1e-2);
  const SuperstatParams high{1.9, 1.0, Direction::clustering};
  EXPECT_NEAR(ctrw::psi_clustering(high, 0.0), 1.9 / 0.9, 1e-14);
  // Exponential truncation: d ln psi / dx -> -1 (within 5% beyond x = 25).
  for (double x = 25.0; x <= 50.0; x += 5.0) {
    const double h = 1e-3;
    const double slope = (std::log(ctrw::psi_clustering(low, x + h)) -
                          std::log(ctrw::psi_clustering(low, x - h))) / (2.0 * h);
    EXPECT_NEAR(slope, -1.0, 0.05) << x;
  }
}

TEST(PsiClustering, PrintedFormDiffersFromSuperposition) {
  const SuperstatParams sp{1.9, 1.0, Direction::clustering};
  const double printed = ctrw::psi_clustering(sp, 2.0, ctrw::ClusteringForm::printed);
  const double expected = 1.9 * std::pow(2.0, -2.9) * boost::math::tgamma(2.9, 2.0);
  EXPECT_LT(rel(printed, expected), 1e-12);
  EXPECT_GT(rel(printed, ctrw::psi_clustering(sp, 2.0)), 1e-2);
  // Complement identity used by the printed form.
  EXPECT_LT(rel(ctrw::upper_incomplete_gamma(2.9, 2.0),
                ctrw::gamma_complete(2.9) - ctrw::lower_incomplete_gamma(2.9, 2.0)),
            1e-12);
}

TEST(PsiMixture, Linear) {
  const SuperstatParams e{1.9, 5.0};
  const SuperstatParams c{0.47, 5.0, Direction::clustering};
  for (double dt : {0.1, 1.0, 10.0, 100.0}) {
    EXPECT_EQ(ctrw::psi_mixture(e, c, 1.0, dt), ctrw::psi(e, dt));
    EXPECT_EQ(ctrw::psi_mixture(e, c, 0.0, dt), ctrw::psi_clustering(c, dt));
    EXPECT_NEAR(ctrw::psi_mixture(e, c, 0.5, dt),
                0.5 * (ctrw::psi(e, dt) + ctrw::psi_clustering(c, dt)), 1e-15);
  }
  EXPECT_THROW(ctrw::psi_mixture(e, c, 1.5, 1.0), std::domain_error);
}

TEST(Moments, ClosedForm) {
  const SuperstatParams sp{1.9, 5.0};
  EXPECT_DOUBLE_EQ(*ctrw::moment(sp, 10.0, 0), 10.0);
  EXPECT_NEAR(*ctrw::moment(sp, 10.0, 1), 105.56, 0.01);
  EXPECT_FALSE(ctrw::moment({0.95, 4.55}, 30.0, 1).has_value());
  EXPECT_FALSE(ctrw::moment(sp, 10.0, 2).has_value());
  EXPECT_DOUBLE_EQ(*ctrw::moment(sp, 10.0, 1, ctrw::MomentConvention::conditional),
                   *ctrw::moment(sp, 10.0, 1) / 10.0);
}

TEST(Moments, MatchQuadrature) {
  for (double alpha : {1.9, 3.0, 10.0}) {
    const SuperstatParams sp{alpha, 1.7};
    for (int m : {1, 2}) {
      if (alpha <= m) continue;
      const auto closed = ctrw::moment(sp, 1.0, m, ctrw::MomentConvention::conditional);
      ASSERT_TRUE(closed.has_value());
      EXPECT_LT(rel(*closed, moment_oracle(sp, m)), 1e-6) << alpha << " " << m;
    }
  }
}
