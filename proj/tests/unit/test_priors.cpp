#include <cmath>
#include <limits>

#include <boost/math/distributions/beta.hpp>
#include <gtest/gtest.h>

#include "lscp/priors.hpp"
#include "oracles.hpp"

using namespace lscp;
namespace lt = lscp::testing;

TEST(RepulsiveGamma, PenaltyAtUnitScaledDistance) {
  EXPECT_NEAR(repulsion_factor(1.0, 1.0, 3.0), 1.0 - std::exp(-1.0), 1e-15);
  EXPECT_NEAR(repulsion_factor(1.0, 1.0, 3.0), 0.63212, 1e-5);
  EXPECT_DOUBLE_EQ(repulsion_factor(0.0, 1.0, 3.0), 0.0);
}

TEST(RepulsiveGamma, TiesAreExcluded) {
  const RGSpec spec = RGSpec::defaults(3);
  const std::vector<double> tied{1.0, 4.0, 4.0};
  EXPECT_EQ(rg_log_density_unnorm(tied, spec), -std::numeric_limits<double>::infinity());
}

TEST(RepulsiveGamma, SingleLevelIsGammaKernel) {
  const RGSpec spec = RGSpec::defaults(1);
  for (double l : {0.3, 5.0, 44.0}) {
    const std::vector<double> v{l};
    EXPECT_NEAR(rg_log_density_unnorm(v, spec), 0.2 * std::log(l) - 0.04 * l, 1e-13);
  }
}

TEST(RepulsiveGamma, PairwiseProductByHand) {
  RGSpec spec = RGSpec::defaults(3);
  spec.rho = 2.0;
  const std::vector<double> v{1.0, 4.0, 12.0};
  double expect = 0.0;
  for (double l : v) expect += 0.2 * std::log(l) - 0.04 * l;
  auto pen = [](double a, double b) { return std::log(1.0 - std::exp(-2.0 * std::pow(std::abs(a - b) / std::sqrt(a + b), 3.0))); };
  expect += pen(1, 4) + pen(1, 12) + pen(4, 12);
  EXPECT_NEAR(rg_log_density_unnorm(v, spec), expect, 1e-12);
}

TEST(RepulsiveGamma, TruncationBound) {
  RGSpec spec = RGSpec::defaults(2);
  spec.upper_bound = 10.0;
  EXPECT_EQ(rg_log_density_unnorm(std::vector<double>{1.0, 11.0}, spec), -std::numeric_limits<double>::infinity());
  EXPECT_TRUE(std::isfinite(rg_log_density_unnorm(std::vector<double>{1.0, 9.0}, spec)));
}

TEST(RepulsiveGamma, Validation) {
  RGSpec spec = RGSpec::defaults(2);
  spec.eta[1] = 0.0;
  EXPECT_THROW(spec.validate(), std::invalid_argument);
  spec = RGSpec::defaults(2);
  spec.alpha.pop_back();
  EXPECT_THROW(spec.validate(), std::invalid_argument);
}

TEST(Ngar1, SupportOfTransition) {
  const std::vector<double> flat{2.0, 2.0};
  EXPECT_TRUE(std::isfinite(ngar1_log_density(flat, 0.5, 5.0)));
  const std::vector<double> jump{2.0, 6.0};
  EXPECT_EQ(ngar1_log_density(jump, 0.5, 5.0), -std::numeric_limits<double>::infinity());
}

TEST(Ngar1, TransitionMatchesBetaDensity) {
  const double w = 0.5, a = 15.0;
  const boost::math::beta_distribution<double> beta(w * a, (1 - w) * a);
  for (double next : {0.5, 2.0, 3.1}) {
    const std::vector<double> traj{2.0, next};
    const double eps = w * next / 2.0;
    EXPECT_NEAR(ngar1_log_density(traj, w, a), std::log(boost::math::pdf(beta, eps) * w / 2.0), 1e-10);
  }
}

TEST(Ngar1, JointDensityAddsInitialPrior) {
  NGAR1Spec spec;
  spec.w = {0.5, 0.5};
  spec.a = {5.0, 30.0};
  spec.initial = RGSpec::defaults(2);
  spec.validate();
  const std::vector<double> rates{1.0, 5.0, 1.1, 4.5};  // times 0 and 1
  const double expect = rg_log_density_unnorm(std::vector<double>{1.0, 5.0}, spec.initial) +
                        ngar1_log_density(std::vector<double>{1.0, 1.1}, 0.5, 5.0) +
                        ngar1_log_density(std::vector<double>{5.0, 4.5}, 0.5, 30.0);
  EXPECT_NEAR(ngar1_joint_log_density(rates, 2, spec), expect, 1e-12);
}

TEST(Ngar1, Martingale) {
  Engine eng(77);
  for (double a : {5.0, 30.0}) {
    std::vector<double> next;
    for (int i = 0; i < 100000; ++i) next.push_back(ngar1_simulate(4.0, 0.5, a, 1, eng)[1]);
    EXPECT_LT(std::abs(lt::mean(next) - 4.0), 3 * std::sqrt(lt::variance(next) / next.size()));
  }
}

TEST(Ngar1, BetaDrawMoments) {
  Engine eng(78);
  std::vector<double> v;
  for (int i = 0; i < 50000; ++i) v.push_back(beta_draw(2.0, 6.0, eng));
  EXPECT_LT(std::abs(lt::mean(v) - 0.25), 3 * std::sqrt(lt::variance(v) / v.size()));
}
