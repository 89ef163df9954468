#include <cmath>
#include <memory>
#include <random>

#include <boost/math/special_functions/digamma.hpp>
#include <gtest/gtest.h>

#include "lscp/diagnostics.hpp"

using namespace lscp;

namespace {

std::vector<double> ar1(double phi, long n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> z;
  std::vector<double> x(n);
  x[0] = z(gen) / std::sqrt(1 - phi * phi);
  for (long i = 1; i < n; ++i) x[i] = phi * x[i - 1] + z(gen);
  return x;
}

}  // namespace

TEST(Ess, IidTrace) {
  const auto x = ar1(0.0, 10000, 1);
  const double e = ess(x);
  EXPECT_GE(e, 8500.0);
  EXPECT_LE(e, 10000.0);
}

TEST(Ess, Ar1Trace) {
  const auto x = ar1(0.9, 100000, 2);
  const double ref = 100000 * 0.1 / 1.9;
  EXPECT_NEAR(ess(x), ref, 0.2 * ref);
}

TEST(Ess, ConstantAndShortTraces) {
  const std::vector<double> c(500, 3.25);
  EXPECT_DOUBLE_EQ(ess(c), 500.0);
  EXPECT_THROW(ess(std::vector<double>(5, 1.0)), std::invalid_argument);
}

TEST(Ess, AffineInvariant) {
  const auto x = ar1(0.5, 5000, 3);
  std::vector<double> y;
  for (double v : x) y.push_back(-4.0 * v + 11.0);
  EXPECT_NEAR(ess(x), ess(y), 1e-6 * ess(x));
}

TEST(Autocorrelation, Ar1Lags) {
  const auto x = ar1(0.7, 200000, 4);
  const auto rho = autocorrelation(x, 3);
  ASSERT_EQ(rho.size(), 4u);
  EXPECT_DOUBLE_EQ(rho[0], 1.0);
  EXPECT_NEAR(rho[1], 0.7, 0.01);
  EXPECT_NEAR(rho[2], 0.49, 0.01);
}

TEST(Dic, SingleLevelClosedForm) {
  auto grid = std::make_shared<ReferenceGrid>(Window(0, 2, 0, 2), 16, 8);
  const NngpPrior prior(grid, {1.0, 1.0, 1.95});
  const long n = 50;
  const double mu = 4.0;
  const double a = 1.2 + n, b = 0.04 + mu;  // conjugate posterior
  std::mt19937_64 gen(5);
  std::gamma_distribution<double> post(a, 1.0 / b);
  std::vector<PosteriorDraw> draws;
  for (int i = 0; i < 20000; ++i) {
    PosteriorDraw d;
    d.lambda = {post(gen)};
    d.grid = {Eigen::VectorXd::Zero(16)};
    d.y_regions = {std::vector<std::uint8_t>(n, 0)};
    draws.push_back(std::move(d));
  }
  const DicResult r = dic(draws, prior, 1000, 1);
  const double mean_dev = -2.0 * (n * (boost::math::digamma(a) - std::log(b)) - mu * a / b);
  const double plugin = -2.0 * (n * std::log(a / b) - mu * a / b);
  EXPECT_NEAR(r.mean_deviance, mean_dev, 0.4);
  EXPECT_NEAR(r.plugin_deviance, plugin, 0.05);
  EXPECT_NEAR(r.dic, 2 * mean_dev - plugin, 0.8);
  EXPECT_NEAR(r.p_d, r.mean_deviance - r.plugin_deviance, 1e-12);

  const DicResult again = dic(draws, prior, 1000, 1);
  EXPECT_EQ(again.dic, r.dic);
  EXPECT_THROW(dic(draws, prior, 999, 1), std::invalid_argument);
}
