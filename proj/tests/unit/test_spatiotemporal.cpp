#include <cmath>

#include <gtest/gtest.h>

#include "lscp/spatiotemporal.hpp"

using namespace lscp;

namespace {

PointPattern timed_pattern(int times, std::size_t per_time, std::uint64_t seed) {
  Engine eng(seed);
  PointPattern p;
  p.window = Window(0, 4, 0, 4);
  for (int t = 0; t < times; ++t) {
    const auto pts = uniform_points(p.window, per_time + 10 * t, eng);
    p.points.insert(p.points.end(), pts.begin(), pts.end());
    p.times.insert(p.times.end(), pts.size(), t);
  }
  return p;
}

ModelSpec st_model(int K) {
  ModelSpec m;
  m.window = Window(0, 4, 0, 4);
  m.K = K;
  m.r = 196;
  m.m = 10;
  m.rate_prior = RGSpec::defaults(K);
  return m;
}

SamplerConfig st_sampler() {
  SamplerConfig c;
  c.iterations = 150;
  c.burn_in = 50;
  c.target_aux = 150;
  c.seed = 23;
  return c;
}

}  // namespace

TEST(SplitByTime, Slices) {
  const PointPattern p = timed_pattern(3, 5, 1);
  const auto s = split_by_time(p);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0].size(), 5u);
  EXPECT_EQ(s[2].size(), 25u);
  PointPattern flat = p;
  flat.times.clear();
  EXPECT_EQ(split_by_time(flat).size(), 1u);
}

TEST(FitSt, SingleTimeMatchesSpatialFit) {
  PointPattern p = timed_pattern(1, 70, 2);
  TemporalSpec ts;
  ts.varrho2 = 1.0;
  const FitResult a = fit(p, st_model(2), st_sampler());
  const FitResult b = fit_st(p, st_model(2), st_sampler(), ts);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    ASSERT_EQ(a.records[i].lambda, b.records[i].lambda);
    ASSERT_EQ(a.records[i].c, b.records[i].c);
    ASSERT_EQ(a.records[i].log_pm, b.records[i].log_pm);
  }
}

TEST(FitSt, IndependentRatesAcrossTimes) {
  const PointPattern p = timed_pattern(3, 40, 3);
  SamplerConfig cfg = st_sampler();
  cfg.audit = true;
  TemporalSpec ts;
  ts.varrho2 = 1.0;
  const FitResult r = fit_st(p, st_model(2), cfg, ts);
  ASSERT_FALSE(r.records.empty());
  EXPECT_EQ(r.records[0].times, 3);
  EXPECT_EQ(r.records[0].lambda.size(), 6u);
  EXPECT_EQ(r.records[0].c.size(), 1u);
  EXPECT_EQ(r.summary.delta.size(), 3u);
  ASSERT_FALSE(r.draws.empty());
  EXPECT_EQ(r.draws[0].grid.size(), 3u);
}

TEST(FitSt, Ngar1RatePrior) {
  const PointPattern p = timed_pattern(2, 50, 4);
  SamplerConfig cfg = st_sampler();
  cfg.audit = true;
  TemporalSpec ts;
  ts.varrho2 = 1.0;
  ts.rate_prior = TemporalSpec::RatePrior::kNgar1;
  ts.w = {0.5, 0.5};
  ts.a = {5, 30};
  const FitResult r = fit_st(p, st_model(2), cfg, ts);
  EXPECT_GT(r.summary.acc_lambda, 0.0);
  for (const auto& rec : r.records) {
    for (int k = 0; k < 2; ++k) {
      // NGAR1 support: lambda_1 < lambda_0 / w
      ASSERT_LT(rec.lambda[2 + k], rec.lambda[k] / 0.5);
    }
  }
}

TEST(FitSt, RejectsInvalidTemporalSettings) {
  const PointPattern p = timed_pattern(2, 20, 5);
  TemporalSpec ts;
  ts.varrho2 = 0.5;  // below tau2 = 1
  EXPECT_THROW(fit_st(p, st_model(2), st_sampler(), ts), std::invalid_argument);
}
