#include <cmath>
#include <memory>

#include <gtest/gtest.h>

#include "lscp/predict.hpp"
#include "oracles.hpp"

using namespace lscp;
namespace lt = lscp::testing;

namespace {

// 4 x 4 lattice on [0,4]^2 with cell centres at 0.5, 1.5, ...
std::shared_ptr<const NngpPrior> small_prior() {
  auto grid = std::make_shared<ReferenceGrid>(Window(0, 4, 0, 4), 16, 8);
  return std::make_shared<NngpPrior>(grid, CovarianceSpec{1.0, 1.0, 1.95});
}

PosteriorDraw hand_draw(std::vector<double> lambda, std::vector<double> c, Eigen::VectorXd grid) {
  PosteriorDraw d;
  d.lambda = std::move(lambda);
  d.c = std::move(c);
  d.grid = {std::move(grid)};
  return d;
}

}  // namespace

TEST(IntegratedIntensity, SingleLevelIsDeterministic) {
  const auto prior = small_prior();
  const PosteriorDraw d = hand_draw({2.5}, {}, Eigen::VectorXd::Zero(16));
  Engine eng(1);
  EXPECT_DOUBLE_EQ(integrated_intensity_draw(*prior, d, Window(0, 2, 0, 1), eng), 5.0);
}

TEST(IntegratedIntensity, HalfPlaneField) {
  const BetaAt beta = [](const Point& p, Engine&) { return p.x - 0.5; };
  const std::vector<double> lambda{1.0, 2.0};
  Engine eng(2);
  std::vector<double> v;
  for (int i = 0; i < 100000; ++i) v.push_back(integrated_intensity_draw(beta, PartitionLevels({0.0}), lambda, Window(0, 1, 0, 1), eng));
  EXPECT_LT(std::abs(lt::mean(v) - 1.5), 3 * std::sqrt(lt::variance(v) / v.size()));
}

TEST(IntegratedIntensity, IndexKeyedStreams) {
  const auto prior = small_prior();
  Engine eng(3);
  std::vector<PosteriorDraw> draws;
  for (int i = 0; i < 5; ++i) draws.push_back(hand_draw({1.0, 3.0}, {0.0}, prior->sample_grid(eng)));
  const auto a = integrated_intensity(*prior, draws, Window(0, 4, 0, 4), 9);
  const auto b = integrated_intensity(*prior, draws, Window(0, 4, 0, 4), 9);
  EXPECT_EQ(a, b);
  for (double x : a) EXPECT_TRUE(x == 16.0 || x == 48.0);
}

TEST(Summarize, QuantilesAndError) {
  const std::vector<double> v{1, 2, 3, 4, 5};
  const PredictiveSummary s = summarize(v, 2.0);
  EXPECT_DOUBLE_EQ(s.mean, 3.0);
  EXPECT_NEAR(s.sd, std::sqrt(2.5), 1e-14);
  EXPECT_DOUBLE_EQ(s.q025, lt::quantile(v, 0.025));
  EXPECT_DOUBLE_EQ(s.q975, lt::quantile(v, 0.975));
  // mean of (v - 2)^2 = (1 + 0 + 1 + 4 + 9) / 5
  EXPECT_DOUBLE_EQ(*s.quadratic_error, 3.0);
  EXPECT_FALSE(summarize(v).quadratic_error.has_value());
}

TEST(GridSummary, SingleDrawMatchesPiecewiseValue) {
  const auto prior = small_prior();
  Eigen::VectorXd g = -2.0 * Eigen::VectorXd::Ones(16);
  g(5) = 2.0;
  const PosteriorDraw d = hand_draw({1.0, 7.0}, {0.0}, g);
  const std::vector<PosteriorDraw> draws{d};
  const auto rows = grid_summary(*prior, draws, Window(0, 4, 0, 4), 4, 4, 1);
  ASSERT_EQ(rows.size(), 16u);
  for (int i = 0; i < 16; ++i) {
    const double expect = i == 5 ? 7.0 : 1.0;
    EXPECT_DOUBLE_EQ(rows[i].mean_if, expect) << i;
    EXPECT_EQ(rows[i].modal_region, i == 5 ? 1 : 0);
    EXPECT_DOUBLE_EQ(rows[i].modal_if, expect);
  }
  EXPECT_DOUBLE_EQ(rows[5].x, 1.5);
  EXPECT_DOUBLE_EQ(rows[5].y, 1.5);
}

TEST(GridSummary, SingleLevelModalRegion) {
  const auto prior = small_prior();
  Engine eng(4);
  const std::vector<PosteriorDraw> draws{hand_draw({3.0}, {}, prior->sample_grid(eng))};
  for (const auto& r : grid_summary(*prior, draws, Window(0, 4, 0, 4), 7, 5, 2)) {
    EXPECT_EQ(r.modal_region, 0);
    EXPECT_DOUBLE_EQ(r.mean_if, 3.0);
  }
}

TEST(GridSummary, TwoDrawAverages) {
  const auto prior = small_prior();
  Eigen::VectorXd g1 = -2.0 * Eigen::VectorXd::Ones(16), g2 = -2.0 * Eigen::VectorXd::Ones(16);
  g1(0) = 2.0;
  g2(0) = 2.0;
  g2(1) = 2.0;
  const std::vector<PosteriorDraw> draws{hand_draw({1.0, 5.0}, {0.0}, g1), hand_draw({2.0, 9.0}, {0.0}, g2)};
  const auto rows = grid_summary(*prior, draws, Window(0, 4, 0, 4), 4, 4, 3);
  // site 0: high in both -> (5 + 9) / 2; site 1: (1 + 9) / 2; others (1 + 2) / 2
  EXPECT_DOUBLE_EQ(rows[0].mean_if, 7.0);
  EXPECT_DOUBLE_EQ(rows[1].mean_if, 5.0);
  EXPECT_DOUBLE_EQ(rows[2].mean_if, 1.5);
  EXPECT_EQ(rows[0].modal_region, 1);
  EXPECT_DOUBLE_EQ(rows[0].modal_if, 7.0);
  EXPECT_DOUBLE_EQ(rows[2].modal_if, 1.5);
  // tie at site 1 goes to the lower region
  EXPECT_EQ(rows[1].modal_region, 0);
}

TEST(ReplicatePattern, HomogeneousCountMean) {
  const auto prior = small_prior();
  const PosteriorDraw d = hand_draw({0.5}, {}, Eigen::VectorXd::Zero(16));
  Engine eng(5);
  std::vector<double> n;
  for (int i = 0; i < 4000; ++i) n.push_back(static_cast<double>(replicate_pattern(*prior, d, Window(0, 4, 0, 4), eng).size()));
  EXPECT_LT(std::abs(lt::mean(n) - 8.0), 3 * std::sqrt(8.0 / n.size()));
}

TEST(FutureDraw, FrozenLatticeAndRateMartingale) {
  auto grid = std::make_shared<ReferenceGrid>(Window(0, 4, 0, 4), 16, 8);
  const CovarianceSpec base{1.0, 1.0, 1.95};
  const DynamicPrior dyn(std::make_shared<NngpPrior>(grid, base),
                         std::make_shared<NngpPrior>(grid, CovarianceSpec{0.0, 1.0, 1.95}));
  Engine eng(6);
  const PosteriorDraw d = hand_draw({2.0, 6.0}, {0.0}, dyn.base().sample_grid(eng));
  const std::vector<double> w{0.5, 0.5}, a{5.0, 30.0};
  std::vector<double> l0, l1;
  for (int i = 0; i < 20000; ++i) {
    const FutureDraw f = future_draw(dyn, d, 2, w, a, eng);
    ASSERT_EQ(f.grid.size(), 2u);
    ASSERT_EQ(f.grid[1], d.grid[0]);
    l0.push_back(f.lambda[0][0]);
    l1.push_back(f.lambda[1][1]);
  }
  EXPECT_LT(std::abs(lt::mean(l0) - 2.0), 3 * std::sqrt(lt::variance(l0) / l0.size()));
  EXPECT_LT(std::abs(lt::mean(l1) - 6.0), 3 * std::sqrt(lt::variance(l1) / l1.size()));
  EXPECT_THROW(future_draw(dyn, d, 0, w, a, eng), std::invalid_argument);
}
