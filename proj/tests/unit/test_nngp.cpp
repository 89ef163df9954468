#include <cmath>
#include <memory>
#include <random>

#include <gtest/gtest.h>

#include "lscp/covariance.hpp"
#include "lscp/nngp.hpp"
#include "oracles.hpp"

using namespace lscp;
namespace lt = lscp::testing;

namespace {

std::shared_ptr<const ReferenceGrid> make_grid(double side, int r, int m) {
  return std::make_shared<ReferenceGrid>(Window(0, side, 0, side), r, m);
}

}  // namespace

TEST(Covariance, PoweredExponentialValues) {
  const CovarianceSpec unit{1.0, 1.0, 2.0};
  EXPECT_DOUBLE_EQ(cov(unit, {0.3, 0.3}, {0.3, 0.3}), 1.0);
  EXPECT_NEAR(cov(unit, {0, 0}, {1, 0}), std::exp(-0.5), 1e-15);
  EXPECT_NEAR(cov(unit, {0, 0}, {1, 0}), 0.60653, 1e-5);
  const CovarianceSpec spec{1.0, 1.0, 1.95};
  double prev = 1.0;
  for (double d = 0.1; d < 5.0; d += 0.1) {
    const double v = spec.at_distance(d);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(Covariance, ValidateRanges) {
  EXPECT_THROW((CovarianceSpec{1.0, 0.0, 1.0}.validate()), std::invalid_argument);
  EXPECT_THROW((CovarianceSpec{1.0, 1.0, 2.5}.validate()), std::invalid_argument);
  EXPECT_THROW((CovarianceSpec{-1.0, 1.0, 1.0}.validate()), std::invalid_argument);
  CovarianceSpec{1.0, 1.0, 2.0}.validate();
}

TEST(ReferenceGrid, ClampsNeighborCountOnSmallGrids) {
  const ReferenceGrid g(Window(0, 1, 0, 1), 4, 16);
  EXPECT_EQ(g.size(), 4);
  EXPECT_EQ(g.m(), 3);
  EXPECT_EQ(g.neighbors(3).size(), 3u);
}

TEST(ReferenceGrid, NeighborCounts) {
  const ReferenceGrid g(Window(0, 10, 0, 10), 2500, 16);
  EXPECT_EQ(g.size(), 2500);
  EXPECT_TRUE(g.neighbors(0).empty());
  EXPECT_EQ(g.neighbors(1), (std::vector<int>{0}));
  for (int i = 0; i < g.size(); ++i) {
    ASSERT_EQ(g.neighbors(i).size(), static_cast<std::size_t>(std::min(i, 16)));
    for (int j : g.neighbors(i)) ASSERT_LT(j, i);
  }
}

TEST(ReferenceGrid, NearestMatchesBruteForce) {
  const ReferenceGrid g(Window(0, 3, 0, 2), 150, 9);
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> ux(0, 3), uy(0, 2);
  for (int rep = 0; rep < 200; ++rep) {
    const Point p{ux(gen), uy(gen)};
    std::vector<std::pair<double, int>> all;
    for (int i = 0; i < g.size(); ++i) {
      const Point q = g.location(i);
      all.push_back({(q.x - p.x) * (q.x - p.x) + (q.y - p.y) * (q.y - p.y), i});
    }
    std::sort(all.begin(), all.end());
    std::vector<int> expect;
    for (int k = 0; k < g.m(); ++k) expect.push_back(all[k].second);
    ASSERT_EQ(g.nearest(p), expect);
    std::sort(expect.begin(), expect.end());
    ASSERT_EQ(g.nearest_set(p), expect);
  }
}

TEST(NngpPrior, FirstSiteIsStandardNormal) {
  const NngpPrior prior(make_grid(5, 100, 10), {1.0, 1.0, 1.95});
  EXPECT_TRUE(prior.grid_conditional(0).neighbors.empty());
  EXPECT_NEAR(prior.grid_conditional(0).sd, 1.0, 1e-9);
}

TEST(NngpPrior, SparseAndSequentialDensitiesAgree) {
  const NngpPrior prior(make_grid(6, 400, 16), {1.0, 0.7, 1.95});
  Engine eng(5);
  const Eigen::VectorXd x = prior.sample_grid(eng);
  EXPECT_NEAR(prior.log_density(x), prior.log_density_sparse(x), 1e-8);
}

TEST(NngpPrior, FullNeighborSetMatchesDenseGaussian) {
  const auto grid = make_grid(4, 64, 63);
  const CovarianceSpec spec{1.0, 1.3, 1.5};
  const NngpPrior prior(grid, spec);
  const int n = grid->size();
  Eigen::MatrixXd c(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      c(i, j) = cov(spec, grid->location(i), grid->location(j)) + (i == j ? NngpPrior::kJitter : 0.0);
  Engine eng(9);
  for (int rep = 0; rep < 5; ++rep) {
    const Eigen::VectorXd x = prior.sample_grid(eng);
    EXPECT_NEAR(prior.log_density(x), lt::dense_gaussian_log_density(c, x), 1e-8);
  }
}

TEST(NngpPrior, GridVarianceIsOne) {
  const NngpPrior prior(make_grid(5, 100, 16), {1.0, 1.0, 1.95});
  Engine eng(11);
  std::vector<double> a, b;
  for (int rep = 0; rep < 10000; ++rep) {
    const Eigen::VectorXd x = prior.sample_grid(eng);
    a.push_back(x(37));
    b.push_back(x(99));
  }
  EXPECT_LT(std::abs(lt::variance(a) - 1.0), 3 * lt::variance_se(a));
  EXPECT_LT(std::abs(lt::variance(b) - 1.0), 3 * lt::variance_se(b));
}

TEST(NngpPrior, ConditionalAtKnotInterpolates) {
  const NngpPrior prior(make_grid(5, 100, 16), {1.0, 1.0, 1.95});
  Engine eng(2);
  const Eigen::VectorXd x = prior.sample_grid(eng);
  const Point knot = prior.grid().location(42);
  const NeighborConditional c = prior.conditional_at(knot);
  EXPECT_LT(c.sd * c.sd, 1e-8);
  EXPECT_NEAR(c.mean(x), x(42), 1e-4);
}

TEST(NngpPrior, CachedConditionalMatchesDirectSolve) {
  // conditional_at reuses factors across translated neighbor sets; compare
  // with an explicit kriging solve.
  const auto grid = make_grid(5, 225, 12);
  const CovarianceSpec spec{1.0, 0.8, 1.95};
  const NngpPrior prior(grid, spec);
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0, 5);
  for (int rep = 0; rep < 50; ++rep) {
    const Point p{u(gen), u(gen)};
    const NeighborConditional c = prior.conditional_at(p);
    const auto n = static_cast<Eigen::Index>(c.neighbors.size());
    Eigen::MatrixXd k(n, n);
    Eigen::VectorXd kp(n);
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = 0; b < n; ++b)
        k(a, b) = cov(spec, grid->location(c.neighbors[a]), grid->location(c.neighbors[b])) +
                  (a == b ? NngpPrior::kJitter : 0.0);
      kp(a) = cov(spec, p, grid->location(c.neighbors[a]));
    }
    const Eigen::VectorXd w = k.ldlt().solve(kp);
    for (Eigen::Index a = 0; a < n; ++a) ASSERT_NEAR(c.weights[a], w(a), 1e-6);
    ASSERT_NEAR(c.sd * c.sd, 1.0 + NngpPrior::kJitter - kp.dot(w), 1e-9);
  }
}

TEST(LatentField, ExtendOrderDoesNotMatter) {
  const NngpPrior prior(make_grid(5, 100, 16), {1.0, 1.0, 1.95});
  Engine eng(3);
  LatentField f1, f2;
  f1.grid = f2.grid = prior.sample_grid(eng);
  const std::vector<Point> a{{0.3, 0.4}, {2.2, 1.1}}, b{{4.5, 4.5}};
  const StreamKey ka{1, StreamTag::kInit, 1, 0}, kb{1, StreamTag::kInit, 2, 0};
  extend_offgrid(f1, prior, a, Provenance::kData, ka);
  extend_offgrid(f1, prior, b, Provenance::kScratch, kb);
  extend_offgrid(f2, prior, b, Provenance::kScratch, kb);
  extend_offgrid(f2, prior, a, Provenance::kData, ka);
  EXPECT_EQ(f1.offgrid_values(), f2.offgrid_values());
}

TEST(LatentField, ExtendWithNothingIsNoOp) {
  const NngpPrior prior(make_grid(5, 100, 16), {1.0, 1.0, 1.95});
  Engine eng(3);
  LatentField f;
  f.grid = prior.sample_grid(eng);
  extend_offgrid(f, prior, {}, Provenance::kData, {});
  EXPECT_EQ(f.offgrid_count(), 0u);
}

TEST(LatentField, PruneScratch) {
  const NngpPrior prior(make_grid(5, 100, 16), {1.0, 1.0, 1.95});
  Engine eng(3);
  LatentField f;
  f.grid = prior.sample_grid(eng);
  EXPECT_EQ(prune_scratch(f), 0u);
  const std::vector<Point> s{{1, 1}, {2, 2}};
  extend_offgrid(f, prior, s, Provenance::kScratch, {2, StreamTag::kInit, 0, 0});
  const double before = f.scratch[0].value;
  EXPECT_EQ(prune(f, Provenance::kScratch), 2u);
  EXPECT_EQ(f.offgrid_count(), 0u);
  EXPECT_THROW(prune(f, Provenance::kData), std::invalid_argument);
  extend_offgrid(f, prior, s, Provenance::kScratch, {2, StreamTag::kInit, 0, 1});
  EXPECT_NE(f.scratch[0].value, before);
}

TEST(Pcn, LimitsOfStepSize) {
  const NngpPrior prior(make_grid(5, 100, 16), {1.0, 1.0, 1.95});
  Engine eng(4);
  LatentField f;
  f.grid = prior.sample_grid(eng);
  const std::vector<Point> s{{1.5, 2.5}};
  extend_offgrid(f, prior, s, Provenance::kData, {4, StreamTag::kInit, 0, 0});
  const Eigen::VectorXd eps = prior.sample_grid(eng);
  const FieldProposal tiny = pcn_propose_with_noise(f, eps, 1e-12, {4, StreamTag::kBetaOffgrid, 0, 0});
  EXPECT_LT((tiny.grid - f.grid).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(tiny.offgrid[0], f.data[0].value, 1e-10);
  const FieldProposal fresh = pcn_propose_with_noise(f, eps, 1.0, {4, StreamTag::kBetaOffgrid, 0, 0});
  EXPECT_EQ(fresh.grid, eps);
  EXPECT_THROW(pcn_propose_with_noise(f, eps, 0.0, {}), std::invalid_argument);
  EXPECT_THROW(pcn_propose_with_noise(f, eps, 1.5, {}), std::invalid_argument);
}
