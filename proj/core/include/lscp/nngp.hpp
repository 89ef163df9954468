#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "lscp/covariance.hpp"
#include "lscp/geometry.hpp"
#include "lscp/random.hpp"

namespace lscp {

/// Regular lattice of reference sites over a window, enumerated row-major
/// (index = iy * nx + ix), with each site's nearest earlier neighbors.
class ReferenceGrid {
 public:
  /// Builds an nx-by-ny lattice of cell centres with nx * ny close to r
  /// (exactly r when r is a perfect square and the window is square).
  /// m >= r is clamped to r - 1 with a warning. Throws std::invalid_argument
  /// for r < 4 or m < 1.
  ReferenceGrid(const Window& window, int r, int m);

  const Window& window() const { return window_; }
  int size() const { return nx_ * ny_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double dx() const { return dx_; }
  double dy() const { return dy_; }
  /// Effective neighbor count after clamping.
  int m() const { return m_; }

  Point location(int i) const {
    return {window_.x_min() + (i % nx_ + 0.5) * dx_, window_.y_min() + (i / nx_ + 0.5) * dy_};
  }

  /// Up to m nearest earlier lattice indices of site i, closest first, ties
  /// broken by lower index. |neighbors(i)| = min(i, m) (zero-based i).
  const std::vector<int>& neighbors(int i) const { return neighbors_[i]; }

  /// The m nearest lattice sites of an arbitrary location, closest first,
  /// ties broken by lower index.
  std::vector<int> nearest(const Point& p) const;
  /// The same set as nearest(p) in increasing index order.
  std::vector<int> nearest_set(const Point& p) const;

 private:
  Window window_;
  int nx_ = 0;
  int ny_ = 0;
  double dx_ = 0.0;
  double dy_ = 0.0;
  int m_ = 0;
  std::vector<std::vector<int>> neighbors_;
};

/// Kriging coefficients of one site given its neighbor set:
/// beta(s) | neighbors ~ N(weights . beta_N, sd^2).
struct NeighborConditional {
  std::vector<int> neighbors;
  std::vector<double> weights;
  double sd = 0.0;

  double mean(const Eigen::VectorXd& grid) const {
    double mu = 0.0;
    for (std::size_t j = 0; j < neighbors.size(); ++j) mu += weights[j] * grid[neighbors[j]];
    return mu;
  }
};

/// NNGP built from a parent covariance on a reference lattice. Grid
/// conditionals are precomputed; off-grid conditionals are computed on
/// demand from the m nearest lattice sites. The parent carries a nugget of
/// kJitter at every location, so with m = r - 1 the lattice density is
/// exactly that of the dense Gaussian with covariance C + kJitter I.
class NngpPrior {
 public:
  static constexpr double kJitter = 1e-10;

  NngpPrior(std::shared_ptr<const ReferenceGrid> grid, CovarianceSpec spec);

  const ReferenceGrid& grid() const { return *grid_; }
  std::shared_ptr<const ReferenceGrid> grid_ptr() const { return grid_; }
  const CovarianceSpec& spec() const { return spec_; }

  const NeighborConditional& grid_conditional(int i) const { return grid_cond_[i]; }
  NeighborConditional conditional_at(const Point& p) const;

  /// Sequential draw over the lattice ordering.
  Eigen::VectorXd sample_grid(Engine& eng) const;

  /// Log-density as the sum of sequential Gaussian conditionals.
  double log_density(const Eigen::VectorXd& grid_values) const;
  /// Same density through the sparse factorization
  /// Q = (I - B)^T F^{-1} (I - B).
  double log_density_sparse(const Eigen::VectorXd& grid_values) const;
  /// Strictly lower-triangular B of the factorization.
  Eigen::SparseMatrix<double> b_matrix() const;
  Eigen::VectorXd f_vector() const;

 private:
  NeighborConditional solve_conditional(std::span<const int> neighbors, const Point& p,
                                        int self_index) const;
  double grid_cov(int i, int j) const;
  /// Lower Cholesky factor of the covariance among lattice sites given in
  /// increasing index order. Factors depend only on the offset pattern of
  /// the sites, so they are shared between translated neighbor sets.
  std::shared_ptr<const Eigen::MatrixXd> neighbor_factor(std::span<const int> sorted) const;

  struct FactorCache;

  std::shared_ptr<const ReferenceGrid> grid_;
  CovarianceSpec spec_;
  std::vector<double> offset_cov_;  // covariance by lattice offset (|di|, |dj|)
  std::vector<NeighborConditional> grid_cond_;
  std::shared_ptr<FactorCache> factors_;
};

/// Draws one value from a conditional given grid values and a standard
/// normal variate.
inline double conditional_draw(const NeighborConditional& c, const Eigen::VectorXd& grid,
                               double z) {
  return c.mean(grid) + c.sd * z;
}

enum class Provenance { kGrid, kData, kAux, kScratch };

struct OffgridSite {
  Point loc;
  double value = 0.0;
  NeighborConditional cond;
};

/// Retrospectively unveiled values of the latent process: the full lattice
/// plus every off-grid location sampled so far, grouped by provenance.
/// Off-grid values depend on the lattice only, never on each other.
struct LatentField {
  Eigen::VectorXd grid;
  std::vector<OffgridSite> data;
  std::vector<std::vector<OffgridSite>> aux;  // one bucket per auxiliary square
  std::vector<OffgridSite> scratch;

  std::size_t offgrid_count() const;
  /// Off-grid values in canonical order: data, aux buckets, scratch.
  std::vector<double> offgrid_values() const;
  void set_offgrid_values(std::span<const double> values);
  /// Applies fn to each off-grid site in canonical order.
  template <class Fn>
  void for_each_site(Fn&& fn) const {
    for (const auto& s : data) fn(s);
    for (const auto& bucket : aux)
      for (const auto& s : bucket) fn(s);
    for (const auto& s : scratch) fn(s);
  }
};

/// Draws off-grid sites conditionally on grid values. Each fixed-size chunk
/// of sites uses stream key.at(chunk), so output is independent of the
/// worker count.
std::vector<OffgridSite> draw_offgrid(const NngpPrior& prior, const Eigen::VectorXd& grid,
                                      std::span<const Point> sites, const StreamKey& key);

/// Appends new data or scratch sites. Existing sites are untouched.
void extend_offgrid(LatentField& field, const NngpPrior& prior, std::span<const Point> sites,
                    Provenance where, const StreamKey& key);

/// Proposed values at every retained location.
struct FieldProposal {
  Eigen::VectorXd grid;
  std::vector<double> offgrid;  // canonical order of LatentField
};

/// pCN move sqrt(1 - s^2) beta + s eps given a prior draw eps on the grid;
/// eps at off-grid sites is drawn from each site's cached conditional.
/// Throws std::invalid_argument unless 0 < varsigma <= 1.
FieldProposal pcn_propose_with_noise(const LatentField& field, const Eigen::VectorXd& eps_grid,
                                     double varsigma, const StreamKey& offgrid_key);

/// pCN move with eps drawn from `prior` (grid from grid_engine).
FieldProposal pcn_propose(const LatentField& field, const NngpPrior& prior, double varsigma,
                          Engine& grid_engine, const StreamKey& offgrid_key);

void apply_proposal(LatentField& field, FieldProposal&& proposal);

/// Deletes all scratch sites. Returns the number removed (0 means no-op).
std::size_t prune_scratch(LatentField& field);

/// Deletes every site of the given provenance. Grid and data sites cannot
/// be pruned (std::invalid_argument).
std::size_t prune(LatentField& field, Provenance which);

}  // namespace lscp
