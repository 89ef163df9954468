#include "lscp/nngp.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <shared_mutex>
#include <stdexcept>
#include <unordered_map>

#include <spdlog/spdlog.h>

#include "lscp/parallel.hpp"

namespace lscp {

namespace {

constexpr std::size_t kOffgridChunk = 256;
constexpr std::size_t kMaxCachedFactors = 1 << 16;

struct PatternHash {
  std::size_t operator()(const std::vector<int>& v) const {
    std::uint64_t h = 1469598103934665603ull;
    for (int x : v) {
      h ^= static_cast<std::uint32_t>(x);
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

struct Candidate {
  double d2;
  int index;
  bool operator<(const Candidate& o) const { return d2 < o.d2 || (d2 == o.d2 && index < o.index); }
};

}  // namespace

struct NngpPrior::FactorCache {
  std::shared_mutex mu;
  std::unordered_map<std::vector<int>, std::shared_ptr<const Eigen::MatrixXd>, PatternHash> map;
};

void CovarianceSpec::validate() const {
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) throw std::invalid_argument("sigma2 must be >= 0");
  if (!(tau2 > 0.0) || !std::isfinite(tau2)) throw std::invalid_argument("tau2 must be > 0");
  if (!(gamma > 0.0 && gamma <= 2.0)) throw std::invalid_argument("gamma must lie in (0, 2]");
}

double cov(const CovarianceSpec& spec, const Point& a, const Point& b) {
  return spec.at_distance(std::hypot(a.x - b.x, a.y - b.y));
}

ReferenceGrid::ReferenceGrid(const Window& window, int r, int m) : window_(window) {
  if (r < 4) throw std::invalid_argument("reference grid needs r >= 4");
  if (m < 1) throw std::invalid_argument("neighbor count m must be >= 1");
  const double aspect = window.width() / window.height();
  nx_ = std::max(2, static_cast<int>(std::lround(std::sqrt(r * aspect))));
  ny_ = std::max(2, static_cast<int>(std::lround(static_cast<double>(r) / nx_)));
  dx_ = window.width() / nx_;
  dy_ = window.height() / ny_;
  const int n = size();
  m_ = m;
  if (m_ >= n) {
    spdlog::warn("neighbor count m={} clamped to {} for a {}-site reference grid", m, n - 1, n);
    m_ = n - 1;
  }

  neighbors_.resize(n);
  std::vector<Candidate> cand;
  cand.reserve(n);
  for (int i = 1; i < n; ++i) {
    const int ix = i % nx_, iy = i / nx_;
    cand.clear();
    for (int j = 0; j < i; ++j) {
      const double ddx = (j % nx_ - ix) * dx_;
      const double ddy = (j / nx_ - iy) * dy_;
      cand.push_back({ddx * ddx + ddy * ddy, j});
    }
    const int keep = std::min(i, m_);
    std::partial_sort(cand.begin(), cand.begin() + keep, cand.end());
    auto& nb = neighbors_[i];
    nb.resize(keep);
    for (int k = 0; k < keep; ++k) nb[k] = cand[k].index;
  }
}

namespace {

// Fills `cand` so that its first min(m, size) entries are the m nearest
// lattice sites of p (ties by lower index), in unspecified order.
void nearest_candidates(const ReferenceGrid& g, const Point& p, std::vector<Candidate>& cand) {
  const Window& w = g.window();
  const int nx = g.nx(), ny = g.ny(), m = g.m();
  const double dx = g.dx(), dy = g.dy();
  const int cx = static_cast<int>(std::floor((p.x - w.x_min()) / dx - 0.5));
  const int cy = static_cast<int>(std::floor((p.y - w.y_min()) / dy - 0.5));
  const double hmin = std::min(dx, dy);
  int k = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(m)) / 2.0)) + 1;
  for (;;) {
    const int x0 = std::max(0, cx - k), x1 = std::min(nx - 1, cx + 1 + k);
    const int y0 = std::max(0, cy - k), y1 = std::min(ny - 1, cy + 1 + k);
    cand.clear();
    for (int iy = y0; iy <= y1; ++iy) {
      const double ddy = w.y_min() + (iy + 0.5) * dy - p.y;
      for (int ix = x0; ix <= x1; ++ix) {
        const double ddx = w.x_min() + (ix + 0.5) * dx - p.x;
        cand.push_back({ddx * ddx + ddy * ddy, iy * nx + ix});
      }
    }
    const bool covers_all = x0 == 0 && y0 == 0 && x1 == nx - 1 && y1 == ny - 1;
    if (static_cast<int>(cand.size()) > m) {
      std::nth_element(cand.begin(), cand.begin() + (m - 1), cand.end());
      // any site outside the searched block is farther than `reach`
      const double reach = k * hmin;
      if (covers_all || cand[m - 1].d2 <= reach * reach) return;
    } else if (covers_all) {
      return;
    }
    ++k;
  }
}

}  // namespace

std::vector<int> ReferenceGrid::nearest(const Point& p) const {
  thread_local std::vector<Candidate> cand;
  nearest_candidates(*this, p, cand);
  const int keep = std::min<int>(m_, static_cast<int>(cand.size()));
  std::sort(cand.begin(), cand.begin() + keep);
  std::vector<int> out(keep);
  for (int i = 0; i < keep; ++i) out[i] = cand[i].index;
  return out;
}

std::vector<int> ReferenceGrid::nearest_set(const Point& p) const {
  thread_local std::vector<Candidate> cand;
  nearest_candidates(*this, p, cand);
  const int keep = std::min<int>(m_, static_cast<int>(cand.size()));
  std::vector<int> out(keep);
  for (int i = 0; i < keep; ++i) out[i] = cand[i].index;
  std::sort(out.begin(), out.end());
  return out;
}

NngpPrior::NngpPrior(std::shared_ptr<const ReferenceGrid> grid, CovarianceSpec spec)
    : grid_(std::move(grid)), spec_(spec) {
  if (!grid_) throw std::invalid_argument("null reference grid");
  spec_.validate();
  const int nx = grid_->nx(), ny = grid_->ny();
  offset_cov_.resize(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      offset_cov_[static_cast<std::size_t>(j) * nx + i] =
          spec_.at_distance(std::hypot(i * grid_->dx(), j * grid_->dy()));
    }
  }
  factors_ = std::make_shared<FactorCache>();
  const int n = grid_->size();
  grid_cond_.resize(n);
  for (int i = 0; i < n; ++i) {
    grid_cond_[i] = solve_conditional(grid_->neighbors(i), grid_->location(i), i);
  }
}

double NngpPrior::grid_cov(int i, int j) const {
  const int nx = grid_->nx();
  const int di = std::abs(i % nx - j % nx);
  const int dj = std::abs(i / nx - j / nx);
  return offset_cov_[static_cast<std::size_t>(dj) * nx + di];
}

NeighborConditional NngpPrior::solve_conditional(std::span<const int> neighbors, const Point& p,
                                                 int self_index) const {
  NeighborConditional out;
  out.neighbors.assign(neighbors.begin(), neighbors.end());
  const auto n = static_cast<Eigen::Index>(neighbors.size());
  out.weights.assign(n, 0.0);
  if (spec_.sigma2 == 0.0) {
    out.sd = 0.0;
    return out;
  }
  if (n == 0) {
    out.sd = std::sqrt(spec_.sigma2 + kJitter);
    return out;
  }
  Eigen::MatrixXd k_nn(n, n);
  Eigen::VectorXd k_n(n);
  for (Eigen::Index a = 0; a < n; ++a) {
    k_nn(a, a) = spec_.sigma2 + kJitter;
    for (Eigen::Index b = 0; b < a; ++b) {
      k_nn(a, b) = k_nn(b, a) = grid_cov(neighbors[a], neighbors[b]);
    }
    k_n(a) = self_index >= 0 ? grid_cov(self_index, neighbors[a])
                             : cov(spec_, p, grid_->location(neighbors[a]));
  }
  Eigen::LLT<Eigen::MatrixXd> llt(k_nn);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("local NNGP covariance is not positive definite after jitter");
  }
  const Eigen::VectorXd w = llt.solve(k_n);
  const double var = spec_.sigma2 + kJitter - k_n.dot(w);
  out.sd = std::sqrt(std::max(var, 0.0));
  for (Eigen::Index a = 0; a < n; ++a) out.weights[a] = w(a);
  return out;
}

std::shared_ptr<const Eigen::MatrixXd> NngpPrior::neighbor_factor(std::span<const int> sorted) const {
  const int nx = grid_->nx();
  std::vector<int> key;
  key.reserve(2 * sorted.size());
  for (int j : sorted) {
    key.push_back(j % nx - sorted[0] % nx);
    key.push_back(j / nx - sorted[0] / nx);
  }
  {
    std::shared_lock lock(factors_->mu);
    auto it = factors_->map.find(key);
    if (it != factors_->map.end()) return it->second;
  }
  const auto n = static_cast<Eigen::Index>(sorted.size());
  Eigen::MatrixXd k_nn(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    k_nn(a, a) = spec_.sigma2 + kJitter;
    for (Eigen::Index b = 0; b < a; ++b) k_nn(a, b) = k_nn(b, a) = grid_cov(sorted[a], sorted[b]);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(k_nn);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("local NNGP covariance is not positive definite after jitter");
  }
  auto factor = std::make_shared<const Eigen::MatrixXd>(llt.matrixL());
  std::unique_lock lock(factors_->mu);
  if (factors_->map.size() < kMaxCachedFactors) factors_->map.emplace(std::move(key), factor);
  return factor;
}

NeighborConditional NngpPrior::conditional_at(const Point& p) const {
  std::vector<int> nb = grid_->nearest_set(p);
  if (spec_.sigma2 == 0.0 || nb.empty()) return solve_conditional(nb, p, -1);
  const auto factor = neighbor_factor(nb);
  const auto n = static_cast<Eigen::Index>(nb.size());
  Eigen::VectorXd k_n(n);
  const double half_gamma = 0.5 * spec_.gamma;
  for (Eigen::Index a = 0; a < n; ++a) {
    const Point q = grid_->location(nb[a]);
    const double d2 = (q.x - p.x) * (q.x - p.x) + (q.y - p.y) * (q.y - p.y);
    k_n(a) = d2 == 0.0 ? spec_.sigma2 : spec_.sigma2 * std::exp(-std::pow(d2, half_gamma) / (2.0 * spec_.tau2));
  }
  const auto L = factor->triangularView<Eigen::Lower>();
  const Eigen::VectorXd y = L.solve(k_n);
  const Eigen::VectorXd w = L.transpose().solve(y);
  NeighborConditional out;
  out.neighbors = std::move(nb);
  out.weights.assign(w.data(), w.data() + n);
  out.sd = std::sqrt(std::max(spec_.sigma2 + kJitter - y.squaredNorm(), 0.0));
  return out;
}

Eigen::VectorXd NngpPrior::sample_grid(Engine& eng) const {
  const int n = grid_->size();
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) {
    v(i) = conditional_draw(grid_cond_[i], v, std_normal(eng));
  }
  return v;
}

double NngpPrior::log_density(const Eigen::VectorXd& grid_values) const {
  const double log2pi = std::log(2.0 * std::numbers::pi);
  double lp = 0.0;
  for (int i = 0; i < grid_->size(); ++i) {
    const auto& c = grid_cond_[i];
    const double r = (grid_values(i) - c.mean(grid_values)) / c.sd;
    lp += -0.5 * log2pi - std::log(c.sd) - 0.5 * r * r;
  }
  return lp;
}

Eigen::SparseMatrix<double> NngpPrior::b_matrix() const {
  const int n = grid_->size();
  std::vector<Eigen::Triplet<double>> trips;
  for (int i = 0; i < n; ++i) {
    const auto& c = grid_cond_[i];
    for (std::size_t j = 0; j < c.neighbors.size(); ++j) trips.emplace_back(i, c.neighbors[j], c.weights[j]);
  }
  Eigen::SparseMatrix<double> b(n, n);
  b.setFromTriplets(trips.begin(), trips.end());
  return b;
}

Eigen::VectorXd NngpPrior::f_vector() const {
  Eigen::VectorXd f(grid_->size());
  for (int i = 0; i < grid_->size(); ++i) f(i) = grid_cond_[i].sd * grid_cond_[i].sd;
  return f;
}

double NngpPrior::log_density_sparse(const Eigen::VectorXd& grid_values) const {
  const Eigen::SparseMatrix<double> b = b_matrix();
  const Eigen::VectorXd f = f_vector();
  const Eigen::VectorXd u = grid_values - b * grid_values;
  const double quad = (u.array().square() / f.array()).sum();
  const double logdet_f = f.array().log().sum();
  const double n = static_cast<double>(grid_->size());
  return -0.5 * n * std::log(2.0 * std::numbers::pi) - 0.5 * logdet_f - 0.5 * quad;
}

std::size_t LatentField::offgrid_count() const {
  std::size_t n = data.size() + scratch.size();
  for (const auto& b : aux) n += b.size();
  return n;
}

std::vector<double> LatentField::offgrid_values() const {
  std::vector<double> v;
  v.reserve(offgrid_count());
  for_each_site([&v](const OffgridSite& s) { v.push_back(s.value); });
  return v;
}

void LatentField::set_offgrid_values(std::span<const double> values) {
  if (values.size() != offgrid_count()) throw std::invalid_argument("off-grid value count mismatch");
  std::size_t i = 0;
  for (auto& s : data) s.value = values[i++];
  for (auto& b : aux)
    for (auto& s : b) s.value = values[i++];
  for (auto& s : scratch) s.value = values[i++];
}

std::vector<OffgridSite> draw_offgrid(const NngpPrior& prior, const Eigen::VectorXd& grid,
                                      std::span<const Point> sites, const StreamKey& key) {
  std::vector<OffgridSite> out(sites.size());
  parallel_chunks(sites.size(), kOffgridChunk, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    Engine eng = key.at(chunk);
    for (std::size_t i = begin; i < end; ++i) {
      OffgridSite& s = out[i];
      s.loc = sites[i];
      s.cond = prior.conditional_at(sites[i]);
      s.value = conditional_draw(s.cond, grid, std_normal(eng));
    }
  });
  return out;
}

void extend_offgrid(LatentField& field, const NngpPrior& prior, std::span<const Point> sites,
                    Provenance where, const StreamKey& key) {
  if (sites.empty()) return;
  std::vector<OffgridSite> fresh = draw_offgrid(prior, field.grid, sites, key);
  std::vector<OffgridSite>* target = nullptr;
  switch (where) {
    case Provenance::kData: target = &field.data; break;
    case Provenance::kScratch: target = &field.scratch; break;
    case Provenance::kAux:
      if (field.aux.empty()) field.aux.resize(1);
      target = &field.aux.front();
      break;
    case Provenance::kGrid: throw std::invalid_argument("grid sites are fixed by the reference lattice");
  }
  target->insert(target->end(), std::make_move_iterator(fresh.begin()), std::make_move_iterator(fresh.end()));
}

FieldProposal pcn_propose_with_noise(const LatentField& field, const Eigen::VectorXd& eps_grid,
                                     double varsigma, const StreamKey& offgrid_key) {
  if (!(varsigma > 0.0 && varsigma <= 1.0)) throw std::invalid_argument("pCN step must lie in (0, 1]");
  const double keep = std::sqrt(1.0 - varsigma * varsigma);
  FieldProposal out;
  out.grid = keep * field.grid + varsigma * eps_grid;

  std::vector<const OffgridSite*> sites;
  sites.reserve(field.offgrid_count());
  field.for_each_site([&sites](const OffgridSite& s) { sites.push_back(&s); });
  out.offgrid.resize(sites.size());
  parallel_chunks(sites.size(), kOffgridChunk, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    Engine eng = offgrid_key.at(chunk);
    for (std::size_t i = begin; i < end; ++i) {
      const OffgridSite& s = *sites[i];
      const double eps = conditional_draw(s.cond, eps_grid, std_normal(eng));
      out.offgrid[i] = keep * s.value + varsigma * eps;
    }
  });
  return out;
}

FieldProposal pcn_propose(const LatentField& field, const NngpPrior& prior, double varsigma,
                          Engine& grid_engine, const StreamKey& offgrid_key) {
  if (!(varsigma > 0.0 && varsigma <= 1.0)) throw std::invalid_argument("pCN step must lie in (0, 1]");
  const Eigen::VectorXd eps = prior.sample_grid(grid_engine);
  return pcn_propose_with_noise(field, eps, varsigma, offgrid_key);
}

void apply_proposal(LatentField& field, FieldProposal&& proposal) {
  field.grid = std::move(proposal.grid);
  field.set_offgrid_values(proposal.offgrid);
}

std::size_t prune_scratch(LatentField& field) {
  const std::size_t n = field.scratch.size();
  field.scratch.clear();
  return n;
}

std::size_t prune(LatentField& field, Provenance which) {
  switch (which) {
    case Provenance::kScratch: return prune_scratch(field);
    case Provenance::kAux: {
      std::size_t n = 0;
      for (auto& b : field.aux) {
        n += b.size();
        b.clear();
      }
      return n;
    }
    case Provenance::kGrid:
    case Provenance::kData: break;
  }
  throw std::invalid_argument("grid and data sites cannot be pruned");
}

}  // namespace lscp
