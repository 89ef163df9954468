#include "lscp/dynamic_prior.hpp"

#include <stdexcept>

namespace lscp {

void TemporalSpec::validate(const CovarianceSpec& base, int K) const {
  if (!(xi2 >= 0.0)) throw std::invalid_argument("xi2 must be >= 0");
  if (!(varrho2 > 0.0)) throw std::invalid_argument("varrho2 must be > 0");
  // non-strict on purpose: xi2 = sigma2 is an admissible setting
  if (xi2 > base.sigma2) throw std::invalid_argument("xi2 must not exceed sigma2");
  if (varrho2 < base.tau2) throw std::invalid_argument("varrho2 must be at least tau2");
  if (rate_prior == RatePrior::kNgar1) {
    if (static_cast<int>(w.size()) != K || static_cast<int>(a.size()) != K) {
      throw std::invalid_argument("NGAR1 w and a need one entry per level");
    }
    for (int k = 0; k < K; ++k) {
      if (!(w[k] > 0.0 && w[k] < 1.0)) throw std::invalid_argument("NGAR1 w must lie in (0, 1)");
      if (!(a[k] > 0.0)) throw std::invalid_argument("NGAR1 a must be positive");
    }
  }
}

CovarianceSpec TemporalSpec::innovation(const CovarianceSpec& base) const {
  return CovarianceSpec{xi2, varrho2, base.gamma};
}

DynamicPrior::DynamicPrior(std::shared_ptr<const NngpPrior> base, std::shared_ptr<const NngpPrior> innovation)
    : base_(std::move(base)), innovation_(std::move(innovation)) {
  if (!base_) throw std::invalid_argument("dynamic prior needs a base NNGP");
  if (innovation_ && innovation_->grid_ptr() != base_->grid_ptr() &&
      innovation_->grid().size() != base_->grid().size()) {
    throw std::invalid_argument("innovation NNGP must share the reference lattice");
  }
}

std::vector<Eigen::VectorXd> DynamicPrior::sample(int times, const StreamKey& key) const {
  if (times < 1) throw std::invalid_argument("need at least one time");
  std::vector<Eigen::VectorXd> out;
  out.reserve(times);
  Engine e0 = key.at(0);
  out.push_back(base_->sample_grid(e0));
  for (int t = 1; t < times; ++t) {
    if (!innovation_) throw std::logic_error("dynamic sampling requires an innovation NNGP");
    Engine et = key.at(static_cast<std::uint64_t>(t));
    out.push_back(out.back() + innovation_->sample_grid(et));
  }
  return out;
}

std::vector<Eigen::VectorXd> DynamicPrior::propagate(const Eigen::VectorXd& last, int steps,
                                                     const StreamKey& key) const {
  if (!innovation_) throw std::logic_error("propagation requires an innovation NNGP");
  std::vector<Eigen::VectorXd> out;
  Eigen::VectorXd cur = last;
  for (int s = 0; s < steps; ++s) {
    Engine e = key.at(static_cast<std::uint64_t>(s));
    cur = cur + innovation_->sample_grid(e);
    out.push_back(cur);
  }
  return out;
}

DynamicField sample_dynamic_prior(const DynamicPrior& prior, int T, const StreamKey& key) {
  if (T < 0) throw std::invalid_argument("T must be >= 0");
  auto grids = prior.sample(T + 1, key);
  DynamicField field(T + 1);
  for (int t = 0; t <= T; ++t) field[t].grid = std::move(grids[t]);
  return field;
}

void extend_dynamic_offgrid(DynamicField& field, const DynamicPrior& prior, int t,
                            std::span<const Point> sites, Provenance where, const StreamKey& key) {
  if (t < 0 || t >= static_cast<int>(field.size())) throw std::out_of_range("time index out of range");
  extend_offgrid(field[t], prior.base(), sites, where, key);
}

std::vector<FieldProposal> st_pcn_propose(const DynamicField& field, const DynamicPrior& prior,
                                          double varsigma, const StreamKey& grid_key,
                                          const StreamKey& offgrid_key) {
  const int times = static_cast<int>(field.size());
  const auto eps = prior.sample(times, grid_key);
  std::vector<FieldProposal> out;
  out.reserve(times);
  for (int t = 0; t < times; ++t) {
    StreamKey k = offgrid_key;
    k.b = static_cast<std::uint64_t>(t);
    out.push_back(pcn_propose_with_noise(field[t], eps[t], varsigma, k));
  }
  return out;
}

}  // namespace lscp
