#pragma once

#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lscp/nngp.hpp"
#include "lscp/priors.hpp"

namespace lscp {

/// Temporal model settings: innovation covariance (xi2, varrho2) of the
/// lattice random walk and the prior linking rate levels across times.
struct TemporalSpec {
  enum class RatePrior { kIndependent, kNgar1 };

  double xi2 = 1.0;
  double varrho2 = 0.5;
  RatePrior rate_prior = RatePrior::kIndependent;
  /// NGAR1 persistence and precision per level (used with kNgar1).
  std::vector<double> w;
  std::vector<double> a;

  /// Checks xi2 <= sigma2 and varrho2 >= tau2 against the static spec.
  void validate(const CovarianceSpec& base, int K) const;
  CovarianceSpec innovation(const CovarianceSpec& base) const;
};

/// Dynamic NNGP: beta_0 from the static NNGP on the lattice, then
/// beta_t = beta_{t-1} + zeta_t on the lattice with zeta_t from an
/// innovation NNGP. Off-grid values at time t depend only on time-t lattice
/// values through the static conditional.
class DynamicPrior {
 public:
  /// `innovation` may be null, in which case only a single time is valid.
  DynamicPrior(std::shared_ptr<const NngpPrior> base, std::shared_ptr<const NngpPrior> innovation);

  const NngpPrior& base() const { return *base_; }
  const NngpPrior* innovation() const { return innovation_.get(); }
  std::shared_ptr<const NngpPrior> base_ptr() const { return base_; }
  std::shared_ptr<const NngpPrior> innovation_ptr() const { return innovation_; }

  /// Lattice values for `times` consecutive times; time t uses key.at(t).
  std::vector<Eigen::VectorXd> sample(int times, const StreamKey& key) const;
  /// Continues a walk from `last` for `steps` further times.
  std::vector<Eigen::VectorXd> propagate(const Eigen::VectorXd& last, int steps, const StreamKey& key) const;

 private:
  std::shared_ptr<const NngpPrior> base_;
  std::shared_ptr<const NngpPrior> innovation_;
};

/// One latent field per time sharing a reference lattice.
using DynamicField = std::vector<LatentField>;

DynamicField sample_dynamic_prior(const DynamicPrior& prior, int T, const StreamKey& key);

/// Adds time-t off-grid sites drawn from the static conditional given the
/// time-t lattice.
void extend_dynamic_offgrid(DynamicField& field, const DynamicPrior& prior, int t,
                            std::span<const Point> sites, Provenance where, const StreamKey& key);

/// Spatiotemporal pCN: eps_{0..T} from the dynamic prior (lattice keys
/// grid_key.at(t)), off-grid eps from each time's static conditionals
/// (StreamKey offgrid_key with b = t).
std::vector<FieldProposal> st_pcn_propose(const DynamicField& field, const DynamicPrior& prior,
                                          double varsigma, const StreamKey& grid_key,
                                          const StreamKey& offgrid_key);

}  // namespace lscp
