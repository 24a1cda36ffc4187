#ifndef TESBO_TES_EP_HPP
#define TESBO_TES_EP_HPP

#include "tesbo/acquisition.hpp"
#include "tesbo/gp.hpp"
#include "tesbo/posterior_sampling.hpp"
#include "tesbo/projection.hpp"

#include <string>
#include <vector>

namespace tesbo {

// Gaussian site N(cᵀf; site_mean, site_variance) standing in for the step
// factor I(cᵀf ≥ 0), with c = e_owner − e_other. Stored in natural form.
struct EPSite {
  Eigen::Index other = 0;
  double precision = 0.0;     // 1 / site_variance
  double scaled_mean = 0.0;   // site_mean / site_variance

  double site_variance() const;
  double site_mean() const;
  Vector constraint(Eigen::Index size, Eigen::Index owner) const;
};

struct EPConfig {
  int max_iterations = 50;
  double tolerance = 1e-6;
  double damping = 0.8;  // weight on the proposed site parameters
  double min_site_variance = 1e-10;
};

struct EPApprox {
  Eigen::Index owner = 0;
  Vector mean;
  Matrix cov;
  std::vector<EPSite> sites;
  int iterations = 0;
  bool converged = false;
  int skipped_updates = 0;  // negative-cavity events
  std::vector<std::string> events;
};

class EPDivergence : public NumericError {
 public:
  EPDivergence(const std::string& what, EPApprox last_stable)
      : NumericError(what), last_stable_(std::move(last_stable)) {}
  const EPApprox& last_stable() const { return last_stable_; }

 private:
  EPApprox last_stable_;
};

// Approximates N(f; prior_mean, prior_cov) restricted to {f_owner ≥ f_i ∀ i}.
EPApprox ep_approximate(const Eigen::Ref<const Vector>& prior_mean, const Eigen::Ref<const Matrix>& prior_cov,
                        Eigen::Index owner, const EPConfig& config = {});
EPApprox ep_approximate(const GPPosterior& posterior, const TrustedSet& trusted, Eigen::Index owner,
                        const EPConfig& config = {});

// Observation predictive at the batch: mean Aᵀμ_ep + b, covariance
// base + Aᵀ Σ_ep A + σ_n² I.
Prediction q_ep_predictive(const EPApprox& ep, const PredictiveProjection& proj, double noise_variance);

struct EpStateConfig {
  EPConfig ep;
  int quadrature_order = 64;
};

// Everything α_ep needs for one BO iteration.
struct EpState {
  GPPosterior posterior;
  TrustedSet trusted;  // zero-probability points removed, probabilities normalized
  std::vector<EPApprox> approximations;
  AugmentedFactor factor;
  int quadrature_order = 64;
  std::vector<std::string> notes;

  Eigen::Index trusted_size() const { return trusted.size(); }
};

EpState build_ep_state(const GPPosterior& posterior, const TrustedSet& trusted, const EpStateConfig& config = {});

// Single point: Gauss–Hermite cross-entropy, stderr is the gap to the
// half-order rule. Batches: Monte Carlo with `y_samples` draws shared across
// mixture components.
AcquisitionEstimate alpha_ep(const EpState& state, const PointSet& batch, int y_samples, Rng& rng,
                             Matrix* gradient = nullptr);

class TesEpAcquisition : public StochasticAcquisition {
 public:
  explicit TesEpAcquisition(EpState state) : state_(std::move(state)) {}
  Eigen::Index dim() const override { return state_.posterior.dim(); }
  std::string name() const override { return "tes_ep"; }
  AcquisitionEstimate evaluate(const PointSet& batch, std::uint64_t seed, int y_samples,
                               Matrix* gradient) const override;
  const EpState& state() const { return state_; }

 private:
  EpState state_;
};

}  // namespace tesbo

#endif  // TESBO_TES_EP_HPP
