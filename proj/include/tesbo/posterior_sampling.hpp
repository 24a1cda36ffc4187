#ifndef TESBO_POSTERIOR_SAMPLING_HPP
#define TESBO_POSTERIOR_SAMPLING_HPP

#include "tesbo/gp.hpp"
#include "tesbo/types.hpp"

namespace tesbo {

// f(x) = amplitude · Σ_i weights_i cos(frequencies_i · x + phases_i)
// Deterministic and smooth once drawn.
class FeatureFunctionSample {
 public:
  FeatureFunctionSample() = default;
  FeatureFunctionSample(Matrix frequencies, Vector phases, Vector weights, double amplitude);

  const Matrix& frequencies() const { return frequencies_; }
  const Vector& phases() const { return phases_; }
  const Vector& weights() const { return weights_; }
  double amplitude() const { return amplitude_; }
  Eigen::Index feature_count() const { return phases_.size(); }
  Eigen::Index dim() const { return frequencies_.cols(); }

  double value(const Eigen::Ref<const Vector>& x, Vector* gradient = nullptr) const;
  Vector values(const PointSet& points) const;
  // amplitude · cos(X Wᵀ + b), one row per point
  Matrix features(const PointSet& points) const;

 private:
  Matrix frequencies_;
  Vector phases_;
  Vector weights_;
  double amplitude_ = 0.0;
};

// Random SE-kernel features with the weight posterior of the induced Bayesian
// linear model given the posterior's data and noise.
FeatureFunctionSample sample_posterior_function(const GPPosterior& posterior, int feature_count, Rng& rng);

struct SampledMaximum {
  Vector point;
  double value = 0.0;
};

SampledMaximum maximize_sampled_function(const FeatureFunctionSample& sample, const Domain& domain,
                                         int restarts, Rng& rng, int candidate_pool = 1000);

struct TrustedSet {
  PointSet points;
  Vector probabilities;
  Vector probability_stderr;

  Eigen::Index size() const { return points.rows(); }
  Vector point(Eigen::Index i) const { return points.row(i).transpose(); }
};

struct TrustedSetConfig {
  int feature_count = 1024;
  int restarts = 10;
  int candidate_pool = 1000;
  int mc_samples = 10000;
  double dedup_fraction = 1e-3;  // × smallest domain width
};

TrustedSet build_trusted_set(const GPPosterior& posterior, int target_size, const Domain& domain,
                             const TrustedSetConfig& config, Rng& rng);

// J with J_ii = 1 and J_ij = -1 (i ≠ j) in the column of `owner`. The owner row
// is not a comparison; the orthant event uses only rows i ≠ owner.
Matrix comparison_matrix(Eigen::Index size, Eigen::Index owner);

struct OrthantEstimate {
  Vector probabilities;
  Vector stderr;
};

// P(f_i is the strict maximum) for f ~ N(mean, cov), one shared pass of
// `draws` joint samples. Ties go to the lowest index.
OrthantEstimate orthant_probabilities(const Eigen::Ref<const Vector>& mean,
                                      const Eigen::Ref<const Matrix>& cov, int draws, Rng& rng);

struct ProbabilityEstimate {
  double value = 0.0;
  double stderr = 0.0;
};

ProbabilityEstimate trusted_prob(const GPPosterior& posterior, const PointSet& points,
                                 Eigen::Index owner, int mc_samples, Rng& rng);

}  // namespace tesbo

#endif  // TESBO_POSTERIOR_SAMPLING_HPP
