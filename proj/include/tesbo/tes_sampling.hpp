#ifndef TESBO_TES_SAMPLING_HPP
#define TESBO_TES_SAMPLING_HPP

#include "tesbo/acquisition.hpp"
#include "tesbo/gp.hpp"
#include "tesbo/posterior_sampling.hpp"
#include "tesbo/projection.hpp"

#include <optional>
#include <string>
#include <vector>

namespace tesbo {

// Draws of f_X⋆ conditioned on `owner` being the maximizer. One sample per row.
struct ConditionedSampleSet {
  Eigen::Index owner = 0;
  Matrix samples;
  Vector weights;
  long draws = 0;  // joint proposals consumed to build the set
  std::optional<std::string> warning;

  Eigen::Index size() const { return samples.rows(); }
  Vector normalized_weights() const { return weights / weights.sum(); }
  double effective_sample_size() const;
};

class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// f ~ N(mean, cov) kept when f_owner is the strict maximum. Throws SamplingError
// when fewer than `accepted` draws survive within `max_draws`.
ConditionedSampleSet rejection_sample(const Eigen::Ref<const Vector>& mean, const Eigen::Ref<const Matrix>& cov,
                                      Eigen::Index owner, int accepted, int max_draws, Rng& rng);
ConditionedSampleSet rejection_sample(const GPPosterior& posterior, const TrustedSet& trusted, Eigen::Index owner,
                                      int accepted, int max_draws, Rng& rng);

// Two steps: f_∖⋆ from its marginal, then f_owner from its conditional
// truncated below at f⁺ = max f_∖⋆, weighted by P(f_owner ≥ f⁺ | f_∖⋆).
ConditionedSampleSet importance_sample(const Eigen::Ref<const Vector>& mean, const Eigen::Ref<const Matrix>& cov,
                                       Eigen::Index owner, int count, Rng& rng);
ConditionedSampleSet importance_sample(const GPPosterior& posterior, const TrustedSet& trusted, Eigen::Index owner,
                                       int count, Rng& rng);

struct GroupedSamples {
  std::vector<ConditionedSampleSet> sets;  // owners index into the retained points
  std::vector<Eigen::Index> retained;      // original indices of non-empty groups
  Vector fractions;                        // group size / total draws, over retained
  Vector fraction_stderr;
};

GroupedSamples group_by_maximizer(const Eigen::Ref<const Vector>& mean, const Eigen::Ref<const Matrix>& cov,
                                  int total_draws, Rng& rng);

struct GroupedTrustedSet {
  GroupedSamples groups;
  TrustedSet trusted;  // retained points, probabilities = group fractions
};
GroupedTrustedSet group_by_maximizer(const GPPosterior& posterior, const TrustedSet& trusted, int total_draws,
                                     Rng& rng);

enum class ConditioningMethod { grouping, rejection, importance };
enum class ProbabilitySource { group_fractions, orthant };

struct SpConfig {
  ConditioningMethod method = ConditioningMethod::grouping;
  ProbabilitySource probabilities = ProbabilitySource::group_fractions;
  int total_draws = 2000;       // grouping pass
  int min_group_size = 20;      // smaller groups are replaced by importance samples
  int samples_per_owner = 200;  // rejection / importance set size
  int max_rejection_draws = 1000000;
};

// Everything α_sp needs for one BO iteration.
struct SpState {
  GPPosterior posterior;
  TrustedSet trusted;
  std::vector<ConditionedSampleSet> sets;  // one per trusted point, same order
  AugmentedFactor factor;
  std::vector<std::string> notes;

  Eigen::Index trusted_size() const { return trusted.size(); }
};

SpState build_sp_state(const GPPosterior& posterior, const TrustedSet& trusted, const SpConfig& config, Rng& rng);

struct MixtureLogDensity {
  Vector per_owner;  // log q_sp(y | y_D, x⋆)
  double total = 0.0;  // log q_sp(y | y_D)
};

// `y` holds one observation per batch point.
MixtureLogDensity q_sp_log_density(const SpState& state, const PointSet& batch, const Eigen::Ref<const Vector>& y);

AcquisitionEstimate alpha_sp(const SpState& state, const PointSet& batch, int y_samples, Rng& rng,
                             Matrix* gradient = nullptr);

class TesSpAcquisition : public StochasticAcquisition {
 public:
  explicit TesSpAcquisition(SpState state) : state_(std::move(state)) {}
  Eigen::Index dim() const override { return state_.posterior.dim(); }
  std::string name() const override { return "tes_sp"; }
  AcquisitionEstimate evaluate(const PointSet& batch, std::uint64_t seed, int y_samples,
                               Matrix* gradient) const override;
  const SpState& state() const { return state_; }

 private:
  SpState state_;
};

}  // namespace tesbo

#endif  // TESBO_TES_SAMPLING_HPP
