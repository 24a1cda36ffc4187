#ifndef TESBO_ACQUISITION_OPT_HPP
#define TESBO_ACQUISITION_OPT_HPP

#include "tesbo/acquisition.hpp"
#include "tesbo/gp.hpp"
#include "tesbo/posterior_sampling.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace tesbo {

struct OptConfig {
  double learning_rate = 0.05;  // in normalized [0, 1]^d coordinates
  int iterations = 300;
  int y_samples = 1000;         // per Adam step
  int restarts = 0;             // 0 picks min(|X⋆|, 5)
  int rescore_factor = 10;      // final scoring uses rescore_factor × y_samples
  int max_nonfinite_restarts = 3;

  void validate() const;
};

struct OptDiagnostics {
  int restarts = 0;
  int nonfinite_restarts = 0;
  std::vector<double> initial_scores;
  std::vector<double> final_scores;
  std::vector<std::string> events;
};

struct OptResult {
  PointSet batch;
  double value = 0.0;
  double stderr = 0.0;
  OptDiagnostics diagnostics;
};

// Adam ascent on a seeded acquisition, one trajectory per restart. Restart j
// starts from the trusted points ranked by probability, rotated by j, padded
// with uniform points when |X⋆| < batch_size. Every initial and final
// candidate is rescored with one shared seed; the best is returned.
// `warm_starts` are extra initial batches, each run as its own trajectory.
OptResult optimize_acquisition(const StochasticAcquisition& acquisition, const TrustedSet& trusted,
                               const Domain& domain, int batch_size, const OptConfig& config, Rng& rng,
                               const std::vector<PointSet>& warm_starts = {});

// Entropy of the observation predictive N(μ_B, Σ_B + σ_n² I).
double batch_entropy(const GPPosterior& posterior, const PointSet& batch);

struct BatchGain {
  int size = 0;
  double value = 0.0;
  double stderr = 0.0;
  PointSet batch;
};

// Optimized acquisition value per batch size. Each size after the first is
// also warm-started from the previous best batch plus one point.
std::vector<BatchGain> gain_vs_batch_size(const StochasticAcquisition& acquisition, const TrustedSet& trusted,
                                          const Domain& domain, const std::vector<int>& sizes,
                                          const OptConfig& config, Rng& rng);

}  // namespace tesbo

#endif  // TESBO_ACQUISITION_OPT_HPP
