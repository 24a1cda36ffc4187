#ifndef TESBO_BASELINES_HPP
#define TESBO_BASELINES_HPP

#include "tesbo/gp.hpp"
#include "tesbo/optimize.hpp"

#include <string>
#include <vector>

namespace tesbo {

struct IncumbentState {
  double best_observed = 0.0;  // max of y_D, the EI threshold
  double beta = 1.0;           // UCB exploration weight

  // Throws std::invalid_argument on an empty dataset.
  static IncumbentState from_posterior(const GPPosterior& posterior, int iteration);
};

// 2·log(d·t²·π²/6), t ≥ 1.
double ucb_beta(Eigen::Index dim, int iteration);

// E[max(0, f − best)] for f ~ N(mean, sd²).
double expected_improvement(double mean, double sd, double best);

double ei(const GPPosterior& posterior, const Eigen::Ref<const Vector>& x, double best_observed,
          Vector* gradient = nullptr);
double ucb(const GPPosterior& posterior, const Eigen::Ref<const Vector>& x, double beta,
           Vector* gradient = nullptr);

struct BaselineOptConfig {
  int restarts = 20;
  int pool = 1000;
  AscentOptions ascent{100, 1e-9, 0.02};
};

AscentResult maximize_ei(const GPPosterior& posterior, double best_observed, const Domain& domain,
                         const BaselineOptConfig& config, Rng& rng);
AscentResult maximize_ucb(const GPPosterior& posterior, double beta, const Domain& domain,
                          const BaselineOptConfig& config, Rng& rng);

enum class LieStrategy { max, min, mean };
LieStrategy parse_lie_strategy(const std::string& name);

struct ConstantLiarResult {
  PointSet batch;
  std::vector<double> selection_ei;  // EI of each point when it was chosen
};

// Greedy EI batch: after each pick, the point is added with a fabricated
// observation and the posterior is refit with the same hyperparameters.
ConstantLiarResult constant_liar_batch(const GPPosterior& posterior, int batch_size, LieStrategy lie,
                                       const Domain& domain, const BaselineOptConfig& config, Rng& rng);

}  // namespace tesbo

#endif  // TESBO_BASELINES_HPP
