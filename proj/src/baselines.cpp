#include "tesbo/baselines.hpp"

#include "tesbo/normal.hpp"

#include <cmath>
#include <stdexcept>

namespace tesbo {

IncumbentState IncumbentState::from_posterior(const GPPosterior& posterior, int iteration) {
  const Dataset& data = posterior.dataset();
  if (data.empty()) throw std::invalid_argument("IncumbentState: dataset is empty");
  return IncumbentState{data.observations.maxCoeff(), ucb_beta(posterior.dim(), iteration)};
}

double ucb_beta(Eigen::Index dim, int iteration) {
  if (iteration < 1) throw std::invalid_argument("ucb_beta: iteration must be >= 1");
  const double t = static_cast<double>(iteration);
  return 2.0 * std::log(static_cast<double>(dim) * t * t * M_PI * M_PI / 6.0);
}

double expected_improvement(double mean, double sd, double best) {
  const double gap = mean - best;
  if (!(sd > 0.0)) return std::max(0.0, gap);
  const double z = gap / sd;
  return std::max(0.0, gap * normal_cdf(z) + sd * normal_pdf(z));
}

double ei(const GPPosterior& posterior, const Eigen::Ref<const Vector>& x, double best_observed, Vector* gradient) {
  double mean, var;
  Vector dmean, dvar;
  posterior.mean_variance(x, mean, var, gradient ? &dmean : nullptr, gradient ? &dvar : nullptr);
  const double sd = std::sqrt(std::max(var, 0.0));
  const double value = expected_improvement(mean, sd, best_observed);
  if (gradient) {
    if (sd > 0.0) {
      const double z = (mean - best_observed) / sd;
      *gradient = normal_cdf(z) * dmean + normal_pdf(z) * dvar / (2.0 * sd);
    } else {
      *gradient = mean > best_observed ? dmean : Vector::Zero(x.size());
    }
  }
  return value;
}

double ucb(const GPPosterior& posterior, const Eigen::Ref<const Vector>& x, double beta, Vector* gradient) {
  if (beta < 0.0) throw std::invalid_argument("ucb: beta must be nonnegative");
  double mean, var;
  Vector dmean, dvar;
  posterior.mean_variance(x, mean, var, gradient ? &dmean : nullptr, gradient ? &dvar : nullptr);
  const double sd = std::sqrt(std::max(var, 0.0));
  const double root = std::sqrt(beta);
  if (gradient) *gradient = sd > 0.0 ? Vector(dmean + root * dvar / (2.0 * sd)) : dmean;
  return mean + root * sd;
}

AscentResult maximize_ei(const GPPosterior& posterior, double best_observed, const Domain& domain,
                         const BaselineOptConfig& config, Rng& rng) {
  const SmoothObjective f = [&](const Vector& x, Vector* g) { return ei(posterior, x, best_observed, g); };
  return multistart_maximize(f, domain, config.restarts, config.pool, rng, config.ascent);
}

AscentResult maximize_ucb(const GPPosterior& posterior, double beta, const Domain& domain,
                          const BaselineOptConfig& config, Rng& rng) {
  const SmoothObjective f = [&](const Vector& x, Vector* g) { return ucb(posterior, x, beta, g); };
  return multistart_maximize(f, domain, config.restarts, config.pool, rng, config.ascent);
}

LieStrategy parse_lie_strategy(const std::string& name) {
  if (name == "max") return LieStrategy::max;
  if (name == "min") return LieStrategy::min;
  if (name == "mean") return LieStrategy::mean;
  throw std::invalid_argument("unknown lie strategy '" + name + "' (expected max, min or mean)");
}

ConstantLiarResult constant_liar_batch(const GPPosterior& posterior, int batch_size, LieStrategy lie,
                                       const Domain& domain, const BaselineOptConfig& config, Rng& rng) {
  if (batch_size < 1) throw std::invalid_argument("constant_liar_batch: batch_size must be >= 1");
  const Dataset& data = posterior.dataset();
  if (data.empty()) throw std::invalid_argument("constant_liar_batch: dataset is empty");
  const Vector& y = data.observations;
  const double lie_value = lie == LieStrategy::max ? y.maxCoeff() : lie == LieStrategy::min ? y.minCoeff() : y.mean();

  ConstantLiarResult out;
  out.batch.resize(batch_size, domain.dim());
  GPPosterior current = posterior;
  for (int i = 0; i < batch_size; ++i) {
    const double best = current.dataset().observations.maxCoeff();
    const AscentResult pick = maximize_ei(current, best, domain, config, rng);
    out.batch.row(i) = pick.x.transpose();
    out.selection_ei.push_back(pick.value);
    if (i + 1 < batch_size) {
      Dataset augmented = current.dataset();
      augmented.append(pick.x, lie_value);
      current = fit_posterior(augmented, current.hyperparams());
    }
  }
  return out;
}

}  // namespace tesbo
