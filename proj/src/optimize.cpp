#include "tesbo/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace tesbo {

namespace {
Vector project(const Vector& x, const Vector& lower, const Vector& upper) {
  return x.cwiseMax(lower).cwiseMin(upper);
}
}  // namespace

AscentResult projected_gradient_ascent(const SmoothObjective& objective, const Vector& start,
                                       const Vector& lower, const Vector& upper,
                                       const AscentOptions& options) {
  const Vector width = upper - lower;
  AscentResult result;
  result.x = project(start, lower, upper);
  Vector grad(result.x.size());
  result.value = objective(result.x, &grad);
  if (!std::isfinite(result.value) || !grad.allFinite()) return result;

  const double max_width = width.maxCoeff();
  const double gnorm = grad.lpNorm<Eigen::Infinity>();
  double step = gnorm > 0.0 ? options.initial_step * max_width / gnorm : 1.0;
  const double step_min = 1e-12;
  const double step_max = 1e12;

  for (int it = 0; it < options.max_iterations; ++it) {
    result.iterations = it + 1;
    const Vector pg = project(result.x + grad, lower, upper) - result.x;
    if (pg.lpNorm<Eigen::Infinity>() <= options.tolerance) break;

    Vector direction = project(result.x + step * grad, lower, upper) - result.x;
    double slope = grad.dot(direction);
    if (slope <= 0.0) break;

    double lambda = 1.0;
    Vector candidate;
    Vector cand_grad(result.x.size());
    double cand_value = 0.0;
    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt) {
      candidate = result.x + lambda * direction;
      cand_value = objective(candidate, &cand_grad);
      if (std::isfinite(cand_value) && cand_grad.allFinite() &&
          cand_value >= result.value + 1e-4 * lambda * slope) {
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted) break;

    const Vector s = candidate - result.x;
    const Vector y = cand_grad - grad;
    const double sy = -s.dot(y);
    step = sy > 0.0 ? std::clamp(s.squaredNorm() / sy, step_min, step_max) : step_max;
    // Keep the first trial inside a few box widths.
    const double gmax = cand_grad.lpNorm<Eigen::Infinity>();
    if (gmax > 0.0) step = std::min(step, 10.0 * max_width / gmax);

    const double improvement = cand_value - result.value;
    result.x = candidate;
    result.value = cand_value;
    grad = cand_grad;
    if (s.lpNorm<Eigen::Infinity>() <= options.tolerance &&
        improvement <= options.tolerance * (1.0 + std::abs(result.value))) {
      break;
    }
  }
  return result;
}

AscentResult multistart_maximize(const SmoothObjective& objective, const Domain& domain,
                                 int restarts, int pool, Rng& rng, const AscentOptions& options) {
  if (restarts < 1) throw std::invalid_argument("multistart_maximize: restarts must be >= 1");
  pool = std::max(pool, restarts);
  const PointSet candidates = domain.sample_uniform(pool, rng);
  std::vector<double> values(static_cast<size_t>(pool));
  for (int i = 0; i < pool; ++i) values[i] = objective(candidates.row(i).transpose(), nullptr);

  std::vector<int> order(static_cast<size_t>(pool));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const bool fa = std::isfinite(values[a]);
    const bool fb = std::isfinite(values[b]);
    if (fa != fb) return fa;
    return values[a] > values[b];
  });

  AscentResult best;
  best.x = candidates.row(order[0]).transpose();
  best.value = values[order[0]];
  for (int r = 0; r < restarts; ++r) {
    AscentResult res = projected_gradient_ascent(objective, candidates.row(order[r]).transpose(),
                                                 domain.lower, domain.upper, options);
    if (std::isfinite(res.value) && (res.value > best.value || !std::isfinite(best.value))) {
      best = std::move(res);
    }
  }
  return best;
}

}  // namespace tesbo
