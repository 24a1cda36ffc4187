#include "tesbo/objectives.hpp"

#include "tesbo/gp.hpp"

#include <cmath>

namespace tesbo {

namespace {

constexpr double kHartmannAlpha[4] = {1.0, 1.2, 3.0, 3.2};

constexpr double kHartmann3A[4][3] = {{3.0, 10.0, 30.0}, {0.1, 10.0, 35.0}, {3.0, 10.0, 30.0}, {0.1, 10.0, 35.0}};
constexpr double kHartmann3P[4][3] = {{0.3689, 0.1170, 0.2673},
                                      {0.4699, 0.4387, 0.7470},
                                      {0.1091, 0.8732, 0.5547},
                                      {0.0381, 0.5743, 0.8828}};

constexpr double kHartmann6A[4][6] = {{10.0, 3.0, 17.0, 3.5, 1.7, 8.0},
                                      {0.05, 10.0, 17.0, 0.1, 8.0, 14.0},
                                      {3.0, 3.5, 1.7, 10.0, 17.0, 8.0},
                                      {17.0, 8.0, 0.05, 10.0, 0.1, 14.0}};
constexpr double kHartmann6P[4][6] = {{0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886},
                                      {0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991},
                                      {0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650},
                                      {0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381}};

template <int D, typename A, typename P>
double hartmann(const Eigen::Ref<const Vector>& x, const A& a, const P& p) {
  if (x.size() != D) throw std::invalid_argument("hartmann: wrong dimension");
  double out = 0.0;
  for (int i = 0; i < 4; ++i) {
    double inner = 0.0;
    for (int j = 0; j < D; ++j) inner += a[i][j] * (x(j) - p[i][j]) * (x(j) - p[i][j]);
    out += kHartmannAlpha[i] * std::exp(-inner);
  }
  return out;
}

// f* of the feature sample by dense screening plus gradient ascent.
double estimate_sample_maximum(const FeatureFunctionSample& sample, const Domain& domain, int pool, int restarts,
                               Rng& rng, Vector& argmax) {
  const SampledMaximum best = maximize_sampled_function(sample, domain, restarts, rng, pool);
  argmax = best.point;
  return best.value;
}

}  // namespace

double negated_branin(const Eigen::Ref<const Vector>& u) {
  if (u.size() != 2) throw std::invalid_argument("branin: wrong dimension");
  const double x1 = 15.0 * u(0) - 5.0;
  const double x2 = 15.0 * u(1);
  const double b = 5.1 / (4.0 * M_PI * M_PI);
  const double c = 5.0 / M_PI;
  const double t = 1.0 / (8.0 * M_PI);
  const double q = x2 - b * x1 * x1 + c * x1 - 6.0;
  return -(q * q + 10.0 * (1.0 - t) * std::cos(x1) + 10.0);
}

double negated_hartmann3(const Eigen::Ref<const Vector>& x) { return hartmann<3>(x, kHartmann3A, kHartmann3P); }

double negated_hartmann4(const Eigen::Ref<const Vector>& x) { return hartmann<4>(x, kHartmann6A, kHartmann6P); }

FeatureFunctionSample sample_prior_function(Eigen::Index dim, double signal_variance, double lengthscale,
                                            int feature_count, Rng& rng) {
  KernelHyperparams hp;
  hp.signal_variance = signal_variance;
  hp.lengthscales = Vector::Constant(dim, lengthscale);
  hp.noise_variance = 1e-6;
  const GPPosterior prior = fit_posterior(Dataset(PointSet(0, dim), Vector(0)), hp);
  return sample_posterior_function(prior, feature_count, rng);
}

Objective make_objective(const ObjectiveSpec& spec) {
  Objective out;
  out.name = spec.name;
  auto fixed_box = [&](Eigen::Index dim) {
    const Domain unit = Domain::unit_cube(dim);
    if (spec.domain.dim() != 0 && (spec.domain.lower != unit.lower || spec.domain.upper != unit.upper))
      throw UsageError(spec.name + " is defined on the unit cube of dimension " + std::to_string(dim));
  };
  if (spec.name == "branin") {
    fixed_box(2);
    out.domain = Domain::unit_cube(2);
    out.value = [](const Vector& x) { return negated_branin(x); };
    out.optimum = -0.39788735772973816;
  } else if (spec.name == "hartmann3") {
    fixed_box(3);
    out.domain = Domain::unit_cube(3);
    out.value = [](const Vector& x) { return negated_hartmann3(x); };
    out.optimum = 3.862779787332662;
    out.optimizer = Eigen::Vector3d(0.114589, 0.555649, 0.852547);
  } else if (spec.name == "hartmann4") {
    fixed_box(4);
    out.domain = Domain::unit_cube(4);
    out.value = [](const Vector& x) { return negated_hartmann4(x); };
    out.optimum = 3.729840584485592;
  } else if (spec.name == "gp-sample") {
    if (!(spec.signal_variance > 0.0) || !(spec.lengthscale > 0.0) || spec.feature_count < 1)
      throw UsageError("gp-sample: signal_variance, lengthscale and feature_count must be positive");
    out.domain = spec.domain.dim() != 0 ? spec.domain : Domain(Vector::Zero(2), Vector::Constant(2, 10.0));
    Rng rng(spec.seed);
    const auto sample = std::make_shared<FeatureFunctionSample>(
        sample_prior_function(out.domain.dim(), spec.signal_variance, spec.lengthscale, spec.feature_count, rng));
    out.value = [sample](const Vector& x) { return sample->value(x); };
    out.optimum =
        estimate_sample_maximum(*sample, out.domain, spec.optimum_pool, spec.optimum_restarts, rng, out.optimizer);
  } else {
    throw UsageError("unknown objective '" + spec.name + "' (expected gp-sample, branin, hartmann3 or hartmann4)");
  }
  return out;
}

}  // namespace tesbo
