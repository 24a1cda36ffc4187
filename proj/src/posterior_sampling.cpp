#include "tesbo/posterior_sampling.hpp"

#include "tesbo/linalg.hpp"
#include "tesbo/normal.hpp"
#include "tesbo/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tesbo {

FeatureFunctionSample::FeatureFunctionSample(Matrix frequencies, Vector phases, Vector weights,
                                             double amplitude)
    : frequencies_(std::move(frequencies)),
      phases_(std::move(phases)),
      weights_(std::move(weights)),
      amplitude_(amplitude) {
  if (frequencies_.rows() != phases_.size() || phases_.size() != weights_.size()) {
    throw std::invalid_argument("feature sample: frequencies, phases and weights disagree in size");
  }
}

double FeatureFunctionSample::value(const Eigen::Ref<const Vector>& x, Vector* gradient) const {
  if (x.size() != dim()) throw std::invalid_argument("feature sample: dimension mismatch");
  const Vector arg = frequencies_ * x + phases_;
  if (gradient) {
    const Vector s = -(arg.array().sin() * weights_.array()).matrix();
    *gradient = amplitude_ * (frequencies_.transpose() * s);
  }
  return amplitude_ * (arg.array().cos() * weights_.array()).sum();
}

Matrix FeatureFunctionSample::features(const PointSet& points) const {
  Matrix arg = points * frequencies_.transpose();
  arg.rowwise() += phases_.transpose();
  return amplitude_ * arg.array().cos();
}

Vector FeatureFunctionSample::values(const PointSet& points) const {
  return features(points) * weights_;
}

FeatureFunctionSample sample_posterior_function(const GPPosterior& posterior, int feature_count, Rng& rng) {
  if (feature_count < 1) throw std::invalid_argument("sample_posterior_function: feature_count must be >= 1");
  const KernelHyperparams& hp = posterior.hyperparams();
  const Eigen::Index d = hp.dim();
  const Eigen::Index m = feature_count;

  // Spectral density of the SE kernel: w ~ N(0, Λ⁻²).
  Matrix freq = standard_normal_matrix(m, d, rng);
  freq.array().rowwise() /= hp.lengthscales.transpose().array();
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * M_PI);
  Vector phases(m);
  for (Eigen::Index i = 0; i < m; ++i) phases(i) = phase_dist(rng);
  const double amplitude = std::sqrt(2.0 * hp.signal_variance / static_cast<double>(m));

  Vector theta = standard_normal_matrix(m, 1, rng).col(0);
  const Dataset& data = posterior.dataset();
  if (!data.empty()) {
    // Pathwise update of a prior draw: θ ← θ + Φᵀ (ΦΦᵀ + σ_n² I)⁻¹ (y − Φθ − ε).
    FeatureFunctionSample prior(freq, phases, theta, amplitude);
    const Matrix phi = prior.features(data.inputs);
    Matrix gram = phi * phi.transpose();
    gram.diagonal().array() += hp.noise_variance;
    const JitteredCholesky chol = cholesky_with_jitter(gram, hp.signal_variance);
    const Vector eps = std::sqrt(hp.noise_variance) * standard_normal_matrix(data.size(), 1, rng).col(0);
    const Vector resid = data.observations - phi * theta - eps;
    theta += phi.transpose() * chol.solve(resid);
  }
  return FeatureFunctionSample(std::move(freq), std::move(phases), std::move(theta), amplitude);
}

SampledMaximum maximize_sampled_function(const FeatureFunctionSample& sample, const Domain& domain,
                                         int restarts, Rng& rng, int candidate_pool) {
  if (restarts < 1) throw std::invalid_argument("maximize_sampled_function: restarts must be >= 1");
  if (sample.dim() != domain.dim()) throw std::invalid_argument("maximize_sampled_function: dimension mismatch");
  SmoothObjective objective = [&](const Vector& x, Vector* grad) { return sample.value(x, grad); };
  AscentOptions options;
  options.max_iterations = 100;
  options.tolerance = 1e-9;
  options.initial_step = 0.02;
  const AscentResult res = multistart_maximize(objective, domain, restarts, candidate_pool, rng, options);
  return {domain.clamp(res.x), res.value};
}

Matrix comparison_matrix(Eigen::Index size, Eigen::Index owner) {
  if (owner < 0 || owner >= size) throw std::out_of_range("comparison_matrix: owner index out of range");
  Matrix j = Matrix::Identity(size, size);
  for (Eigen::Index i = 0; i < size; ++i) {
    if (i != owner) j(i, owner) = -1.0;
  }
  return j;
}

OrthantEstimate orthant_probabilities(const Eigen::Ref<const Vector>& mean,
                                      const Eigen::Ref<const Matrix>& cov, int draws, Rng& rng) {
  const Eigen::Index n = mean.size();
  if (n < 1) throw std::invalid_argument("orthant_probabilities: need at least one point");
  if (cov.rows() != n || cov.cols() != n) throw std::invalid_argument("orthant_probabilities: shape mismatch");
  OrthantEstimate out;
  if (n == 1) {
    out.probabilities = Vector::Ones(1);
    out.stderr = Vector::Zero(1);
    return out;
  }
  if (draws < 1) throw std::invalid_argument("orthant_probabilities: draws must be >= 1");
  const double scale = std::max(cov.diagonal().maxCoeff(), 1e-300);
  const JitteredCholesky chol = cholesky_with_jitter(cov, scale);

  Vector counts = Vector::Zero(n);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(n);
  for (int s = 0; s < draws; ++s) {
    for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
    const Vector f = mean + chol.lower * z;
    Eigen::Index arg = 0;
    for (Eigen::Index i = 1; i < n; ++i) {
      if (f(i) > f(arg)) arg = i;
    }
    counts(arg) += 1.0;
  }
  out.probabilities = counts / static_cast<double>(draws);
  out.stderr = (out.probabilities.array() * (1.0 - out.probabilities.array()) / static_cast<double>(draws)).sqrt();
  return out;
}

ProbabilityEstimate trusted_prob(const GPPosterior& posterior, const PointSet& points,
                                 Eigen::Index owner, int mc_samples, Rng& rng) {
  if (points.rows() < 1) throw std::invalid_argument("trusted_prob: need at least one point");
  if (owner < 0 || owner >= points.rows()) throw std::out_of_range("trusted_prob: owner index out of range");
  if (points.rows() == 1) return {1.0, 0.0};
  const Prediction pred = posterior.predict(points);
  const OrthantEstimate est = orthant_probabilities(pred.mean, pred.cov, mc_samples, rng);
  return {est.probabilities(owner), est.stderr(owner)};
}

TrustedSet build_trusted_set(const GPPosterior& posterior, int target_size, const Domain& domain,
                             const TrustedSetConfig& config, Rng& rng) {
  if (target_size < 1) throw std::invalid_argument("build_trusted_set: target size must be >= 1");
  std::vector<SampledMaximum> maxima;
  maxima.reserve(static_cast<size_t>(target_size));
  for (int i = 0; i < target_size; ++i) {
    const FeatureFunctionSample sample = sample_posterior_function(posterior, config.feature_count, rng);
    maxima.push_back(maximize_sampled_function(sample, domain, config.restarts, rng, config.candidate_pool));
  }

  std::vector<size_t> order(maxima.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return maxima[a].value > maxima[b].value; });

  const double radius = config.dedup_fraction * domain.width().minCoeff();
  std::vector<Vector> kept;
  for (size_t idx : order) {
    const Vector& p = maxima[idx].point;
    const bool distinct = std::all_of(kept.begin(), kept.end(),
                                      [&](const Vector& q) { return (p - q).norm() >= radius; });
    if (distinct) kept.push_back(p);
  }

  TrustedSet out;
  out.points.resize(static_cast<Eigen::Index>(kept.size()), domain.dim());
  for (size_t i = 0; i < kept.size(); ++i) out.points.row(static_cast<Eigen::Index>(i)) = kept[i].transpose();

  if (out.size() == 1) {
    out.probabilities = Vector::Ones(1);
    out.probability_stderr = Vector::Zero(1);
    return out;
  }
  const Prediction pred = posterior.predict(out.points);
  const OrthantEstimate est = orthant_probabilities(pred.mean, pred.cov, config.mc_samples, rng);
  out.probabilities = est.probabilities;
  out.probability_stderr = est.stderr;
  return out;
}

}  // namespace tesbo
