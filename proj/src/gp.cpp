#include "tesbo/gp.hpp"

#include "tesbo/optimize.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace tesbo {

namespace {
constexpr double kLog2Pi = 1.83787706640934548356;

Matrix squared_scaled_distances(const PointSet& a, const PointSet& b, const Vector& lengthscales) {
  const Matrix as = a.array().rowwise() / lengthscales.transpose().array();
  const Matrix bs = b.array().rowwise() / lengthscales.transpose().array();
  Matrix d2 = (-2.0 * as * bs.transpose()).eval();
  d2.colwise() += as.rowwise().squaredNorm();
  d2.rowwise() += bs.rowwise().squaredNorm().transpose();
  return d2.cwiseMax(0.0);
}

void check_dims(const PointSet& pts, const KernelHyperparams& hp, const char* what) {
  if (pts.rows() > 0 && pts.cols() != hp.dim()) {
    std::ostringstream msg;
    msg << what << ": point dimension " << pts.cols() << " does not match kernel dimension "
        << hp.dim();
    throw std::invalid_argument(msg.str());
  }
}
}  // namespace

double se_kernel(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& x2,
                 const KernelHyperparams& hp) {
  if (x.size() != x2.size() || x.size() != hp.dim()) {
    throw std::invalid_argument("se_kernel: dimension mismatch");
  }
  const double q = ((x - x2).array() / hp.lengthscales.array()).square().sum();
  return hp.signal_variance * std::exp(-0.5 * q);
}

Matrix kernel_matrix(const PointSet& a, const PointSet& b, const KernelHyperparams& hp) {
  check_dims(a, hp, "kernel_matrix");
  check_dims(b, hp, "kernel_matrix");
  if (a.rows() == 0 || b.rows() == 0) return Matrix(a.rows(), b.rows());
  return hp.signal_variance * (-0.5 * squared_scaled_distances(a, b, hp.lengthscales)).array().exp();
}

Matrix kernel_gradient_wrt_query(const PointSet& anchors, const Eigen::Ref<const Vector>& x,
                                 const Eigen::Ref<const Vector>& kx, const KernelHyperparams& hp) {
  const Vector inv_l2 = hp.lengthscales.array().square().inverse();
  // (anchor - x) / ℓ² scaled by k
  Matrix diff = (-anchors).rowwise() + x.transpose();
  diff = -(diff.array().rowwise() * inv_l2.transpose().array());
  return diff.array().colwise() * kx.array();
}

GPPosterior::GPPosterior(Dataset data, KernelHyperparams hp) : data_(std::move(data)), hp_(std::move(hp)) {
  const Eigen::Index d = data_.empty() ? hp_.dim() : data_.dim();
  hp_.validate(d);
  data_.validate();
  if (data_.empty()) {
    chol_.lower.resize(0, 0);
    weights_.resize(0);
    return;
  }
  Matrix gram = kernel_matrix(data_.inputs, data_.inputs, hp_);
  gram.diagonal().array() += hp_.noise_variance;
  chol_ = cholesky_with_jitter(gram, hp_.signal_variance);
  weights_ = chol_.solve(data_.observations);
}

Prediction GPPosterior::predict(const PointSet& queries) const {
  check_dims(queries, hp_, "predict");
  Prediction out;
  Matrix kqq = kernel_matrix(queries, queries, hp_);
  if (data_.empty()) {
    out.mean = Vector::Zero(queries.rows());
    out.cov = std::move(kqq);
    return out;
  }
  const Matrix kdq = kernel_matrix(data_.inputs, queries, hp_);
  out.mean = kdq.transpose() * weights_;
  const Matrix v = chol_.solve_lower(kdq);
  out.cov = symmetrize(kqq - v.transpose() * v);
  for (Eigen::Index i = 0; i < out.cov.rows(); ++i) out.cov(i, i) = std::max(out.cov(i, i), 0.0);
  return out;
}

double GPPosterior::mean(const Eigen::Ref<const Vector>& x, Vector* gradient) const {
  if (data_.empty()) {
    if (gradient) *gradient = Vector::Zero(hp_.dim());
    return 0.0;
  }
  const Vector kx = kernel_matrix(data_.inputs, x.transpose(), hp_).col(0);
  if (gradient) *gradient = kernel_gradient_wrt_query(data_.inputs, x, kx, hp_).transpose() * weights_;
  return kx.dot(weights_);
}

void GPPosterior::mean_variance(const Eigen::Ref<const Vector>& x, double& mean, double& variance,
                                Vector* mean_gradient, Vector* variance_gradient) const {
  if (x.size() != hp_.dim()) throw std::invalid_argument("mean_variance: dimension mismatch");
  if (data_.empty()) {
    mean = 0.0;
    variance = hp_.signal_variance;
    if (mean_gradient) *mean_gradient = Vector::Zero(hp_.dim());
    if (variance_gradient) *variance_gradient = Vector::Zero(hp_.dim());
    return;
  }
  const Vector kx = kernel_matrix(data_.inputs, x.transpose(), hp_).col(0);
  const Vector v = chol_.solve(kx);
  mean = kx.dot(weights_);
  const double raw = hp_.signal_variance - kx.dot(v);
  variance = std::max(raw, 0.0);
  if (mean_gradient || variance_gradient) {
    const Matrix dk = kernel_gradient_wrt_query(data_.inputs, x, kx, hp_);
    if (mean_gradient) *mean_gradient = dk.transpose() * weights_;
    if (variance_gradient) {
      *variance_gradient = raw > 0.0 ? Vector(-2.0 * dk.transpose() * v) : Vector::Zero(hp_.dim());
    }
  }
}

GPPosterior fit_posterior(const Dataset& dataset, const KernelHyperparams& hp) {
  return GPPosterior(dataset, hp);
}

Prediction predict(const GPPosterior& posterior, const PointSet& queries) {
  if (queries.rows() == 0) throw std::invalid_argument("predict: queries must be nonempty");
  return posterior.predict(queries);
}

Matrix AugmentedConditioning::noise_mask() const {
  const Eigen::Index n = anchor_inputs.rows();
  Matrix mask = Matrix::Zero(n, n);
  for (Eigen::Index i = noiseless_count; i < n; ++i) mask(i, i) = 1.0;
  return mask;
}

AugmentedConditioning make_augmented_conditioning(const GPPosterior& posterior,
                                                  const PointSet& noiseless_inputs,
                                                  const Eigen::Ref<const Vector>& function_values) {
  if (noiseless_inputs.rows() != function_values.size()) {
    throw std::invalid_argument("augmented conditioning: one function value per noiseless input");
  }
  const Dataset& data = posterior.dataset();
  const Eigen::Index nx = noiseless_inputs.rows();
  const Eigen::Index nd = data.size();
  const Eigen::Index d = posterior.dim();
  AugmentedConditioning out;
  out.anchor_inputs.resize(nx + nd, d);
  if (nx > 0) out.anchor_inputs.topRows(nx) = noiseless_inputs;
  if (nd > 0) out.anchor_inputs.bottomRows(nd) = data.inputs;
  out.anchor_values.resize(nx + nd);
  out.anchor_values.head(nx) = function_values;
  out.anchor_values.tail(nd) = data.observations;
  out.noiseless_count = nx;
  return out;
}

Prediction predict_given_function_values(const GPPosterior& posterior,
                                         const AugmentedConditioning& anchors,
                                         const PointSet& queries) {
  const KernelHyperparams& hp = posterior.hyperparams();
  if (anchors.anchor_inputs.rows() != anchors.anchor_values.size()) {
    throw std::invalid_argument("augmented conditioning: inputs and values differ in length");
  }
  if (anchors.noiseless_count == 0) return posterior.predict(queries);

  Matrix gram = kernel_matrix(anchors.anchor_inputs, anchors.anchor_inputs, hp);
  gram.diagonal().tail(gram.rows() - anchors.noiseless_count).array() += hp.noise_variance;
  const JitteredCholesky chol = cholesky_with_jitter(gram, hp.signal_variance);

  const Matrix ktq = kernel_matrix(anchors.anchor_inputs, queries, hp);
  Prediction out;
  out.mean = ktq.transpose() * chol.solve(anchors.anchor_values);
  const Matrix v = chol.solve_lower(ktq);
  out.cov = symmetrize(kernel_matrix(queries, queries, hp) - v.transpose() * v);
  for (Eigen::Index i = 0; i < out.cov.rows(); ++i) out.cov(i, i) = std::max(out.cov(i, i), 0.0);
  return out;
}

AugmentedFactor::AugmentedFactor(const GPPosterior& posterior, const PointSet& noiseless_inputs)
    : hp_(posterior.hyperparams()) {
  const Dataset& data = posterior.dataset();
  const Eigen::Index nx = noiseless_inputs.rows();
  const Eigen::Index nd = data.size();
  anchors_.resize(nx + nd, hp_.dim());
  if (nx > 0) anchors_.topRows(nx) = noiseless_inputs;
  if (nd > 0) anchors_.bottomRows(nd) = data.inputs;
  noiseless_count_ = nx;
  observations_ = data.observations;
  Matrix gram = kernel_matrix(anchors_, anchors_, hp_);
  gram.diagonal().tail(nd).array() += hp_.noise_variance;
  chol_ = cholesky_with_jitter(gram, hp_.signal_variance);
}

LikelihoodValue log_marginal_likelihood(const Dataset& dataset, const KernelHyperparams& hp) {
  if (dataset.empty()) throw std::invalid_argument("log_marginal_likelihood: dataset is empty");
  hp.validate(dataset.dim());
  const Eigen::Index n = dataset.size();
  const Eigen::Index d = dataset.dim();

  const Matrix kf = kernel_matrix(dataset.inputs, dataset.inputs, hp);
  Matrix gram = kf;
  gram.diagonal().array() += hp.noise_variance;
  const JitteredCholesky chol = cholesky_with_jitter(gram, hp.signal_variance);
  const Vector alpha = chol.solve(dataset.observations);

  LikelihoodValue out;
  out.value = -0.5 * dataset.observations.dot(alpha) - 0.5 * chol.log_determinant() -
              0.5 * static_cast<double>(n) * kLog2Pi;

  const Matrix w = alpha * alpha.transpose() - chol.inverse();
  out.gradient.resize(d + 2);
  out.gradient(0) = 0.5 * (w.array() * kf.array()).sum();
  for (Eigen::Index c = 0; c < d; ++c) {
    const Vector col = dataset.inputs.col(c) / hp.lengthscales(c);
    Matrix d2 = (-2.0 * col * col.transpose()).eval();
    d2.colwise() += col.array().square().matrix();
    d2.rowwise() += col.array().square().matrix().transpose();
    out.gradient(1 + c) = 0.5 * (w.array() * kf.array() * d2.array()).sum();
  }
  out.gradient(d + 1) = 0.5 * hp.noise_variance * w.trace();
  return out;
}

HyperBounds hyperparameter_bounds(const Dataset& dataset, const Domain& domain,
                                  const HyperFitConfig& config) {
  const Eigen::Index d = domain.dim();
  double var_y = 0.0;
  if (dataset.size() > 1) {
    const double mu = dataset.observations.mean();
    var_y = (dataset.observations.array() - mu).square().sum() / static_cast<double>(dataset.size() - 1);
  }
  const double signal_ref = var_y > 0.0 ? var_y : 1.0;
  HyperBounds b;
  b.lower.resize(d + 2);
  b.upper.resize(d + 2);
  b.lower(0) = std::log(config.signal_min_factor * signal_ref);
  b.upper(0) = std::log(config.signal_max_factor * signal_ref);
  const Vector width = domain.width();
  for (Eigen::Index c = 0; c < d; ++c) {
    b.lower(1 + c) = std::log(config.lengthscale_min_factor * width(c));
    b.upper(1 + c) = std::log(config.lengthscale_max_factor * width(c));
  }
  b.lower(d + 1) = std::log(config.noise_min);
  b.upper(d + 1) = std::log(std::max(var_y, config.noise_min));
  return b;
}

KernelHyperparams fit_hyperparams(const Dataset& dataset, const Domain& domain,
                                  const HyperFitConfig& config, Rng& rng) {
  if (dataset.size() < 2) throw std::invalid_argument("fit_hyperparams: need at least 2 points");
  if (dataset.dim() != domain.dim()) throw std::invalid_argument("fit_hyperparams: dimension mismatch");
  const Eigen::Index d = domain.dim();
  const HyperBounds bounds = hyperparameter_bounds(dataset, domain, config);

  SmoothObjective objective = [&](const Vector& logp, Vector* grad) {
    try {
      const LikelihoodValue lml = log_marginal_likelihood(dataset, KernelHyperparams::from_log(logp));
      if (grad) *grad = lml.gradient;
      return lml.value;
    } catch (const NumericError&) {
      if (grad) *grad = Vector::Zero(logp.size());
      return -std::numeric_limits<double>::infinity();
    }
  };

  AscentOptions options;
  options.max_iterations = config.max_iterations;
  options.tolerance = 1e-7;
  options.initial_step = 0.05;

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::string> diagnostics;
  bool have_best = false;
  AscentResult best;
  const int restarts = std::max(1, config.restarts);
  for (int r = 0; r < restarts; ++r) {
    Vector start(d + 2);
    if (r == 0) {
      // Observation-scale signal, quarter-width lengthscales, 1% noise.
      start(0) = 0.5 * (bounds.lower(0) + bounds.upper(0));
      for (Eigen::Index c = 0; c < d; ++c) {
        start(1 + c) = std::log(0.25 * domain.width()(c));
      }
      start(d + 1) = bounds.upper(d + 1) + std::log(1e-2);
      start = start.cwiseMax(bounds.lower).cwiseMin(bounds.upper);
    } else {
      for (Eigen::Index i = 0; i < d + 2; ++i) {
        start(i) = bounds.lower(i) + unif(rng) * (bounds.upper(i) - bounds.lower(i));
      }
    }
    const AscentResult res = projected_gradient_ascent(objective, start, bounds.lower, bounds.upper, options);
    if (!std::isfinite(res.value)) {
      std::ostringstream msg;
      msg << "start " << r << ": non-finite likelihood";
      diagnostics.push_back(msg.str());
      continue;
    }
    if (!have_best || res.value > best.value) {
      best = res;
      have_best = true;
    }
  }
  if (!have_best) throw HyperFitError("fit_hyperparams: every start failed numerically", diagnostics);
  return KernelHyperparams::from_log(best.x);
}

}  // namespace tesbo
