#include "tesbo/types.hpp"

#include <cmath>
#include <sstream>

namespace tesbo {

void KernelHyperparams::validate(Eigen::Index expected_dim) const {
  if (!(signal_variance > 0.0) || !std::isfinite(signal_variance)) {
    throw std::invalid_argument("signal_variance must be positive and finite");
  }
  if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance)) {
    throw std::invalid_argument("noise_variance must be nonnegative and finite");
  }
  if (lengthscales.size() == 0) {
    throw std::invalid_argument("lengthscales must be nonempty");
  }
  for (Eigen::Index i = 0; i < lengthscales.size(); ++i) {
    if (!(lengthscales(i) > 0.0) || !std::isfinite(lengthscales(i))) {
      throw std::invalid_argument("every lengthscale must be positive and finite");
    }
  }
  if (expected_dim >= 0 && lengthscales.size() != expected_dim) {
    std::ostringstream msg;
    msg << "lengthscale count " << lengthscales.size()
        << " does not match dimension " << expected_dim;
    throw std::invalid_argument(msg.str());
  }
}

Vector KernelHyperparams::to_log() const {
  const Eigen::Index d = lengthscales.size();
  Vector out(d + 2);
  out(0) = std::log(signal_variance);
  out.segment(1, d) = lengthscales.array().log();
  out(d + 1) = std::log(noise_variance);
  return out;
}

KernelHyperparams KernelHyperparams::from_log(const Vector& log_params) {
  if (log_params.size() < 3) {
    throw std::invalid_argument("log-hyperparameter vector needs at least 3 entries");
  }
  const Eigen::Index d = log_params.size() - 2;
  KernelHyperparams hp;
  hp.signal_variance = std::exp(log_params(0));
  hp.lengthscales = log_params.segment(1, d).array().exp();
  hp.noise_variance = std::exp(log_params(d + 1));
  return hp;
}

Domain::Domain(Vector lo, Vector hi) : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size() || lower.size() == 0) {
    throw std::invalid_argument("domain bounds must be nonempty and of equal length");
  }
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!(lower(i) < upper(i))) {
      throw std::invalid_argument("domain requires lower < upper in every dimension");
    }
  }
}

bool Domain::contains(const Eigen::Ref<const Vector>& x, double tol) const {
  if (x.size() != lower.size()) return false;
  return ((x.array() >= lower.array() - tol) && (x.array() <= upper.array() + tol)).all();
}

Vector Domain::clamp(const Eigen::Ref<const Vector>& x) const {
  return x.cwiseMax(lower).cwiseMin(upper);
}

Vector Domain::sample_uniform(Rng& rng) const {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector x(dim());
  for (Eigen::Index i = 0; i < dim(); ++i) {
    x(i) = lower(i) + unif(rng) * (upper(i) - lower(i));
  }
  return x;
}

PointSet Domain::sample_uniform(Eigen::Index count, Rng& rng) const {
  PointSet pts(count, dim());
  for (Eigen::Index r = 0; r < count; ++r) pts.row(r) = sample_uniform(rng).transpose();
  return pts;
}

Domain Domain::unit_cube(Eigen::Index dim) {
  return Domain(Vector::Zero(dim), Vector::Ones(dim));
}

Dataset::Dataset(PointSet x, Vector y) : inputs(std::move(x)), observations(std::move(y)) {
  if (inputs.rows() != observations.size()) {
    throw std::invalid_argument("dataset inputs and observations differ in length");
  }
}

void Dataset::append(const Eigen::Ref<const Vector>& x, double y) {
  if (inputs.cols() != 0 && inputs.cols() != x.size()) {
    throw std::invalid_argument("appended point has the wrong dimension");
  }
  const Eigen::Index n = inputs.rows();
  PointSet grown(n + 1, x.size());
  if (n > 0) grown.topRows(n) = inputs;
  grown.row(n) = x.transpose();
  inputs = std::move(grown);
  observations.conservativeResize(n + 1);
  observations(n) = y;
}

void Dataset::validate(const Domain* domain) const {
  if (inputs.rows() != observations.size()) {
    throw std::invalid_argument("dataset inputs and observations differ in length");
  }
  if (domain == nullptr) return;
  for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
    if (!domain->contains(inputs.row(i).transpose(), 1e-12)) {
      throw std::invalid_argument("dataset input lies outside the domain");
    }
  }
}

}  // namespace tesbo
