#include "tesbo/normal.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <limits>
#include <map>
#include <mutex>

namespace tesbo {

namespace {
constexpr double kSqrt2 = 1.41421356237309504880;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// R(x) = Φ(-x)/φ(x) for x > 0 by backward evaluation of the continued
// fraction 1/(x + 1/(x + 2/(x + 3/(x + ...)))).
double mills_ratio_continued_fraction(double x) {
  double tail = 0.0;
  for (int k = 60; k >= 1; --k) tail = k / (x + tail);
  return 1.0 / (x + tail);
}
}  // namespace

double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

double normal_log_cdf(double z) {
  if (z > -6.0) return std::log(normal_cdf(z));
  // log Φ(z) = log φ(z) + log R(-z)
  return -0.5 * z * z - kLogSqrt2Pi + std::log(mills_ratio_continued_fraction(-z));
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile: p must be in (0, 1)");
  return -kSqrt2 * boost::math::erfc_inv(2.0 * p);
}

double normal_upper_quantile(double q) {
  if (!(q > 0.0 && q < 1.0)) throw std::domain_error("normal_upper_quantile: q must be in (0, 1)");
  return kSqrt2 * boost::math::erfc_inv(2.0 * q);
}

double inverse_mills_ratio(double z) {
  if (z < -6.0) return 1.0 / mills_ratio_continued_fraction(-z);
  return normal_pdf(z) / normal_cdf(z);
}

double normal_upper_tail(double mean, double sd, double threshold) {
  if (!(sd > 0.0)) return mean >= threshold ? 1.0 : 0.0;
  return 0.5 * std::erfc((threshold - mean) / (sd * kSqrt2));
}

double sample_lower_truncated_normal(double mean, double sd, double threshold, Rng& rng) {
  if (!(sd > 0.0)) return std::max(mean, threshold);
  const double alpha = (threshold - mean) / sd;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (alpha < 37.0) {
    const double tail = 0.5 * std::erfc(alpha / kSqrt2);  // P(Z ≥ α)
    double u = unif(rng);
    while (u <= 0.0) u = unif(rng);
    const double q = u * tail;
    double z = (q >= 1.0) ? -std::numeric_limits<double>::infinity() : normal_upper_quantile(q);
    if (!std::isfinite(z) || z < alpha) z = alpha;
    return mean + sd * z;
  }
  // Robert (1995) exponential proposal for the far tail.
  const double rate = 0.5 * (alpha + std::sqrt(alpha * alpha + 4.0));
  std::exponential_distribution<double> expo(rate);
  while (true) {
    const double z = alpha + expo(rng);
    const double accept = std::exp(-0.5 * (z - rate) * (z - rate));
    if (unif(rng) <= accept) return mean + sd * z;
  }
}

const GaussHermiteRule& gauss_hermite(int order) {
  if (order < 1) throw std::invalid_argument("gauss_hermite: order must be positive");
  static std::mutex mutex;
  static std::map<int, GaussHermiteRule> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(order);
  if (it != cache.end()) return it->second;

  // Jacobi matrix of the physicists' Hermite recurrence.
  Matrix jacobi = Matrix::Zero(order, order);
  for (int i = 1; i < order; ++i) {
    const double off = std::sqrt(i / 2.0);
    jacobi(i, i - 1) = off;
    jacobi(i - 1, i) = off;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(jacobi);
  GaussHermiteRule rule;
  rule.nodes = eig.eigenvalues();
  rule.weights = std::sqrt(M_PI) * eig.eigenvectors().row(0).transpose().array().square();
  return cache.emplace(order, std::move(rule)).first->second;
}

double gaussian_log_density(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Vector>& mean,
                            const Eigen::Ref<const Matrix>& chol_lower) {
  const Vector white = chol_lower.triangularView<Eigen::Lower>().solve(y - mean);
  const double log_det = 2.0 * chol_lower.diagonal().array().log().sum();
  return -0.5 * white.squaredNorm() - 0.5 * log_det - static_cast<double>(y.size()) * kLogSqrt2Pi;
}

Matrix standard_normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) out(r, c) = normal(rng);
  }
  return out;
}

double log_sum_exp(const Eigen::Ref<const Vector>& values) {
  if (values.size() == 0) return -std::numeric_limits<double>::infinity();
  const double peak = values.maxCoeff();
  if (!std::isfinite(peak)) return peak;
  return peak + std::log((values.array() - peak).exp().sum());
}

}  // namespace tesbo
