#ifndef TESBO_NORMAL_HPP
#define TESBO_NORMAL_HPP

#include "tesbo/types.hpp"

#include <vector>

namespace tesbo {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

double normal_pdf(double z);
double normal_cdf(double z);
// log Φ(z), accurate in the lower tail.
double normal_log_cdf(double z);
// Φ⁻¹(p) for p in (0, 1).
double normal_quantile(double p);
// Q⁻¹(q) = -Φ⁻¹(q): the z with upper-tail probability q, accurate for tiny q.
double normal_upper_quantile(double q);

// φ(z)/Φ(z). Uses the Mills-ratio continued fraction for z < -6, where Φ
// underflows or loses relative precision.
double inverse_mills_ratio(double z);

// Draws from N(mean, sd²) restricted to [threshold, ∞). Inverse-c.d.f. on the
// upper-tail probability, which stays accurate when Φ(threshold) is within
// 1e-12 of one; beyond ~37 standard deviations falls back to exponential
// rejection sampling.
double sample_lower_truncated_normal(double mean, double sd, double threshold, Rng& rng);

// P(X ≥ threshold) for X ~ N(mean, sd²).
double normal_upper_tail(double mean, double sd, double threshold);

// Gauss–Hermite rule for ∫ e^{-t²} g(t) dt, via Golub–Welsch.
struct GaussHermiteRule {
  Vector nodes;
  Vector weights;
};
const GaussHermiteRule& gauss_hermite(int order);

// Log-density of N(mean, cov) given the lower Cholesky factor of cov.
double gaussian_log_density(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Vector>& mean,
                            const Eigen::Ref<const Matrix>& chol_lower);

// Standard-normal draws, filled row-major for determinism across shapes.
Matrix standard_normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng);

double log_sum_exp(const Eigen::Ref<const Vector>& values);

}  // namespace tesbo

#endif  // TESBO_NORMAL_HPP
