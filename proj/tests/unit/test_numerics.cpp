#include "tesbo/linalg.hpp"
#include "tesbo/normal.hpp"
#include "tesbo/optimize.hpp"

#include <boost/math/distributions/normal.hpp>
#include <gtest/gtest.h>

#include <cmath>

using namespace tesbo;

namespace {
const boost::math::normal standard;
}

TEST(Normal, CdfAndPdfMatchReference) {
  for (double z = -8.0; z <= 8.0; z += 0.37) {
    EXPECT_NEAR(normal_cdf(z), boost::math::cdf(standard, z), 1e-15);
    EXPECT_NEAR(normal_pdf(z), boost::math::pdf(standard, z), 1e-15);
  }
}

TEST(Normal, LogCdfAccurateInLowerTail) {
  for (double z : {-40.0, -20.0, -10.0, -3.0, 0.0, 2.0}) {
    const double ref = std::log(boost::math::cdf(standard, z));
    EXPECT_NEAR(normal_log_cdf(z), ref, 1e-12 * std::abs(ref) + 1e-15) << z;
  }
}

TEST(Normal, QuantilesRoundTrip) {
  for (double p : {1e-300, 1e-20, 1e-6, 0.01, 0.3, 0.5, 0.9, 1 - 1e-9}) {
    EXPECT_NEAR(normal_quantile(p), boost::math::quantile(standard, p), 1e-9 * (1 + std::abs(normal_quantile(p))));
  }
  for (double q : {1e-300, 1e-100, 1e-12, 0.2, 0.5}) {
    EXPECT_NEAR(normal_upper_quantile(q), -boost::math::quantile(standard, q), 1e-9 * (1 + normal_upper_quantile(q)));
  }
  EXPECT_THROW(normal_quantile(0.0), std::domain_error);
  EXPECT_THROW(normal_quantile(1.0), std::domain_error);
}

TEST(Normal, InverseMillsRatioContinuousAcrossBranch) {
  for (double z = -12.0; z <= 5.0; z += 0.25) {
    const double ref = std::exp(std::log(boost::math::pdf(standard, z)) - std::log(boost::math::cdf(standard, z)));
    EXPECT_NEAR(inverse_mills_ratio(z), ref, 1e-10 * ref) << z;
  }
  // Asymptote φ(z)/Φ(z) ≈ -z for very negative z.
  EXPECT_NEAR(inverse_mills_ratio(-1e4) / 1e4, 1.0, 1e-7);
}

TEST(Normal, TruncatedSamplerMoments) {
  Rng rng(1);
  for (double threshold : {-1.0, 0.5, 3.0, 8.0}) {
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
      const double v = sample_lower_truncated_normal(0.0, 1.0, threshold, rng);
      ASSERT_GE(v, threshold);
      sum += v;
      sq += v * v;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    const double lam = boost::math::pdf(standard, threshold) / boost::math::cdf(boost::math::complement(standard, threshold));
    const double ref_mean = lam;
    const double ref_var = 1.0 + threshold * lam - lam * lam;
    EXPECT_NEAR(mean, ref_mean, 5 * std::sqrt(ref_var / n)) << threshold;
    EXPECT_NEAR(var, ref_var, 0.02 * ref_var) << threshold;
  }
  // Far tail: the draw stays just above the threshold.
  const double far = sample_lower_truncated_normal(1.0, 2.0, 1.0 + 2.0 * 50.0, rng);
  EXPECT_GE(far, 101.0);
  EXPECT_LT(far, 101.5);
}

TEST(Normal, UpperTail) {
  EXPECT_NEAR(normal_upper_tail(1.0, 2.0, 3.0), 1.0 - boost::math::cdf(standard, 1.0), 1e-15);
  EXPECT_GT(normal_upper_tail(0.0, 1.0, 30.0), 0.0);
}

TEST(GaussHermite, ExactForPolynomials) {
  for (int order : {8, 32, 64}) {
    const GaussHermiteRule& rule = gauss_hermite(order);
    ASSERT_EQ(rule.nodes.size(), order);
    // ∫ t^{2k} e^{-t²} dt = Γ(k + 1/2)
    for (int k = 0; k < std::min(order, 10); ++k) {
      const double quad = (rule.weights.array() * rule.nodes.array().pow(2 * k)).sum();
      const double ref = std::tgamma(k + 0.5);
      EXPECT_NEAR(quad, ref, 1e-11 * ref) << order << " " << k;
      const double odd = (rule.weights.array() * rule.nodes.array().pow(2 * k + 1)).sum();
      EXPECT_NEAR(odd, 0.0, 1e-10 * ref);
    }
  }
  EXPECT_EQ(&gauss_hermite(64), &gauss_hermite(64));
}

TEST(GaussianLogDensity, MatchesDirectFormula) {
  Matrix cov(2, 2);
  cov << 2.0, 0.3, 0.3, 0.5;
  Vector mean(2), y(2);
  mean << 0.1, -0.4;
  y << 1.0, 0.2;
  const Matrix l = Eigen::LLT<Matrix>(cov).matrixL();
  const Vector r = y - mean;
  const double ref = -std::log(2 * M_PI) - 0.5 * std::log(cov.determinant()) - 0.5 * r.dot(cov.inverse() * r);
  EXPECT_NEAR(gaussian_log_density(y, mean, l), ref, 1e-13);
}

TEST(LogSumExp, StableForLargeValues) {
  Vector v(3);
  v << 1000.0, 1000.0, -1e300;
  EXPECT_NEAR(log_sum_exp(v), 1000.0 + std::log(2.0), 1e-12);
}

TEST(StandardNormalMatrix, DeterministicRowMajor) {
  Rng a(3), b(3);
  const Matrix m = standard_normal_matrix(3, 4, a);
  std::normal_distribution<double> g;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) EXPECT_EQ(m(i, j), g(b));
}

TEST(CholeskyWithJitter, EscalatesOnSingular) {
  Matrix ones = Matrix::Ones(3, 3);
  const JitteredCholesky c = cholesky_with_jitter(ones, 1.0);
  EXPECT_GT(c.jitter, 0.0);
  EXPECT_LE(c.jitter, 1e-4);
  EXPECT_LE((c.lower * c.lower.transpose() - ones).cwiseAbs().maxCoeff(), c.jitter * 1.0001);

  Matrix spd(2, 2);
  spd << 4.0, 1.0, 1.0, 3.0;
  const JitteredCholesky p = cholesky_with_jitter(spd, 1.0);
  EXPECT_EQ(p.jitter, 0.0);
  Vector rhs(2);
  rhs << 1.0, 2.0;
  EXPECT_LE((spd * p.solve(rhs) - rhs).norm(), 1e-14);
  EXPECT_NEAR(p.log_determinant(), std::log(11.0), 1e-14);
  EXPECT_LE((p.inverse() * spd - Matrix::Identity(2, 2)).norm(), 1e-14);

  Matrix bad = Matrix::Identity(2, 2);
  bad(0, 0) = -1.0;
  try {
    cholesky_with_jitter(bad, 1.0);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("jitter"), std::string::npos);
  }
}

TEST(ProjectedGradientAscent, ConcaveQuadratic) {
  Vector target(3);
  target << 0.2, -0.5, 2.0;  // last coordinate outside the box
  const SmoothObjective f = [&](const Vector& x, Vector* g) {
    if (g) *g = -2.0 * (x - target);
    return -(x - target).squaredNorm();
  };
  const Vector lo = Vector::Constant(3, -1.0), hi = Vector::Constant(3, 1.0);
  const AscentResult r = projected_gradient_ascent(f, Vector::Zero(3), lo, hi);
  EXPECT_NEAR(r.x(0), 0.2, 1e-6);
  EXPECT_NEAR(r.x(1), -0.5, 1e-6);
  EXPECT_EQ(r.x(2), 1.0);
}

TEST(MultistartMaximize, FindsGlobalMaximumOfMultimodal) {
  const SmoothObjective f = [](const Vector& x, Vector* g) {
    const double v = std::sin(13 * x(0)) * std::sin(27 * x(0));
    if (g) (*g)(0) = 13 * std::cos(13 * x(0)) * std::sin(27 * x(0)) + 27 * std::sin(13 * x(0)) * std::cos(27 * x(0));
    return v;
  };
  Rng rng(5);
  const AscentResult r = multistart_maximize(f, Domain::unit_cube(1), 10, 1000, rng);
  // Dense grid reference
  double best = -1e9;
  for (int i = 0; i <= 1000000; ++i) best = std::max(best, f(Vector::Constant(1, i * 1e-6), nullptr));
  EXPECT_NEAR(r.value, best, 1e-8);
}
